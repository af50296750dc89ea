import csv
import io
import logging
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brigata.classify import ExperimentConfig, ExperimentResult
from brigata.corpus import ROSTER
from brigata.report import HeatmapSpec, emit_csv, emit_f1_plot, emit_heatmap_svg, interpolate_color
from brigata.topics import ProfileMatrix

SVG = "{http://www.w3.org/2000/svg}"


def svg_elements(text, tag, cls=None):
    root = ET.fromstring(text.encode("utf-8"))
    return [e for e in root.iter(SVG + tag) if cls is None or e.get("class") == cls]


class TestCsv:
    def test_simple(self):
        assert emit_csv([["a", 1]], ["n", "v"]) == "n,v\na,1\n"

    def test_comma_is_quoted(self):
        assert emit_csv([["a,b", 1]], ["n", "v"]) == 'n,v\n"a,b",1\n'

    def test_quote_is_doubled(self):
        assert emit_csv([['say "sì"', 1]], ["n", "v"]) == 'n,v\n"say ""sì""",1\n'

    def test_line_breaks_quoted(self):
        assert emit_csv([["a\rb", "c\nd"]], ["x", "y"]) == 'x,y\n"a\rb","c\nd"\n'

    def test_nul_rejected(self):
        with pytest.raises(ValueError):
            emit_csv([["a\x00"]], ["x"])

    def test_ragged_rejected(self):
        with pytest.raises(ValueError, match="row 1"):
            emit_csv([["a", 1], ["b"]], ["n", "v"])

    cells = st.text(alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="\x00"),
                    max_size=8)

    @settings(max_examples=100)
    @given(st.lists(st.lists(cells, min_size=3, max_size=3), max_size=10))
    def test_round_trip(self, rows):
        text = emit_csv(rows, ["a", "b", "c"])
        back = list(csv.reader(io.StringIO(text, newline="")))
        assert back == [["a", "b", "c"]] + rows


class TestHeatmap:
    def spec(self, values, **kw):
        v = np.atleast_2d(np.asarray(values, dtype=float))
        return HeatmapSpec(v, tuple(f"r{i}" for i in range(v.shape[0])),
                           tuple(f"c{j}" for j in range(v.shape[1])), **kw)

    @pytest.mark.parametrize("value, color", [(1.0, "#0b3d91"), (0.0, "#f7f7f7")])
    def test_endpoints(self, value, color):
        rects = svg_elements(emit_heatmap_svg(self.spec([[value]])), "rect", "cell")
        assert len(rects) == 1 and rects[0].get("fill") == color

    def test_midpoint(self):
        assert interpolate_color("#000000", "#fefefe", 0.5) == "#7f7f7f"

    def test_storyteller_profile_shape(self):
        rng = np.random.default_rng(0)
        profile = ProfileMatrix(ROSTER.names, tuple(range(14)), tuple(f"tema {t}" for t in range(14)),
                                rng.random((10, 14)), normalized=True)
        text = emit_heatmap_svg(HeatmapSpec.from_profile(profile, title="Storytellers"))
        assert len(svg_elements(text, "rect", "cell")) == 140
        assert [e.text for e in svg_elements(text, "text", "row-label")] == list(ROSTER.names)
        assert len(svg_elements(text, "text", "col-label")) == 14

    def test_label_mismatch(self):
        with pytest.raises(ValueError, match="do not match"):
            emit_heatmap_svg(HeatmapSpec(np.zeros((2, 2)), ("a",), ("x", "y")))

    def test_non_finite(self):
        with pytest.raises(ValueError):
            emit_heatmap_svg(self.spec([[np.nan]]))

    def test_out_of_range_clamped_with_warning(self, caplog):
        with caplog.at_level(logging.WARNING, logger="brigata.report"):
            text = emit_heatmap_svg(self.spec([[1.7, -0.2]]))
        assert "clamped" in caplog.text
        fills = [r.get("fill") for r in svg_elements(text, "rect", "cell")]
        assert fills == ["#0b3d91", "#f7f7f7"]

    def test_labels_escaped(self):
        spec = HeatmapSpec(np.zeros((1, 1)), ("<a&b>",), ("c",))
        assert svg_elements(emit_heatmap_svg(spec), "text", "row-label")[0].text == "<a&b>"

    def test_deterministic(self):
        s = self.spec(np.random.default_rng(1).random((3, 4)))
        assert emit_heatmap_svg(s) == emit_heatmap_svg(s)


def result(f1):
    f1 = np.asarray(f1, dtype=float)
    return ExperimentResult(f1, ROSTER.names[:f1.shape[1]], ExperimentConfig())


class TestF1Plot:
    def test_groups_in_roster_order(self):
        text = emit_f1_plot(result(np.random.default_rng(0).random((5, 10))))
        groups = svg_elements(text, "g", "box-group")
        assert [g.get("data-label") for g in groups] == list(ROSTER.names)

    def test_baseline_once_at_one_tenth(self):
        lines = svg_elements(emit_f1_plot(result(np.full((3, 10), 0.3))), "line", "baseline")
        assert len(lines) == 1 and float(lines[0].get("data-value")) == 0.1

    def test_constant_scores_give_flat_box(self):
        f1 = np.random.default_rng(2).random((8, 2))
        f1[:, 0] = 0.5
        group = svg_elements(emit_f1_plot(result(f1)), "g", "box-group")[0]
        box = group.find(SVG + "rect")
        median = group.find(f"{SVG}line[@class='median']")
        assert float(box.get("height")) == 0
        assert box.get("y") == median.get("y1")
        assert float(group.get("data-mean")) == 0.5

    def test_box_spans_quartiles(self):
        # five runs 0, .25, .5, .75, 1: quartiles .25 and .75 on a 300px axis
        f1 = np.array([[0.0], [0.25], [0.5], [0.75], [1.0]])
        box = svg_elements(emit_f1_plot(result(f1)), "rect", "box")[0]
        assert float(box.get("height")) == pytest.approx(150)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            emit_f1_plot(result(np.zeros((0, 10))))

    def test_deterministic(self):
        r = result(np.random.default_rng(3).random((4, 10)))
        assert emit_f1_plot(r) == emit_f1_plot(r)
