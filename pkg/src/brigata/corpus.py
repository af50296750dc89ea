"""Document model for the Decameron: novelle, the brigata roster, TEI ingestion
and the simplified JSON interchange format."""

from __future__ import annotations

import html.entities
import json
import logging
import re
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import jsonschema

log = logging.getLogger(__name__)

N_DAYS = 10
N_POSITIONS = 10


class CorpusError(ValueError):
    """Base class for corpus ingestion and validation failures."""


class TeiParseError(CorpusError):
    def __init__(self, message: str, offset: int, line: int, column: int):
        super().__init__(f"{message} (byte offset {offset}, line {line}, column {column})")
        self.offset = offset
        self.line = line
        self.column = column


class StructureError(CorpusError):
    """Division layout of a TEI document does not match the ingestion rules."""


class ValidationError(CorpusError):
    def __init__(self, message: str, path: str | None = None):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


# ---------------------------------------------------------------------------
# Roster


@dataclass(frozen=True)
class NarratorRoster:
    names: tuple[str, ...]
    gender: Mapping[str, str]

    def __post_init__(self):
        if len(self.names) != 10 or len(set(self.names)) != 10:
            raise ValueError("roster needs 10 distinct names")
        if set(self.gender) != set(self.names):
            raise ValueError("gender mapping must cover exactly the roster names")
        genders = Counter(self.gender.values())
        if genders != Counter({"woman": 7, "man": 3}):
            raise ValueError(f"roster must have 7 women and 3 men, got {dict(genders)}")

    def index(self, name: str) -> int:
        return self.names.index(name)

    def canonical(self, name: str) -> str:
        """Map a case-insensitive spelling onto the canonical roster name."""
        key = name.strip().casefold()
        for n in self.names:
            if n.casefold() == key:
                return n
        raise ValidationError(f"unknown storyteller {name!r}")

    @property
    def women(self) -> tuple[str, ...]:
        return tuple(n for n in self.names if self.gender[n] == "woman")

    @property
    def men(self) -> tuple[str, ...]:
        return tuple(n for n in self.names if self.gender[n] == "man")


# Column order of the published PMI table; also the class index order.
ROSTER = NarratorRoster(
    names=("Panfilo", "Neifile", "Filomena", "Dioneo", "Fiammetta",
           "Emilia", "Filostrato", "Lauretta", "Elissa", "Pampinea"),
    gender={
        "Panfilo": "man", "Neifile": "woman", "Filomena": "woman", "Dioneo": "man",
        "Fiammetta": "woman", "Emilia": "woman", "Filostrato": "man",
        "Lauretta": "woman", "Elissa": "woman", "Pampinea": "woman",
    },
)


# ---------------------------------------------------------------------------
# Document model


@dataclass(frozen=True)
class Novella:
    day: int
    position: int
    storyteller: str
    text: str
    rubric: str | None = None

    @property
    def ref(self) -> tuple[int, int]:
        return (self.day, self.position)


@dataclass(frozen=True)
class FramePassage:
    label: str
    text: str


@dataclass(frozen=True)
class Corpus:
    novelle: tuple[Novella, ...]
    frame_passages: tuple[FramePassage, ...] = ()
    source_note: str = ""

    def __post_init__(self):
        object.__setattr__(self, "novelle", tuple(self.novelle))
        object.__setattr__(self, "frame_passages", tuple(self.frame_passages))

    @property
    def complete(self) -> bool:
        return validate_corpus(self).complete

    def by_storyteller(self, name: str) -> list[Novella]:
        return [n for n in self.novelle if n.storyteller == name]

    def __len__(self) -> int:
        return len(self.novelle)


def normalize_whitespace(text: str) -> str:
    return " ".join(text.split())


# ---------------------------------------------------------------------------
# Validation


@dataclass
class ValidationReport:
    storyteller_counts: dict[str, int]
    gaps: list[tuple[int, int]] = field(default_factory=list)
    duplicates: list[tuple[int, int]] = field(default_factory=list)
    empty_texts: list[tuple[int, int]] = field(default_factory=list)
    out_of_range: list[tuple[int, int]] = field(default_factory=list)
    unknown_storytellers: list[str] = field(default_factory=list)
    complete: bool = False

    @property
    def findings(self) -> list[str]:
        out = []
        for name, count in self.storyteller_counts.items():
            if count != 10:
                out.append(f"{name} appears {count} times (expected 10)")
        out += [f"unknown storyteller {name!r}" for name in self.unknown_storytellers]
        out += [f"({d},{p}) absent" for d, p in self.gaps]
        out += [f"({d},{p}) duplicated" for d, p in self.duplicates]
        out += [f"({d},{p}) has empty text" for d, p in self.empty_texts]
        out += [f"({d},{p}) out of range" for d, p in self.out_of_range]
        return out

    def format(self) -> str:
        lines = [f"novelle complete: {self.complete}"]
        lines += [f"  {name}: {c}" for name, c in self.storyteller_counts.items()]
        findings = self.findings
        lines.append(f"findings: {len(findings)}")
        lines += [f"  - {f}" for f in findings]
        return "\n".join(lines)


def validate_corpus(corpus: Corpus, roster: NarratorRoster = ROSTER) -> ValidationReport:
    counts = {name: 0 for name in roster.names}
    unknown = []
    seen: Counter[tuple[int, int]] = Counter()
    empty, out_of_range = [], []
    for nov in corpus.novelle:
        if nov.storyteller in counts:
            counts[nov.storyteller] += 1
        elif nov.storyteller not in unknown:
            unknown.append(nov.storyteller)
        if not (1 <= nov.day <= N_DAYS and 1 <= nov.position <= N_POSITIONS):
            out_of_range.append(nov.ref)
        seen[nov.ref] += 1
        if not normalize_whitespace(nov.text):
            empty.append(nov.ref)
    gaps = [(d, p) for d in range(1, N_DAYS + 1) for p in range(1, N_POSITIONS + 1)
            if (d, p) not in seen]
    dups = sorted(ref for ref, c in seen.items() if c > 1)
    complete = len(corpus.novelle) == N_DAYS * N_POSITIONS and all(c == 10 for c in counts.values())
    return ValidationReport(
        storyteller_counts=counts, gaps=gaps, duplicates=dups, empty_texts=empty,
        out_of_range=out_of_range, unknown_storytellers=unknown, complete=complete,
    )


# ---------------------------------------------------------------------------
# JSON interchange

CORPUS_SCHEMA = {
    "type": "object",
    "required": ["novelle"],
    "properties": {
        "source_note": {"type": "string"},
        "complete": {"type": "boolean"},
        "novelle": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["day", "position", "storyteller", "text"],
                "properties": {
                    "day": {"type": "integer", "minimum": 1, "maximum": N_DAYS},
                    "position": {"type": "integer", "minimum": 1, "maximum": N_POSITIONS},
                    "storyteller": {"type": "string"},
                    "rubric": {"type": ["string", "null"]},
                    "text": {"type": "string"},
                },
            },
        },
        "frame_passages": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["label", "text"],
                "properties": {"label": {"type": "string"}, "text": {"type": "string"}},
            },
        },
    },
}

_TOP_KEYS = set(CORPUS_SCHEMA["properties"])
_NOVELLA_KEYS = set(CORPUS_SCHEMA["properties"]["novelle"]["items"]["properties"])
_FRAME_KEYS = {"label", "text"}


def _format_path(parts: Iterable) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def load_json(json_text: str, roster: NarratorRoster = ROSTER) -> Corpus:
    try:
        doc = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}") from exc
    errors = list(jsonschema.Draft7Validator(CORPUS_SCHEMA).iter_errors(doc))
    if errors:
        err = min(errors, key=lambda e: (len(e.absolute_path), _format_path(e.absolute_path)))
        raise ValidationError(err.message, path=_format_path(err.absolute_path))

    for key in sorted(set(doc) - _TOP_KEYS):
        log.warning("ignoring unknown key %s", key)
    novelle = []
    seen: dict[tuple[int, int], int] = {}
    for i, item in enumerate(doc["novelle"]):
        for key in sorted(set(item) - _NOVELLA_KEYS):
            log.warning("ignoring unknown key novelle[%d].%s", i, key)
        try:
            name = roster.canonical(item["storyteller"])
        except ValidationError as exc:
            raise ValidationError(str(exc), path=f"novelle[{i}].storyteller") from None
        if not item["text"].strip():
            raise ValidationError("text is empty", path=f"novelle[{i}].text")
        ref = (item["day"], item["position"])
        if ref in seen:
            raise ValidationError(f"duplicate (day, position) {ref}, first at novelle[{seen[ref]}]",
                                  path=f"novelle[{i}]")
        seen[ref] = i
        novelle.append(Novella(day=item["day"], position=item["position"], storyteller=name,
                               text=item["text"], rubric=item.get("rubric")))
    frames = []
    for i, item in enumerate(doc.get("frame_passages", [])):
        for key in sorted(set(item) - _FRAME_KEYS):
            log.warning("ignoring unknown key frame_passages[%d].%s", i, key)
        frames.append(FramePassage(label=item["label"], text=item["text"]))

    corpus = Corpus(novelle=tuple(novelle), frame_passages=tuple(frames),
                    source_note=doc.get("source_note", ""))
    if "complete" in doc and doc["complete"] != corpus.complete:
        log.warning("stored complete=%s disagrees with contents; using %s",
                    doc["complete"], corpus.complete)
    return corpus


def save_json(corpus: Corpus) -> str:
    doc = {
        "source_note": corpus.source_note,
        "complete": corpus.complete,
        "novelle": [
            {"day": n.day, "position": n.position, "storyteller": n.storyteller,
             "rubric": n.rubric, "text": n.text}
            for n in corpus.novelle
        ],
        "frame_passages": [{"label": f.label, "text": f.text} for f in corpus.frame_passages],
    }
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


def read_corpus(path: str | Path, roster: NarratorRoster = ROSTER) -> Corpus:
    return load_json(Path(path).read_text(encoding="utf-8"), roster=roster)


# ---------------------------------------------------------------------------
# TEI ingestion


@dataclass(frozen=True)
class IngestionRules:
    deny_elements: frozenset[str]
    day_div_type: str
    novella_div_type: str
    teller_table: Mapping[tuple[int, int], str]
    rubric_elements: frozenset[str] = frozenset()
    teller_attribute: str = "who"

    @classmethod
    def from_dict(cls, raw: dict) -> "IngestionRules":
        missing = {"deny_elements", "day_div_type", "novella_div_type"} - set(raw)
        if missing:
            raise ValidationError(f"rules missing keys: {sorted(missing)}")
        table = {}
        for key, name in raw.get("teller_table", {}).items():
            m = re.fullmatch(r"\s*(\d+)\s*,\s*(\d+)\s*", key)
            if not m:
                raise ValidationError(f"bad teller_table key {key!r}; expected 'day,position'")
            table[(int(m.group(1)), int(m.group(2)))] = name
        return cls(
            deny_elements=frozenset(raw["deny_elements"]),
            day_div_type=raw["day_div_type"],
            novella_div_type=raw["novella_div_type"],
            teller_table=table,
            rubric_elements=frozenset(raw.get("rubric_elements", [])),
            teller_attribute=raw.get("teller_attribute", "who"),
        )

    @classmethod
    def from_json(cls, text: str) -> "IngestionRules":
        return cls.from_dict(json.loads(text))

    @classmethod
    def default(cls) -> "IngestionRules":
        text = resources.files("brigata").joinpath("data/tei_rules_default.json").read_text("utf-8")
        return cls.from_json(text)


_XML_ENTITIES = {"amp", "lt", "gt", "quot", "apos"}
_ENTITY_RE = re.compile(r"&([A-Za-z][A-Za-z0-9]*);")


def _expand_html_entities(xml_text: str) -> str:
    # TEI P4 files lean on DTD-declared ISO entities that expat cannot resolve.
    def sub(m):
        name = m.group(1)
        if name in _XML_ENTITIES or name not in html.entities.name2codepoint:
            return m.group(0)
        return chr(html.entities.name2codepoint[name])
    return _ENTITY_RE.sub(sub, xml_text)


def _byte_offset(text: str, line: int, column: int) -> int:
    lines = text.splitlines(keepends=True)
    return sum(len(l.encode("utf-8")) for l in lines[: line - 1]) + column


def _parse_xml(xml_text: str) -> ET.Element:
    try:
        return ET.fromstring(xml_text)
    except ET.ParseError as exc:
        if "undefined entity" not in str(exc):
            line, col = exc.position
            raise TeiParseError(f"malformed XML: {exc}", _byte_offset(xml_text, line, col), line, col) from None
    expanded = _expand_html_entities(xml_text)
    try:
        return ET.fromstring(expanded)
    except ET.ParseError as exc:
        line, col = exc.position
        raise TeiParseError(f"malformed XML: {exc}", _byte_offset(expanded, line, col), line, col) from None


def _local(tag) -> str:
    if not isinstance(tag, str):  # comments and processing instructions
        return ""
    return tag.rsplit("}", 1)[-1]


def _is_div(el: ET.Element) -> bool:
    return re.fullmatch(r"div\d?", _local(el.tag)) is not None


def _div_type(el: ET.Element) -> str:
    return (el.get("type") or "").strip().casefold()


def _describe(el: ET.Element) -> str:
    attrs = " ".join(f'{k}="{v}"' for k, v in sorted(el.attrib.items()))
    return f"<{_local(el.tag)} {attrs}>" if attrs else f"<{_local(el.tag)}>"


def _number(el: ET.Element, fallback: int) -> int:
    n = el.get("n")
    if n is None:
        return fallback
    m = re.search(r"(\d+)\s*$", n)
    if not m:
        raise StructureError(f"cannot read a number from n={n!r} on division {_describe(el)}")
    return int(m.group(1))


def _collect_text(el: ET.Element, deny: frozenset[str], skip: set[int], out: list[str]) -> None:
    """Depth-first text gathering; element boundaries become spaces."""
    name = _local(el.tag)
    if name and name not in deny and id(el) not in skip:
        out.append(" ")
        if el.text:
            out.append(el.text)
        for child in el:
            _collect_text(child, deny, skip, out)
        out.append(" ")
    if el.tail:
        out.append(el.tail)


def _text_of(el: ET.Element, deny: frozenset[str], skip: set[int] = frozenset()) -> str:
    out: list[str] = []
    # the element's own tail belongs to its parent
    name = _local(el.tag)
    if name in deny:
        return ""
    if el.text:
        out.append(el.text)
    for child in el:
        _collect_text(child, deny, set(skip), out)
    return normalize_whitespace("".join(out))


def parse_tei(xml_text: str, rules: IngestionRules | None = None,
              roster: NarratorRoster = ROSTER, source_note: str = "") -> Corpus:
    """Extract the novelle of a TEI P4 edition into a Corpus.

    Day and novella divisions are located by their ``type`` attribute; numbers
    come from ``n`` when it ends in digits, otherwise from document order.
    Storytellers come from the division's teller attribute when present, else
    from the rules' (day, position) table.
    """
    rules = rules or IngestionRules.default()
    root = _parse_xml(xml_text)
    day_type = rules.day_div_type.casefold()
    nov_type = rules.novella_div_type.casefold()

    day_divs = [el for el in root.iter() if _is_div(el) and _div_type(el) == day_type]
    day_ids = {id(el) for el in day_divs}
    if not day_divs:
        raise StructureError(f"no division with type={rules.day_div_type!r} found")

    # novella divisions must sit inside a day division
    parents = {id(c): p for p in root.iter() for c in p}
    for el in root.iter():
        if _is_div(el) and _div_type(el) == nov_type:
            p = parents.get(id(el))
            while p is not None and id(p) not in day_ids:
                p = parents.get(id(p))
            if p is None:
                raise StructureError(f"novella division {_describe(el)} is outside any day division")

    novelle: list[Novella] = []
    frames: list[FramePassage] = []
    seen: set[tuple[int, int]] = set()
    for d_ord, day_el in enumerate(day_divs, start=1):
        day = _number(day_el, d_ord)
        if not 1 <= day <= N_DAYS:
            raise StructureError(f"day division {_describe(day_el)} has day number {day} outside 1-{N_DAYS}")
        nov_divs = [el for el in day_el.iter() if el is not day_el and _is_div(el) and _div_type(el) == nov_type]
        if not nov_divs:
            raise StructureError(f"day division {_describe(day_el)} contains no division with type={rules.novella_div_type!r}")
        for p_ord, nov_el in enumerate(nov_divs, start=1):
            pos = _number(nov_el, p_ord)
            if not 1 <= pos <= N_POSITIONS:
                raise StructureError(f"novella division {_describe(nov_el)} has position {pos} outside 1-{N_POSITIONS}")
            if (day, pos) in seen:
                raise StructureError(f"novella division {_describe(nov_el)} repeats ({day},{pos})")
            seen.add((day, pos))

            rubric_els = [c for c in nov_el.iter() if _local(c.tag) in rules.rubric_elements]
            rubric = " ".join(_text_of(c, rules.deny_elements) for c in rubric_els) or None
            text = _text_of(nov_el, rules.deny_elements, {id(c) for c in rubric_els})
            if not text:
                raise ValidationError(f"novella ({day},{pos}) has no text after stripping", path=_describe(nov_el))

            teller = nov_el.get(rules.teller_attribute) or rules.teller_table.get((day, pos))
            if teller is None:
                raise ValidationError(f"no storyteller for ({day},{pos}) in XML or teller table")
            name = roster.canonical(teller)
            novelle.append(Novella(day=day, position=pos, storyteller=name, text=text, rubric=rubric))

        frame = _text_of(day_el, rules.deny_elements, {id(el) for el in nov_divs})
        if frame:
            frames.append(FramePassage(label=f"day {day}", text=frame))

    novelle.sort(key=lambda n: n.ref)
    return Corpus(novelle=tuple(novelle), frame_passages=tuple(frames), source_note=source_note)
