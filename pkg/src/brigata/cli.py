"""Command-line front end: ``brigata {curate,classify,pmi,topics}``.

Option precedence is command-line flag, then ``--config`` JSON file, then the
built-in default. Exit codes: 0 success, 1 user or data error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .classify import ExperimentConfig, TrainConfig, run_experiment
from .corpus import CorpusError, IngestionRules, parse_tei, read_corpus, save_json, validate_corpus
from .lexstats import TOP_BOTTOM_HEADER, count_by_narrator, pmi, top_bottom, top_bottom_rows
from .report import HeatmapSpec, emit_csv, emit_f1_plot, emit_heatmap_svg
from .textproc import Stoplist
from .topics import (LdaConfig, ProfileMatrix, build_lda_docs, doc_topics, group_profile,
                     load_topic_labels, normalize_columns, topic_top_words, train_lda)

log = logging.getLogger("brigata")

SEED_ENV = "BRIGATA_SEED"

DEFAULTS = {
    "curate": {"rules": None, "require_complete": False},
    "classify": {"vocab": "full", "mode": "multinomial", "runs": 100, "seed": None, "out": ".",
                 "jobs": 0, "chunk_size": 100, "min_final": 20, "step": 0.5, "max_epochs": 2000,
                 "l2": 1e-4},
    "pmi": {"min_count": 5, "stoplist": None, "k": 5, "out": "."},
    "topics": {"k": 20, "iters": 1000, "burnin": 200, "optimize_every": 50, "alpha": 5.0,
               "beta": 0.01, "seed": None, "labels": None, "stoplist": None, "doc_size": 200,
               "min_len": 20, "top_n": 10, "out": "."},
}


class UserError(Exception):
    """Bad input or arguments; reported with exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _help(cmd: str, key: str, text: str) -> str:
    default = DEFAULTS[cmd][key]
    return f"{text} (default: {default})" if default is not None else text


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="brigata", description="Decameron storyteller profiling toolkit.")
    p.add_argument("--version", action="version", version=f"brigata {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("curate", help="convert a TEI P4 edition to the simplified JSON corpus")
    c.add_argument("tei_path")
    c.add_argument("--rules", default=None, help="ingestion rules JSON (default: bundled rules)")
    c.add_argument("--out", required=True, help="output JSON path")
    c.add_argument("--require-complete", action="store_true", default=None,
                   help="fail unless all 100 novelle with 10 per storyteller are present")
    c.add_argument("--config", help="JSON file of option defaults")

    c = sub.add_parser("classify", help="repeated storyteller classification experiment")
    c.add_argument("corpus_path")
    c.add_argument("--vocab", choices=["full", "top100"], help=_help("classify", "vocab", "vocabulary mode"))
    c.add_argument("--mode", choices=["multinomial", "ovr"], help=_help("classify", "mode", "classifier"))
    c.add_argument("--runs", type=int, help=_help("classify", "runs", "number of random splits"))
    c.add_argument("--seed", type=int, help=f"base seed (falls back to ${SEED_ENV})")
    c.add_argument("--out", help=_help("classify", "out", "output directory"))
    c.add_argument("--jobs", type=int, help="parallel worker processes (default: all cores)")
    c.add_argument("--chunk-size", type=int, help=_help("classify", "chunk_size", "tokens per chunk"))
    c.add_argument("--min-final", type=int, help=_help("classify", "min_final", "shortest kept trailing chunk"))
    c.add_argument("--step", type=float, help=_help("classify", "step", "gradient step"))
    c.add_argument("--max-epochs", type=int, help=_help("classify", "max_epochs", "epoch cap"))
    c.add_argument("--l2", type=float, help=_help("classify", "l2", "L2 penalty"))
    c.add_argument("--config", help="JSON file of option defaults")

    c = sub.add_parser("pmi", help="per-narrator PMI word lists")
    c.add_argument("corpus_path")
    c.add_argument("--min-count", type=int, help=_help("pmi", "min_count", "per-narrator count threshold"))
    c.add_argument("--stoplist", help="stoplist file (default: bundled PMI list)")
    c.add_argument("--k", type=int, help=_help("pmi", "k", "words per direction"))
    c.add_argument("--out", help=_help("pmi", "out", "output directory"))
    c.add_argument("--config", help="JSON file of option defaults")

    c = sub.add_parser("topics", help="LDA topic profiles by storyteller and gender")
    c.add_argument("corpus_path")
    c.add_argument("--k", type=int, help=_help("topics", "k", "number of topics"))
    c.add_argument("--iters", type=int, help=_help("topics", "iters", "Gibbs sweeps"))
    c.add_argument("--burnin", type=int, help=_help("topics", "burnin", "sweeps before alpha optimization"))
    c.add_argument("--optimize-every", type=int, help=_help("topics", "optimize_every", "alpha optimization interval"))
    c.add_argument("--alpha", type=float, help=_help("topics", "alpha", "initial alpha sum"))
    c.add_argument("--beta", type=float, help=_help("topics", "beta", "topic-word prior"))
    c.add_argument("--seed", type=int, help=f"sampler seed (falls back to ${SEED_ENV})")
    c.add_argument("--labels", help="topic label JSON selecting retained topics (default: keep all)")
    c.add_argument("--stoplist", help="stoplist file (default: bundled LDA list)")
    c.add_argument("--doc-size", type=int, help=_help("topics", "doc_size", "tokens per document"))
    c.add_argument("--min-len", type=int, help=_help("topics", "min_len", "shortest kept document"))
    c.add_argument("--top-n", type=int, help=_help("topics", "top_n", "top words per topic"))
    c.add_argument("--out", help=_help("topics", "out", "output directory"))
    c.add_argument("--config", help="JSON file of option defaults")
    return p


def resolve_options(args: argparse.Namespace) -> dict:
    """Merge flags over config-file values over defaults."""
    cmd = args.command
    opts = dict(DEFAULTS[cmd])
    if getattr(args, "config", None):
        try:
            conf = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UserError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(conf, dict):
            raise UserError("config file must hold a JSON object")
        unknown = sorted(set(conf) - set(opts))
        if unknown:
            raise UserError(f"unknown config keys for {cmd}: {unknown}")
        opts.update(conf)
    for key in opts:
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    if "seed" in opts and opts["seed"] is None:
        env = os.environ.get(SEED_ENV)
        if env is None:
            raise UserError(f"{cmd} needs --seed (or ${SEED_ENV}) for reproducibility")
        try:
            opts["seed"] = int(env)
        except ValueError:
            raise UserError(f"${SEED_ENV} must be an integer, got {env!r}") from None
    return opts


def _outdir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UserError(f"cannot create output directory {out}: {exc}") from None
    return out


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")
    print(f"wrote {path}")


def _load_corpus(path: str):
    try:
        return read_corpus(path)
    except OSError as exc:
        raise UserError(f"cannot read corpus {path}: {exc}") from None


def _stoplist(path: str | None, bundled: str) -> Stoplist:
    if path is None:
        return Stoplist.bundled(bundled)
    try:
        return Stoplist.from_file(path)
    except OSError as exc:
        raise UserError(f"cannot read stoplist {path}: {exc}") from None


def cmd_curate(args, opts) -> int:
    try:
        xml_text = Path(args.tei_path).read_text(encoding="utf-8")
        rules = (IngestionRules.from_json(Path(opts["rules"]).read_text(encoding="utf-8"))
                 if opts["rules"] else IngestionRules.default())
    except (OSError, json.JSONDecodeError) as exc:
        raise UserError(str(exc)) from None
    corpus = parse_tei(xml_text, rules, source_note=f"curated from {Path(args.tei_path).name}")
    report = validate_corpus(corpus)
    print(report.format())
    if opts["require_complete"] and not report.complete:
        print("error: corpus is incomplete", file=sys.stderr)
        return 1
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write(out, save_json(corpus))
    return 0


def cmd_classify(args, opts) -> int:
    corpus = _load_corpus(args.corpus_path)
    if not corpus.complete:
        raise UserError("classification needs a complete corpus:\n" + validate_corpus(corpus).format())
    config = ExperimentConfig(
        vocab_mode=opts["vocab"], classifier_mode=opts["mode"], n_runs=opts["runs"],
        chunk_size=opts["chunk_size"], min_final=opts["min_final"], seed=opts["seed"],
        train=TrainConfig(step=opts["step"], max_epochs=opts["max_epochs"], l2=opts["l2"]),
    )
    out = _outdir(opts["out"])
    start = time.perf_counter()
    result = run_experiment(corpus, config, jobs=opts["jobs"] or None)
    log.info("classification finished in %.1fs", time.perf_counter() - start)
    for name, mean in result.mean_by_name().items():
        flag = " *" if mean > 0.1 else ""
        print(f"{name:<12} mean F1 {mean:.3f}{flag}")
    _write(out / "f1.csv", emit_csv(result.rows(), result.HEADER))
    _write(out / "f1.svg", emit_f1_plot(result))
    return 0


def cmd_pmi(args, opts) -> int:
    corpus = _load_corpus(args.corpus_path)
    table = pmi(count_by_narrator(corpus), min_count=opts["min_count"],
                stoplist=_stoplist(opts["stoplist"], "pmi"))
    try:
        extremes = top_bottom(table, opts["k"])
    except ValueError as exc:
        raise UserError(str(exc)) from None
    out = _outdir(opts["out"])
    _write(out / "pmi.csv", emit_csv(table.rows(), table.HEADER))
    _write(out / "pmi_top.csv", emit_csv(top_bottom_rows(extremes), TOP_BOTTOM_HEADER))
    for name, (top, bottom) in extremes.items():
        print(f"{name:<12} high: {', '.join(t for t, _ in top)}")
        print(f"{'':<12} low:  {', '.join(t for t, _ in bottom)}")
    return 0


def _profile_outputs(out: Path, stem: str, profile: ProfileMatrix, title: str) -> None:
    normed = normalize_columns(profile)
    _write(out / f"{stem}.csv", emit_csv(profile.csv_rows() + normed.csv_rows(), ProfileMatrix.HEADER))
    _write(out / f"{stem}.svg", emit_heatmap_svg(HeatmapSpec.from_profile(profile, title=title)))
    _write(out / f"{stem}_normalized.svg",
           emit_heatmap_svg(HeatmapSpec.from_profile(normed, title=f"{title} (columns normalized)")))


def cmd_topics(args, opts) -> int:
    corpus = _load_corpus(args.corpus_path)
    docs, vocab = build_lda_docs(corpus, _stoplist(opts["stoplist"], "lda"),
                                 doc_size=opts["doc_size"], min_len=opts["min_len"])
    print(f"LDA documents: {len(docs)}")
    if not docs:
        raise UserError("no documents survive preprocessing")
    K = opts["k"]
    retained, labels = list(range(K)), [f"topic_{t}" for t in range(K)]
    if opts["labels"]:
        try:
            retained, labels = load_topic_labels(Path(opts["labels"]).read_text(encoding="utf-8"), K)
        except (OSError, ValueError) as exc:
            raise UserError(f"bad topic label file: {exc}") from None
    config = LdaConfig(K=K, iters=opts["iters"], burnin=opts["burnin"],
                       optimize_every=opts["optimize_every"], alpha0=opts["alpha"],
                       beta0=opts["beta"], seed=opts["seed"])
    start = time.perf_counter()
    state = train_lda(docs, config, vocab=vocab)
    log.info("LDA finished in %.1fs", time.perf_counter() - start)
    out = _outdir(opts["out"])

    label_of = dict(zip(retained, labels))
    topic_rows = [[t, rank, tok, repr(w)]
                  for t in range(K)
                  for rank, (tok, w) in enumerate(topic_top_words(state, t, opts["top_n"]), start=1)]
    _write(out / "topics.csv", emit_csv(topic_rows, ["topic", "rank", "token", "weight"]))
    theta = doc_topics(state)
    doc_rows = [[d, f"{doc.novella_ref[0]}.{doc.novella_ref[1]}", doc.storyteller, t,
                 label_of.get(t, ""), repr(float(theta[d, t]))]
                for d, doc in enumerate(docs) for t in range(K)]
    _write(out / "doc_topics.csv", emit_csv(
        doc_rows, ["doc", "novella", "storyteller", "topic_id", "topic_label", "theta"]))

    novella = group_profile(state, docs, "by_novella", retained_topics=retained, topic_labels=labels)
    _write(out / "novella_heatmap.svg",
           emit_heatmap_svg(HeatmapSpec.from_profile(normalize_columns(novella),
                                                     title="Novella topic mixtures (columns normalized)",
                                                     cell_px=12)))
    _profile_outputs(out, "storyteller_profile",
                     group_profile(state, docs, "by_storyteller", retained_topics=retained, topic_labels=labels),
                     "Topics by storyteller")
    _profile_outputs(out, "gender_profile",
                     group_profile(state, docs, "by_gender", retained_topics=retained, topic_labels=labels),
                     "Topics by storyteller gender")
    for t in range(K):
        words = ", ".join(tok for tok, _ in topic_top_words(state, t, opts["top_n"]))
        print(f"topic {t:>2} {label_of.get(t, '(dropped)')}: {words}")
    return 0


COMMANDS = {"curate": cmd_curate, "classify": cmd_classify, "pmi": cmd_pmi, "topics": cmd_topics}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = resolve_options(args)
        return COMMANDS[args.command](args, opts)
    except (UserError, CorpusError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error: %s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
