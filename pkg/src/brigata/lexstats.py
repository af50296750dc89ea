"""Per-narrator pointwise mutual information word profiles."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .corpus import ROSTER, Corpus, NarratorRoster
from .textproc import Stoplist, tokenize


@dataclass(frozen=True)
class NarratorCounts:
    counts: dict[str, Counter]  # narrator -> token counts
    totals: dict[str, int]
    corpus_counts: Counter
    corpus_total: int


def count_by_narrator(corpus: Corpus, roster: NarratorRoster | None = ROSTER) -> NarratorCounts:
    """Token counts over novella text; frame passages are not counted.

    Narrators come out in roster order, followed by any non-roster names in
    order of first appearance (only possible with ``roster=None``).
    """
    order = list(roster.names) if roster else []
    counts: dict[str, Counter] = {}
    for nov in corpus.novelle:
        if nov.storyteller not in order:
            order.append(nov.storyteller)
        counts.setdefault(nov.storyteller, Counter()).update(tokenize(nov.text))
    counts = {name: counts[name] for name in order if name in counts}
    corpus_counts: Counter = Counter()
    for c in counts.values():
        corpus_counts.update(c)
    return NarratorCounts(
        counts=counts,
        totals={name: sum(c.values()) for name, c in counts.items()},
        corpus_counts=corpus_counts,
        corpus_total=sum(corpus_counts.values()),
    )


@dataclass(frozen=True)
class PmiTable:
    scores: dict[str, list[tuple[str, float]]]  # descending score, ties lexicographic
    min_count: int
    stoplist_id: str
    log_base: float

    def rows(self) -> list[list]:
        return [[name, rank, tok, repr(score)]
                for name, entries in self.scores.items()
                for rank, (tok, score) in enumerate(entries, start=1)]

    HEADER = ["narrator", "rank", "token", "score"]


def pmi(counts: NarratorCounts, min_count: int = 5, stoplist: Stoplist | None = None,
        log_base: float = math.e) -> PmiTable:
    """Score log p(w|n)/p(w) for every eligible (narrator, word) pair.

    Probabilities use all tokens; stopwords and words seen fewer than
    ``min_count`` times by a narrator only drop out of that narrator's list.
    """
    if not counts.counts:
        raise ValueError("no narrator counts")
    stoplist = stoplist if stoplist is not None else Stoplist.empty()
    log_b = math.log(log_base)
    out = {}
    for name, c in counts.counts.items():
        total = counts.totals[name]
        entries = []
        for tok, n in c.items():
            if n < min_count or tok in stoplist:
                continue
            # one correctly rounded integer quotient, so equal ratios tie exactly
            ratio = (n * counts.corpus_total) / (total * counts.corpus_counts[tok])
            entries.append((tok, math.log(ratio) / log_b))
        entries.sort(key=lambda e: (-e[1], e[0]))
        out[name] = entries
    return PmiTable(scores=out, min_count=min_count, stoplist_id=stoplist.provenance, log_base=log_base)


def top_bottom(table: PmiTable, k: int = 5) -> dict[str, tuple[list[tuple[str, float]], list[tuple[str, float]]]]:
    """Highest and lowest ``k`` words per narrator; the lowest list runs from
    the most negative score upward. Equal scores order lexicographically."""
    out = {}
    for name, entries in table.scores.items():
        if len(entries) < k:
            raise ValueError(f"{name} has only {len(entries)} eligible tokens, need {k}")
        top = entries[:k]
        bottom = sorted(entries, key=lambda e: (e[1], e[0]))[:k]
        out[name] = (top, bottom)
    return out


TOP_BOTTOM_HEADER = ["narrator", "rank", "direction", "token", "score"]


def top_bottom_rows(extremes) -> list[list]:
    rows = []
    for name, (top, bottom) in extremes.items():
        for direction, entries in (("high", top), ("low", bottom)):
            for rank, (tok, score) in enumerate(entries, start=1):
                rows.append([name, rank, direction, tok, repr(score)])
    return rows
