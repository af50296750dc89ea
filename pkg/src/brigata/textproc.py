"""Tokenization, stopwords, chunking and vocabularies shared by every analysis."""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

_APOSTROPHES = {"’": "'", "ʼ": "'"}


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace and trim punctuation from both ends.

    Interior punctuation survives, so elided forms such as ``nell'animo`` stay
    a single token. Typographic apostrophes are mapped to ``'``.
    """
    tokens = []
    for piece in text.casefold().split():
        for src, dst in _APOSTROPHES.items():
            piece = piece.replace(src, dst)
        start, end = 0, len(piece)
        while start < end and _is_punct(piece[start]):
            start += 1
        while end > start and _is_punct(piece[end - 1]):
            end -= 1
        if start < end:
            tokens.append(piece[start:end])
    return tokens


def chunk_tokens(tokens: Sequence[str], chunk_size: int, min_final: int = 0) -> list[list[str]]:
    """Split into consecutive windows of ``chunk_size``; keep a short tail only
    if it has at least ``min_final`` tokens."""
    if chunk_size < 1:
        raise ValueError("chunk_size must be positive")
    if not 0 <= min_final <= chunk_size:
        raise ValueError("min_final must lie in [0, chunk_size]")
    chunks = [list(tokens[i:i + chunk_size]) for i in range(0, len(tokens), chunk_size)]
    if chunks and len(chunks[-1]) < chunk_size and len(chunks[-1]) < max(min_final, 1):
        chunks.pop()
    return chunks


@dataclass(frozen=True)
class Chunk:
    tokens: tuple[str, ...]
    novella_ref: tuple[int, int]
    storyteller: str
    index: int


@dataclass(frozen=True)
class Vocabulary:
    """Frozen token -> (index, frequency) map; indices ordered by descending
    frequency with lexicographic tie-break."""

    index: Mapping[str, int]
    frequency: Mapping[str, int]
    frozen: bool = True

    def __len__(self) -> int:
        return len(self.index)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def __getitem__(self, token: str) -> tuple[int, int]:
        return self.index[token], self.frequency[token]

    @property
    def tokens(self) -> list[str]:
        return sorted(self.index, key=self.index.__getitem__)

    def ids(self, tokens: Iterable[str]) -> list[int]:
        """Indices of in-vocabulary tokens, dropping the rest."""
        return [self.index[t] for t in tokens if t in self.index]


def build_vocabulary(token_streams: Iterable[Iterable[str]]) -> Vocabulary:
    counts: Counter[str] = Counter()
    for stream in token_streams:
        counts.update(stream)
    if not counts:
        raise ValueError("cannot build a vocabulary from empty token streams")
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    index = {tok: i for i, (tok, _) in enumerate(ordered)}
    return Vocabulary(index=MappingProxyType(index), frequency=MappingProxyType(dict(counts)))


def restrict_to_top_k(tokens: Iterable[str], vocab: Vocabulary, k: int) -> list[str]:
    if k < 1:
        raise ValueError("k must be positive")
    if k > len(vocab):
        raise ValueError(f"k={k} exceeds vocabulary size {len(vocab)}")
    idx = vocab.index
    return [t for t in tokens if idx.get(t, k) < k]


@dataclass(frozen=True)
class Stoplist:
    words: frozenset[str]
    provenance: str = ""

    def __post_init__(self):
        bad = [w for w in self.words if w != w.lower()]
        if bad:
            raise ValueError(f"stoplist entries must be lowercase: {sorted(bad)[:5]}")

    def __contains__(self, token: str) -> bool:
        return token in self.words

    def __len__(self) -> int:
        return len(self.words)

    @classmethod
    def parse(cls, text: str, provenance: str = "") -> "Stoplist":
        words = set()
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                words.add(line)
        return cls(frozenset(words), provenance)

    @classmethod
    def from_file(cls, path: str | Path) -> "Stoplist":
        return cls.parse(Path(path).read_text(encoding="utf-8"), provenance=str(path))

    @classmethod
    def bundled(cls, name: str) -> "Stoplist":
        """Load a shipped list: ``"pmi"`` or ``"lda"``."""
        fname = f"data/stoplist_{name}.txt"
        text = resources.files("brigata").joinpath(fname).read_text("utf-8")
        return cls.parse(text, provenance=f"brigata:{fname}")

    @classmethod
    def empty(cls) -> "Stoplist":
        return cls(frozenset(), "empty")


def remove_stopwords(tokens: Iterable[str], stoplist: Stoplist) -> list[str]:
    return [t for t in tokens if t not in stoplist.words]
