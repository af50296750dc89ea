"""TF-IDF sparse vectors over a frozen vocabulary."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .textproc import Vocabulary


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray  # strictly increasing int64
    values: np.ndarray   # float64, non-zero
    dim: int

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    @classmethod
    def from_dense(cls, x) -> "SparseVector":
        x = np.asarray(x, dtype=float)
        idx = np.flatnonzero(x)
        return cls(idx.astype(np.int64), x[idx].copy(), len(x))


@dataclass(frozen=True)
class IdfModel:
    vocab: Vocabulary
    idf: np.ndarray
    n_docs: int
    df: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.idf)


def fit_idf(chunks: Sequence[Sequence[str]], vocab: Vocabulary) -> IdfModel:
    """Smoothed idf: ln((1 + N) / (1 + df)) + 1 over ``N`` chunks."""
    if len(chunks) == 0:
        raise ValueError("fit_idf needs at least one chunk")
    df = np.zeros(len(vocab), dtype=np.int64)
    for chunk in chunks:
        ids = np.unique(vocab.ids(chunk))
        df[ids] += 1
    n = len(chunks)
    idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
    return IdfModel(vocab=vocab, idf=idf, n_docs=n, df=df)


def transform(chunk: Sequence[str], model: IdfModel) -> SparseVector:
    """Raw counts times idf, L2-normalized. A chunk with no in-vocabulary
    tokens maps to the empty vector (norm 0, not 1)."""
    counts = Counter(model.vocab.ids(chunk))
    if not counts:
        return SparseVector(np.zeros(0, dtype=np.int64), np.zeros(0), model.dim)
    idx = np.array(sorted(counts), dtype=np.int64)
    raw = np.array([counts[i] for i in idx], dtype=float) * model.idf[idx]
    return SparseVector(idx, raw / np.linalg.norm(raw), model.dim)


def stack(vectors: Sequence[SparseVector], dim: int | None = None) -> sp.csr_matrix:
    """Row-stack sparse vectors into a CSR matrix."""
    if dim is None:
        if not vectors:
            raise ValueError("need vectors or an explicit dim")
        dim = vectors[0].dim
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for i, v in enumerate(vectors):
        if v.dim != dim:
            raise ValueError(f"vector {i} has dimension {v.dim}, expected {dim}")
        indptr[i + 1] = indptr[i] + len(v)
    indices = np.concatenate([v.indices for v in vectors]) if vectors else np.zeros(0, np.int64)
    data = np.concatenate([v.values for v in vectors]) if vectors else np.zeros(0)
    return sp.csr_matrix((data, indices, indptr), shape=(len(vectors), dim))
