"""LDA by collapsed Gibbs sampling with asymmetric-alpha optimization, and
aggregation of document topic mixtures into storyteller / gender profiles."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import digamma

from .corpus import ROSTER, Corpus, NarratorRoster
from .textproc import Stoplist, build_vocabulary, chunk_tokens, remove_stopwords, tokenize

try:
    from numba import njit
except ImportError:  # pragma: no cover
    njit = None

log = logging.getLogger(__name__)


class LdaStateError(RuntimeError):
    """Count tables disagree with topic assignments."""


@dataclass(frozen=True)
class LdaDoc:
    token_ids: tuple[int, ...]
    novella_ref: tuple[int, int]
    storyteller: str

    def __len__(self) -> int:
        return len(self.token_ids)


def build_lda_docs(corpus: Corpus, stoplist: Stoplist, doc_size: int = 200,
                   min_len: int = 20) -> tuple[list[LdaDoc], list[str]]:
    """Cut each novella (stopwords removed) into ``doc_size`` windows, dropping
    a tail shorter than ``min_len``.

    Returns the documents and the vocabulary (token strings indexed by id).
    """
    pieces = []
    for nov in corpus.novelle:
        toks = remove_stopwords(tokenize(nov.text), stoplist)
        for chunk in chunk_tokens(toks, doc_size, min_len):
            pieces.append((chunk, nov.ref, nov.storyteller))
    if not pieces:
        return [], []
    vocab = build_vocabulary(p[0] for p in pieces)
    docs = [LdaDoc(tuple(vocab.ids(chunk)), ref, teller) for chunk, ref, teller in pieces]
    return docs, vocab.tokens


# ---------------------------------------------------------------------------
# Sampler state


@dataclass
class LdaState:
    words: np.ndarray       # flat token ids, documents concatenated
    doc_starts: np.ndarray  # D + 1 offsets into ``words``
    z: np.ndarray           # topic of each token
    ndt: np.ndarray         # D x K
    ntw: np.ndarray         # K x V
    nt: np.ndarray          # K
    alpha: np.ndarray       # K
    beta: float
    rng: np.random.Generator
    seed: int
    vocab: list[str] = field(default_factory=list)
    iteration: int = 0

    @property
    def n_topics(self) -> int:
        return len(self.nt)

    @property
    def n_docs(self) -> int:
        return len(self.doc_starts) - 1

    @property
    def vocab_size(self) -> int:
        return self.ntw.shape[1]

    @property
    def doc_lengths(self) -> np.ndarray:
        return np.diff(self.doc_starts)

    def check(self) -> None:
        """Raise LdaStateError unless every count table matches ``z``."""
        K, D = self.n_topics, self.n_docs
        doc_of = np.repeat(np.arange(D), self.doc_lengths)
        ndt = np.zeros_like(self.ndt)
        np.add.at(ndt, (doc_of, self.z), 1)
        ntw = np.zeros_like(self.ntw)
        np.add.at(ntw, (self.z, self.words), 1)
        problems = []
        if not np.array_equal(ndt, self.ndt):
            problems.append("doc-topic counts")
        if not np.array_equal(ntw, self.ntw):
            problems.append("topic-word counts")
        if not np.array_equal(self.ntw.sum(axis=1), self.nt):
            problems.append("topic totals")
        if not np.array_equal(self.ndt.sum(axis=1), self.doc_lengths):
            problems.append("document lengths")
        if self.nt.sum() != len(self.words) or (self.ndt < 0).any() or (self.ntw < 0).any():
            problems.append("totals/non-negativity")
        if not (np.all(self.alpha > 0) and self.beta > 0) or len(self.alpha) != K:
            problems.append("hyperparameters")
        if problems:
            raise LdaStateError("inconsistent LDA state: " + ", ".join(problems))

    def copy(self) -> "LdaState":
        rng = np.random.Generator(type(self.rng.bit_generator)())
        rng.bit_generator.state = self.rng.bit_generator.state
        return LdaState(self.words.copy(), self.doc_starts.copy(), self.z.copy(), self.ndt.copy(),
                        self.ntw.copy(), self.nt.copy(), self.alpha.copy(), self.beta, rng,
                        self.seed, list(self.vocab), self.iteration)


def init_state(docs: Sequence[LdaDoc], K: int = 20, alpha0: float = 5.0, beta0: float = 0.01,
               seed: int = 0, vocab: Sequence[str] | None = None) -> LdaState:
    """Uniform random topic for every token; alpha starts at ``alpha0 / K``."""
    if not docs:
        raise ValueError("no documents")
    if K < 1:
        raise ValueError("K must be positive")
    if alpha0 <= 0 or beta0 <= 0:
        raise ValueError("alpha0 and beta0 must be positive")
    lengths = np.array([len(d) for d in docs], dtype=np.int64)
    words = np.concatenate([np.asarray(d.token_ids, dtype=np.int64) for d in docs])
    V = len(vocab) if vocab is not None else int(words.max()) + 1
    if words.size and (words.min() < 0 or words.max() >= V):
        raise ValueError("token id outside vocabulary")
    doc_starts = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
    rng = np.random.default_rng(seed)
    z = rng.integers(0, K, size=len(words)).astype(np.int64)
    doc_of = np.repeat(np.arange(len(docs)), lengths)
    ndt = np.zeros((len(docs), K), dtype=np.int64)
    np.add.at(ndt, (doc_of, z), 1)
    ntw = np.zeros((K, V), dtype=np.int64)
    np.add.at(ntw, (z, words), 1)
    return LdaState(
        words=words, doc_starts=doc_starts, z=z, ndt=ndt, ntw=ntw, nt=ntw.sum(axis=1),
        alpha=np.full(K, alpha0 / K), beta=float(beta0), rng=rng, seed=seed,
        vocab=list(vocab) if vocab is not None else [str(i) for i in range(V)],
    )


def _sweep_python(words, doc_starts, z, ndt, ntw, nt, alpha, beta, uniforms):
    K = nt.shape[0]
    vbeta = ntw.shape[1] * beta
    cum = np.empty(K)
    for d in range(len(doc_starts) - 1):
        for i in range(doc_starts[d], doc_starts[d + 1]):
            w, t = words[i], z[i]
            ndt[d, t] -= 1
            ntw[t, w] -= 1
            nt[t] -= 1
            total = 0.0
            for k in range(K):
                total += (ndt[d, k] + alpha[k]) * (ntw[k, w] + beta) / (nt[k] + vbeta)
                cum[k] = total
            u = uniforms[i] * total
            t = 0
            while t < K - 1 and cum[t] <= u:
                t += 1
            z[i] = t
            ndt[d, t] += 1
            ntw[t, w] += 1
            nt[t] += 1


_sweep_kernel = njit(cache=True, nogil=True)(_sweep_python) if njit else _sweep_python


def gibbs_sweep(state: LdaState, check: bool = False, kernel: Callable | None = None) -> LdaState:
    """Resample every token once, in document then position order.

    Mutates and returns ``state``. The conditional for topic t is
    (N_dt + alpha_t)(N_tw + beta) / (N_t + V beta), inverted against one
    uniform draw per token from the state's generator.
    """
    uniforms = state.rng.random(len(state.words))
    (kernel or _sweep_kernel)(state.words, state.doc_starts, state.z, state.ndt, state.ntw,
                              state.nt, state.alpha, state.beta, uniforms)
    state.iteration += 1
    if check:
        state.check()
    return state


def optimize_alpha(state: LdaState, max_rounds: int = 1000, tol: float = 1e-5,
                   floor: float = 1e-8) -> LdaState:
    """Fixed-point update of the asymmetric document-topic prior from the
    current doc-topic counts. Mutates and returns ``state``."""
    if state.iteration < 1:
        raise ValueError("optimize_alpha needs at least one completed sweep")
    ndt = state.ndt
    lengths = state.doc_lengths
    D = state.n_docs
    alpha = state.alpha.astype(float).copy()
    for _ in range(max_rounds):
        s = alpha.sum()
        num = digamma(ndt + alpha).sum(axis=0) - D * digamma(alpha)
        den = np.sum(digamma(lengths + s)) - D * digamma(s)
        new = np.maximum(alpha * num / den, floor)
        change = np.max(np.abs(new - alpha) / alpha)
        alpha = new
        if change < tol:
            break
    state.alpha = alpha
    return state


@dataclass(frozen=True)
class LdaConfig:
    K: int = 20
    iters: int = 1000
    burnin: int = 200
    optimize_every: int = 50
    alpha0: float = 5.0
    beta0: float = 0.01
    seed: int = 0
    check: bool = False


def train_lda(docs: Sequence[LdaDoc], config: LdaConfig = LdaConfig(),
              vocab: Sequence[str] | None = None,
              progress: Callable[[LdaState], None] | None = None) -> LdaState:
    """Initialize, then run ``iters`` sweeps, re-estimating alpha every
    ``optimize_every`` sweeps once past ``burnin``."""
    state = init_state(docs, config.K, config.alpha0, config.beta0, config.seed, vocab)
    if config.check:
        state.check()
    for it in range(1, config.iters + 1):
        gibbs_sweep(state, check=config.check)
        if config.optimize_every > 0 and it > config.burnin and it % config.optimize_every == 0:
            optimize_alpha(state)
            if config.check:
                state.check()
        if progress is not None:
            progress(state)
    return state


# ---------------------------------------------------------------------------
# Read-outs


def topic_word(state: LdaState) -> np.ndarray:
    """Smoothed topic-word distributions, K x V."""
    return (state.ntw + state.beta) / (state.nt[:, None] + state.vocab_size * state.beta)


def topic_top_words(state: LdaState, t: int, n: int = 10) -> list[tuple[str, float]]:
    if not 0 <= t < state.n_topics:
        raise IndexError(f"topic {t} out of range 0..{state.n_topics - 1}")
    phi = (state.ntw[t] + state.beta) / (state.nt[t] + state.vocab_size * state.beta)
    order = sorted(range(state.vocab_size), key=lambda w: (-phi[w], state.vocab[w]))
    return [(state.vocab[w], float(phi[w])) for w in order[:n]]


def doc_topic(state: LdaState, d: int) -> np.ndarray:
    if not 0 <= d < state.n_docs:
        raise IndexError(f"document {d} out of range 0..{state.n_docs - 1}")
    length = state.doc_starts[d + 1] - state.doc_starts[d]
    return (state.ndt[d] + state.alpha) / (length + state.alpha.sum())


def doc_topics(state: LdaState) -> np.ndarray:
    """All document mixtures, D x K."""
    return (state.ndt + state.alpha) / (state.doc_lengths[:, None] + state.alpha.sum())


# ---------------------------------------------------------------------------
# Profiles


@dataclass(frozen=True)
class ProfileMatrix:
    rows: tuple[str, ...]
    topics: tuple[int, ...]
    topic_labels: tuple[str, ...]
    values: np.ndarray
    normalized: bool = False

    def csv_rows(self) -> list[list]:
        return [[g, t, label, repr(float(self.values[i, j])), self.normalized]
                for i, g in enumerate(self.rows)
                for j, (t, label) in enumerate(zip(self.topics, self.topic_labels))]

    HEADER = ["group", "topic_id", "topic_label", "value", "normalized"]


def _groups_for(docs: Sequence[LdaDoc], grouping: str, roster: NarratorRoster):
    if grouping == "by_storyteller":
        return list(roster.names), [d.storyteller for d in docs]
    if grouping == "by_gender":
        label = {"woman": "women", "man": "men"}
        return ["women", "men"], [label[roster.gender[d.storyteller]] for d in docs]
    if grouping == "by_novella":
        refs = sorted({d.novella_ref for d in docs})
        return [f"{a}.{b}" for a, b in refs], [f"{a}.{b}" for a, b in (d.novella_ref for d in docs)]
    raise ValueError(f"unknown grouping {grouping!r}")


def group_profile(state: LdaState, docs: Sequence[LdaDoc], grouping: str = "by_storyteller",
                  roster: NarratorRoster = ROSTER, retained_topics: Sequence[int] | None = None,
                  topic_labels: Sequence[str] | None = None,
                  groups: Sequence[str] | None = None) -> ProfileMatrix:
    """Length-weighted mean document mixture per group, restricted to the
    retained topics. Groups default to the full roster (or both genders); a
    group with no documents is an error."""
    if len(docs) != state.n_docs:
        raise ValueError("docs do not match the trained state")
    retained = list(range(state.n_topics)) if retained_topics is None else list(retained_topics)
    bad = [t for t in retained if not 0 <= t < state.n_topics]
    if bad:
        raise ValueError(f"retained topics out of range: {bad}")
    labels = list(topic_labels) if topic_labels is not None else [f"topic_{t}" for t in retained]
    if len(labels) != len(retained):
        raise ValueError("one label per retained topic")
    default_groups, keys = _groups_for(docs, grouping, roster)
    groups = list(groups) if groups is not None else default_groups
    theta = doc_topics(state)
    weights = state.doc_lengths.astype(float)
    keys = np.array(keys, dtype=object)
    values = np.zeros((len(groups), len(retained)))
    for i, g in enumerate(groups):
        mask = keys == g
        if not mask.any():
            raise ValueError(f"group {g!r} has no documents")
        w = weights[mask]
        values[i] = (w @ theta[mask][:, retained]) / w.sum()
    return ProfileMatrix(tuple(groups), tuple(retained), tuple(labels), values, normalized=False)


def normalize_columns(m: ProfileMatrix) -> ProfileMatrix:
    """Min-max scale each column to [0, 1]; a constant column becomes zeros."""
    v = np.asarray(m.values, dtype=float)
    lo, hi = np.nanmin(v, axis=0), np.nanmax(v, axis=0)
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    out = np.where(span > 0, (v - lo) / safe, 0.0)
    return ProfileMatrix(m.rows, m.topics, m.topic_labels, out, normalized=True)


def load_topic_labels(text: str, K: int) -> tuple[list[int], list[str]]:
    """Parse ``{"retained": [{"id": int, "label": str}, ...]}``."""
    raw = json.loads(text)
    entries = raw.get("retained")
    if not isinstance(entries, list):
        raise ValueError("topic label file needs a 'retained' list")
    ids, labels = [], []
    for i, e in enumerate(entries):
        if not isinstance(e, dict) or not isinstance(e.get("id"), int) or not isinstance(e.get("label"), str):
            raise ValueError(f"retained[{i}] must have integer 'id' and string 'label'")
        if not 0 <= e["id"] < K:
            raise ValueError(f"retained[{i}].id={e['id']} outside 0..{K - 1}")
        if e["id"] in ids:
            raise ValueError(f"retained[{i}].id={e['id']} listed twice")
        ids.append(e["id"])
        labels.append(e["label"])
    return ids, labels
