"""Narrator classification: TF-IDF chunks, softmax / one-vs-rest logistic
regression trained by full-batch gradient descent, and the repeated
8/2-novelle-per-storyteller experiment."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import expit, log_expit, log_softmax, softmax

from .corpus import ROSTER, Corpus, NarratorRoster
from .features import IdfModel, SparseVector, fit_idf, stack, transform
from .textproc import build_vocabulary, chunk_tokens, restrict_to_top_k, tokenize

log = logging.getLogger(__name__)

MULTINOMIAL = "multinomial"
ONE_VS_REST = "one_vs_rest"
_MODE_ALIASES = {"multinomial": MULTINOMIAL, "ovr": ONE_VS_REST, "one_vs_rest": ONE_VS_REST}


def canonical_mode(mode: str) -> str:
    try:
        return _MODE_ALIASES[mode]
    except KeyError:
        raise ValueError(f"unknown classifier mode {mode!r}") from None


@dataclass(frozen=True)
class LabeledVector:
    x: SparseVector
    y: int
    novella_ref: tuple[int, int]


# ---------------------------------------------------------------------------
# Train/test split


@dataclass(frozen=True)
class SplitPlan:
    train: dict[str, tuple[tuple[int, int], ...]]
    test: dict[str, tuple[tuple[int, int], ...]]
    seed: int

    @property
    def train_refs(self) -> set[tuple[int, int]]:
        return {r for refs in self.train.values() for r in refs}

    @property
    def test_refs(self) -> set[tuple[int, int]]:
        return {r for refs in self.test.values() for r in refs}


def make_split(corpus: Corpus, seed: int, roster: NarratorRoster = ROSTER,
               n_test: int = 2) -> SplitPlan:
    """Per storyteller, draw ``n_test`` of their 10 novelle uniformly at random
    for test; the rest go to train."""
    if not corpus.complete:
        raise ValueError("make_split needs a complete corpus")
    rng = np.random.default_rng(seed)
    train, test = {}, {}
    for name in roster.names:
        refs = sorted(n.ref for n in corpus.by_storyteller(name))
        picked = set(rng.choice(len(refs), size=n_test, replace=False).tolist())
        test[name] = tuple(r for i, r in enumerate(refs) if i in picked)
        train[name] = tuple(r for i, r in enumerate(refs) if i not in picked)
    return SplitPlan(train=train, test=test, seed=seed)


# ---------------------------------------------------------------------------
# Logistic regression


@dataclass(frozen=True)
class TrainConfig:
    mode: str = MULTINOMIAL
    step: float = 0.5
    max_epochs: int = 2000
    l2: float = 1e-4
    tol: float = 1e-6


@dataclass
class LogRegModel:
    W: np.ndarray  # C x V
    b: np.ndarray  # C
    mode: str = MULTINOMIAL
    l2: float = 1e-4
    trace: list = field(default_factory=list)

    @property
    def n_classes(self) -> int:
        return self.W.shape[0]

    @property
    def dim(self) -> int:
        return self.W.shape[1]

    def scores(self, X) -> np.ndarray:
        return np.asarray(X @ self.W.T) + self.b

    def proba(self, X) -> np.ndarray:
        s = self.scores(X)
        return softmax(s, axis=1) if self.mode == MULTINOMIAL else expit(s)


def _softmax_core(Wt, b, X, Xt, y, l2):
    # Wt is V x C so both sparse products yield C-contiguous results
    n = X.shape[0]
    logp = log_softmax(X @ Wt + b, axis=1)
    rows = np.arange(n)
    loss = -logp[rows, y].mean() + 0.5 * l2 * np.vdot(Wt, Wt)
    R = np.exp(logp)
    R[rows, y] -= 1.0
    R /= n
    return loss, Xt @ R + l2 * Wt, R.sum(axis=0)


def softmax_loss_grad(W, b, X, y, l2):
    """Mean softmax cross-entropy plus (l2/2)*||W||^2 and its gradients
    with respect to W (C x V) and b."""
    X = sp.csr_matrix(X)
    loss, gWt, gb = _softmax_core(np.ascontiguousarray(W.T), b, X, X.T.tocsr(), np.asarray(y), l2)
    return loss, gWt.T, gb


def _binary_core(w, b, X, Xt, t, l2):
    n = X.shape[0]
    s = X @ w + b
    loss = -(t * log_expit(s) + (1 - t) * log_expit(-s)).mean() + 0.5 * l2 * np.dot(w, w)
    r = (expit(s) - t) / n
    return loss, Xt @ r + l2 * w, r.sum()


def binary_loss_grad(w, b, X, t, l2):
    """Mean sigmoid cross-entropy for 0/1 targets ``t`` plus (l2/2)*||w||^2."""
    X = sp.csr_matrix(X)
    return _binary_core(np.asarray(w, dtype=float), b, X, X.T.tocsr(), np.asarray(t, dtype=float), l2)


def _descend(fun: Callable, theta: np.ndarray, cfg: TrainConfig):
    """Full-batch gradient descent with a fixed step.

    A step that would raise the loss is rejected and the step halved, so the
    accepted trace never increases.
    """
    loss, grad = fun(theta)
    trace = [loss]
    step = cfg.step
    for _ in range(cfg.max_epochs):
        cand = theta - step * grad
        new_loss, new_grad = fun(cand)
        if not new_loss <= loss:
            step *= 0.5
            if step < 1e-12:
                break
            continue
        improvement = loss - new_loss
        theta, loss, grad = cand, new_loss, new_grad
        trace.append(loss)
        if improvement < cfg.tol:
            break
    return theta, trace


def _check_inputs(X, y, n_classes):
    data = X.data if sp.issparse(X) else np.asarray(X)
    if not np.all(np.isfinite(data)):
        raise ValueError("non-finite feature value")
    missing = sorted(set(range(n_classes)) - set(np.unique(y).tolist()))
    if missing:
        raise ValueError(f"classes absent from training data: {missing}")


def fit(X, y, n_classes: int, config: TrainConfig = TrainConfig()) -> LogRegModel:
    """Train on a design matrix (dense or CSR) and integer labels."""
    mode = canonical_mode(config.mode)
    X = sp.csr_matrix(X) if not sp.issparse(X) else X.tocsr()
    y = np.asarray(y, dtype=np.int64)
    _check_inputs(X, y, n_classes)
    V = X.shape[1]
    Xt = X.T.tocsr()

    if mode == MULTINOMIAL:
        C = n_classes
        grad = np.empty(V * C + C)

        def fun(theta):
            loss, gWt, gb = _softmax_core(theta[:-C].reshape(V, C), theta[-C:], X, Xt, y, config.l2)
            grad[:-C] = gWt.ravel()
            grad[-C:] = gb
            return loss, grad.copy()

        theta, trace = _descend(fun, np.zeros(V * C + C), config)
        W = np.ascontiguousarray(theta[:-C].reshape(V, C).T)
        return LogRegModel(W=W, b=theta[-C:].copy(), mode=mode, l2=config.l2, trace=trace)

    W = np.zeros((n_classes, V))
    b = np.zeros(n_classes)
    traces = []
    for c in range(n_classes):
        t = (y == c).astype(float)

        def fun(theta, t=t):
            loss, gw, gb = _binary_core(theta[:-1], theta[-1], X, Xt, t, config.l2)
            return loss, np.append(gw, gb)

        theta, trace = _descend(fun, np.zeros(V + 1), config)
        W[c], b[c] = theta[:-1], theta[-1]
        traces.append(trace)
    return LogRegModel(W=W, b=b, mode=mode, l2=config.l2, trace=traces)


def train(data: Sequence[LabeledVector], config: TrainConfig = TrainConfig(),
          n_classes: int = 10) -> LogRegModel:
    if not data:
        raise ValueError("no training data")
    X = stack([d.x for d in data])
    return fit(X, [d.y for d in data], n_classes, config)


def predict(model: LogRegModel, x: SparseVector) -> tuple[int, np.ndarray]:
    """Most probable class (lowest index on ties) and the class scores.

    Multinomial scores sum to one; one-vs-rest scores are independent sigmoids.
    """
    if x.dim != model.dim:
        raise ValueError(f"dimension mismatch: vector {x.dim}, model {model.dim}")
    s = model.W[:, x.indices] @ x.values + model.b
    p = softmax(s) if model.mode == MULTINOMIAL else expit(s)
    return int(np.argmax(p)), p


def predict_matrix(model: LogRegModel, X) -> np.ndarray:
    if X.shape[1] != model.dim:
        raise ValueError(f"dimension mismatch: matrix {X.shape[1]}, model {model.dim}")
    return np.argmax(model.scores(X), axis=1)


def f1_per_class(pred: Sequence[int], gold: Sequence[int], n_classes: int) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.int64)
    gold = np.asarray(gold, dtype=np.int64)
    if pred.shape != gold.shape:
        raise ValueError(f"length mismatch: {len(pred)} predictions, {len(gold)} labels")
    f1 = np.zeros(n_classes)
    for c in range(n_classes):
        tp = np.sum((pred == c) & (gold == c))
        fp = np.sum((pred == c) & (gold != c))
        fn = np.sum((pred != c) & (gold == c))
        # F1 = 2PR/(P+R) = 2tp / (2tp + fp + fn); zero when P + R = 0
        if tp > 0:
            f1[c] = 2 * tp / (2 * tp + fp + fn)
    return f1


# ---------------------------------------------------------------------------
# Repeated experiment


@dataclass(frozen=True)
class ExperimentConfig:
    vocab_mode: str = "full"  # "full" or "top100"
    classifier_mode: str = MULTINOMIAL
    n_runs: int = 100
    chunk_size: int = 100
    min_final: int = 20
    top_k: int = 100
    seed: int = 0
    train: TrainConfig = TrainConfig()

    def __post_init__(self):
        if self.vocab_mode not in ("full", "top100"):
            raise ValueError(f"vocab_mode must be 'full' or 'top100', got {self.vocab_mode!r}")
        object.__setattr__(self, "classifier_mode", canonical_mode(self.classifier_mode))


@dataclass
class ExperimentResult:
    f1: np.ndarray  # n_runs x C
    class_names: tuple[str, ...]
    config: ExperimentConfig

    @property
    def means(self) -> np.ndarray:
        return self.f1.mean(axis=0)

    @property
    def n_runs(self) -> int:
        return self.f1.shape[0]

    def mean_by_name(self) -> dict[str, float]:
        return dict(zip(self.class_names, self.means.tolist()))

    def rows(self) -> list[list]:
        return [[r, name, repr(float(self.f1[r, c])), self.config.vocab_mode, self.config.classifier_mode]
                for r in range(self.n_runs) for c, name in enumerate(self.class_names)]

    HEADER = ["run", "storyteller", "f1", "vocab_mode", "classifier_mode"]


@dataclass
class PreparedCorpus:
    """Chunked novelle, computed once and reused across runs."""
    chunks: dict[tuple[int, int], list[list[str]]]
    labels: dict[tuple[int, int], int]


def prepare_chunks(corpus: Corpus, config: ExperimentConfig,
                   roster: NarratorRoster = ROSTER) -> PreparedCorpus:
    streams = {n.ref: tokenize(n.text) for n in corpus.novelle}
    if config.vocab_mode == "top100":
        global_vocab = build_vocabulary(streams.values())
        k = min(config.top_k, len(global_vocab))
        streams = {ref: restrict_to_top_k(toks, global_vocab, k) for ref, toks in streams.items()}
    chunks = {ref: chunk_tokens(toks, config.chunk_size, config.min_final)
              for ref, toks in streams.items()}
    labels = {n.ref: roster.index(n.storyteller) for n in corpus.novelle}
    return PreparedCorpus(chunks=chunks, labels=labels)


@dataclass
class RunArtifacts:
    f1: np.ndarray
    idf: IdfModel
    model: LogRegModel
    n_train: int
    n_test: int


def run_split(prepared: PreparedCorpus, plan: SplitPlan, config: ExperimentConfig,
              n_classes: int = 10) -> RunArtifacts:
    """Fit vocabulary and idf on the training chunks only, train, score test chunks."""
    def gather(refs):
        chunks, ys = [], []
        for ref in sorted(refs):
            for ch in prepared.chunks[ref]:
                chunks.append(ch)
                ys.append(prepared.labels[ref])
        return chunks, np.array(ys, dtype=np.int64)

    train_chunks, y_train = gather(plan.train_refs)
    test_chunks, y_test = gather(plan.test_refs)
    vocab = build_vocabulary(train_chunks)
    idf = fit_idf(train_chunks, vocab)
    X_train = stack([transform(c, idf) for c in train_chunks], idf.dim)
    X_test = stack([transform(c, idf) for c in test_chunks], idf.dim)
    model = fit(X_train, y_train, n_classes, replace(config.train, mode=config.classifier_mode))
    pred = predict_matrix(model, X_test)
    return RunArtifacts(f1=f1_per_class(pred, y_test, n_classes), idf=idf, model=model,
                        n_train=len(train_chunks), n_test=len(test_chunks))


# worker-process state for parallel runs
_WORKER: dict = {}


def _init_worker(corpus, prepared, config, roster):
    _WORKER.update(corpus=corpus, prepared=prepared, config=config, roster=roster)


def _run_index(r: int) -> np.ndarray:
    w = _WORKER
    plan = make_split(w["corpus"], w["config"].seed + r, w["roster"])
    return run_split(w["prepared"], plan, w["config"], len(w["roster"].names)).f1


def run_experiment(corpus: Corpus, config: ExperimentConfig = ExperimentConfig(),
                   roster: NarratorRoster = ROSTER, jobs: int | None = 1) -> ExperimentResult:
    """Repeat split/train/evaluate ``n_runs`` times; run ``r`` uses seed + r.

    Results do not depend on ``jobs``.
    """
    if not corpus.complete:
        raise ValueError("run_experiment needs a complete corpus")
    prepared = prepare_chunks(corpus, config, roster)
    jobs = jobs or os.cpu_count() or 1
    args = (corpus, prepared, config, roster)
    if jobs <= 1 or config.n_runs <= 1:
        _init_worker(*args)
        rows = [_run_index(r) for r in range(config.n_runs)]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, config.n_runs),
                                 initializer=_init_worker, initargs=args) as pool:
            rows = list(pool.map(_run_index, range(config.n_runs)))
    for r, f1 in enumerate(rows):
        log.debug("run %d: mean F1 %.3f", r, f1.mean())
    return ExperimentResult(f1=np.vstack(rows), class_names=roster.names, config=config)
