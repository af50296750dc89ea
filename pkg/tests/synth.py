"""Synthetic corpora with known structure, shared by the test modules."""

import numpy as np

from brigata.corpus import ROSTER, Corpus, IngestionRules, Novella
from brigata.topics import LdaDoc

TELLERS = IngestionRules.default().teller_table


def _corpus(texts_by_ref, tellers=TELLERS, note="synthetic"):
    novelle = [Novella(d, p, tellers[(d, p)], texts_by_ref[(d, p)])
               for d in range(1, 11) for p in range(1, 11)]
    return Corpus(tuple(novelle), (), note)


def planted_corpus(seed=0, words_per_teller=50, novella_len=300):
    """Each storyteller draws words uniformly from a private vocabulary."""
    rng = np.random.default_rng(seed)
    texts = {}
    for (d, p), name in TELLERS.items():
        c = ROSTER.index(name)
        ids = rng.integers(0, words_per_teller, size=novella_len)
        texts[(d, p)] = " ".join(f"w{c}x{i}" for i in ids)
    return _corpus(texts)


def shuffled_label_corpus(seed=0, vocab_size=200, novella_len=250):
    """Every novella drawn from one Zipf-like distribution; storyteller
    labels are a random permutation of the canonical assignment."""
    rng = np.random.default_rng(seed)
    probs = 1.0 / np.arange(1, vocab_size + 1)
    probs /= probs.sum()
    refs = sorted(TELLERS)
    names = [TELLERS[r] for r in refs]
    rng.shuffle(names)
    tellers = dict(zip(refs, names))
    texts = {r: " ".join(f"v{i}" for i in rng.choice(vocab_size, size=novella_len, p=probs))
             for r in refs}
    return _corpus(texts, tellers)


def planted_topic_docs(n_topics, n_docs=50, doc_len=100, words_per_topic=20, seed=0,
                       doc_alpha=0.5):
    """LDA documents from topics with disjoint vocabularies.

    Returns (docs, true topic-word matrix K x V).
    """
    rng = np.random.default_rng(seed)
    V = n_topics * words_per_topic
    phi = np.zeros((n_topics, V))
    for k in range(n_topics):
        w = rng.dirichlet(np.ones(words_per_topic))
        phi[k, k * words_per_topic:(k + 1) * words_per_topic] = w
    docs = []
    for d in range(n_docs):
        theta = rng.dirichlet(np.full(n_topics, doc_alpha))
        zs = rng.choice(n_topics, size=doc_len, p=theta)
        ids = [int(rng.choice(V, p=phi[z])) for z in zs]
        teller = ROSTER.names[d % 10]
        docs.append(LdaDoc(tuple(ids), (d // 10 % 10 + 1, d % 10 + 1), teller))
    return docs, phi


def greedy_match_cosines(learned, truth):
    """Pair each true topic with a distinct learned topic, best cosine first."""
    a = learned / np.linalg.norm(learned, axis=1, keepdims=True)
    b = truth / np.linalg.norm(truth, axis=1, keepdims=True)
    sim = b @ a.T
    out = {}
    used_l, used_t = set(), set()
    for flat in np.argsort(-sim, axis=None):
        t, l = np.unravel_index(flat, sim.shape)
        if t in used_t or l in used_l:
            continue
        out[int(t)] = float(sim[t, l])
        used_t.add(t)
        used_l.add(l)
    return [out[t] for t in range(truth.shape[0])]
