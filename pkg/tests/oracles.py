"""Independent reference computations used as test oracles."""

import math

import numpy as np

from brigata.textproc import tokenize


def brute_force_pmi(novelle, min_count, stop):
    """Nested-loop PMI straight from (storyteller, text) pairs."""
    tokens_of = {}
    for name, text in novelle:
        tokens_of.setdefault(name, []).extend(tokenize(text))
    everything = [t for toks in tokens_of.values() for t in toks]
    out = {}
    for name, toks in tokens_of.items():
        out[name] = {}
        for w in set(toks):
            n_w = 0
            for t in toks:
                if t == w:
                    n_w += 1
            c_w = 0
            for t in everything:
                if t == w:
                    c_w += 1
            if n_w >= min_count and w not in stop:
                out[name][w] = math.log((n_w / len(toks)) / (c_w / len(everything)))
    return out


def fd_gradient(f, x, eps=1e-5):
    """Central finite differences of scalar ``f`` at array ``x``."""
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = eps
        g.flat[i] = (f(x + e) - f(x - e)) / (2 * eps)
    return g
