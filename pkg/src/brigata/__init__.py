"""Storyteller profiling for Boccaccio's Decameron.

Modules: ``corpus`` (document model, TEI and JSON I/O), ``textproc``
(tokens, chunks, vocabularies), ``features`` (TF-IDF), ``classify``
(logistic regression experiments), ``lexstats`` (PMI), ``topics`` (Gibbs LDA
and profiles), ``report`` (CSV/SVG) and ``cli``.
"""

__version__ = "0.1.0"
