import pytest
from hypothesis import given
from hypothesis import strategies as st

from brigata.textproc import (
    Stoplist, build_vocabulary, chunk_tokens, remove_stopwords, restrict_to_top_k, tokenize,
)
from synth import shuffled_label_corpus


@pytest.mark.parametrize("text, expected", [
    ("Umana cosa è", ["umana", "cosa", "è"]),
    ("nell'animo,", ["nell'animo"]),
    ("", []),
    ("«Oimè!» disse", ["oimè", "disse"]),
    ("'Messere', \u2014 rispose", ["messere", "rispose"]),
    ("Nell’animo", ["nell'animo"]),
    ("... ;; !!", []),
])
def test_tokenize(text, expected):
    assert tokenize(text) == expected


@given(st.text())
def test_tokenize_idempotent(text):
    toks = tokenize(text)
    assert tokenize(" ".join(toks)) == toks
    assert all(t and not any(c.isspace() for c in t) for t in toks)


@pytest.mark.parametrize("n, size, min_final, lengths", [
    (250, 100, 20, [100, 100, 50]),
    (215, 200, 20, [200]),
    (100, 100, 0, [100]),
    (420, 200, 20, [200, 200, 20]),
    (19, 200, 20, []),
    (5, 100, 0, [5]),
])
def test_chunk_lengths(n, size, min_final, lengths):
    assert [len(c) for c in chunk_tokens(list(range(n)), size, min_final)] == lengths


@given(st.lists(st.integers(), max_size=500), st.integers(1, 60), st.data())
def test_chunks_concatenate_to_prefix(tokens, size, data):
    min_final = data.draw(st.integers(0, size))
    chunks = chunk_tokens(tokens, size, min_final)
    flat = [t for c in chunks for t in c]
    assert flat == tokens[:len(flat)]
    dropped = len(tokens) - len(flat)
    assert dropped < max(min_final, 1)
    assert all(1 <= len(c) <= size for c in chunks)


def test_chunk_preconditions():
    with pytest.raises(ValueError):
        chunk_tokens(["a"], 0, 0)
    with pytest.raises(ValueError):
        chunk_tokens(["a"], 10, 11)


class TestVocabulary:
    def test_counts(self):
        v = build_vocabulary([["a", "b", "a"]])
        assert v["a"] == (0, 2) and v["b"] == (1, 1)

    def test_tie_break_lexicographic(self):
        v = build_vocabulary([["b", "a"]])
        assert v.tokens == ["a", "b"]

    def test_empty_streams_rejected(self):
        with pytest.raises(ValueError):
            build_vocabulary([[], []])

    def test_matches_independent_count(self):
        corpus = shuffled_label_corpus(seed=3)
        streams = [tokenize(n.text) for n in corpus.novelle]
        vocab = build_vocabulary(streams)
        # independent one-pass count with a plain dict
        freq = {}
        for s in streams:
            for t in s:
                freq[t] = freq.get(t, 0) + 1
        best = max(freq.values())
        top = min(t for t, c in freq.items() if c == best)
        assert vocab.tokens[0] == top
        assert dict(vocab.frequency) == freq
        assert sorted(vocab.index.values()) == list(range(len(freq)))

    def test_immutable(self):
        v = build_vocabulary([["a"]])
        with pytest.raises(TypeError):
            v.index["b"] = 1


class TestRestrict:
    vocab = build_vocabulary([["a"] * 3 + ["b"] * 2 + ["c"]])

    def test_filters_by_rank(self):
        assert restrict_to_top_k(["c", "a", "b"], self.vocab, 2) == ["a", "b"]

    def test_full_k_is_identity(self):
        toks = ["c", "b", "a", "a"]
        assert restrict_to_top_k(toks, self.vocab, len(self.vocab)) == toks

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            restrict_to_top_k(["a"], self.vocab, 0)

    def test_oov_dropped(self):
        assert restrict_to_top_k(["zz", "a"], self.vocab, 3) == ["a"]


class TestStopwords:
    def test_pmi_list(self):
        stop = Stoplist.bundled("pmi")
        assert remove_stopwords(["è", "amore", "che"], stop) == ["amore"]
        assert {"è", "che", "la", "quale", "ciò", "ho"} <= stop.words
        assert len(stop) == 21

    def test_empty_is_identity(self):
        assert remove_stopwords(["e", "x"], Stoplist.empty()) == ["e", "x"]

    def test_all_stopwords(self):
        assert remove_stopwords(["che", "la"], Stoplist.bundled("pmi")) == []

    def test_lda_list_is_superset_of_pmi_basics(self):
        lda = Stoplist.bundled("lda")
        assert {"che", "di", "e", "il", "la", "non"} <= lda.words
        assert all(w == w.lower() and not w.endswith("'") for w in lda.words)

    def test_file_format(self, tmp_path):
        p = tmp_path / "s.txt"
        p.write_text("# comment\nalfa\n\n beta  # trailing\n", encoding="utf-8")
        assert Stoplist.from_file(p).words == {"alfa", "beta"}

    def test_uppercase_rejected(self):
        with pytest.raises(ValueError):
            Stoplist.parse("Alfa")
