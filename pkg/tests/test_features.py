import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from brigata.features import IdfModel, SparseVector, fit_idf, stack, transform
from brigata.textproc import build_vocabulary

VOCAB = build_vocabulary([["a", "a", "a", "b", "b", "c"]])  # a:0 b:1 c:2


def test_idf_token_in_every_chunk():
    model = fit_idf([["a"], ["a", "b"], ["a"]], VOCAB)
    assert model.idf[0] == pytest.approx(1.0)


def test_idf_hand_values():
    model = fit_idf([["a"], ["a", "b"], ["a"]], VOCAB)
    assert model.idf[1] == pytest.approx(math.log(2) + 1)      # N=3, df=1 -> 1.6931
    assert model.idf[1] == pytest.approx(1.6931, abs=1e-4)
    assert model.idf[2] == pytest.approx(math.log(4) + 1)      # df=0 -> 2.3863
    assert model.idf[2] == pytest.approx(2.3863, abs=1e-4)
    assert np.all(model.idf > 0) and len(model.idf) == len(VOCAB)


def test_idf_needs_chunks():
    with pytest.raises(ValueError):
        fit_idf([], VOCAB)


def model_with(idf):
    return IdfModel(VOCAB, np.asarray(idf, dtype=float), 1, np.zeros(len(idf), dtype=int))


def test_single_token_is_unit():
    v = transform(["b"], model_with([1, 2, 3]))
    assert v.indices.tolist() == [1] and v.values.tolist() == [1.0]


def test_hand_arithmetic():
    v = transform(["a", "a", "b"], model_with([1, 2, 5]))
    # raw (2*1, 1*2) = (2, 2) -> (0.7071, 0.7071)
    np.testing.assert_allclose(v.values, [0.70710678, 0.70710678], atol=1e-8)


def test_out_of_vocab_only():
    v = transform(["zz", "yy"], model_with([1, 1, 1]))
    assert len(v) == 0 and v.dim == 3


chunks = st.lists(st.sampled_from(["a", "b", "c", "oov"]), min_size=1, max_size=30)


@given(chunks, st.randoms())
def test_unit_norm_and_order_invariance(chunk, rnd):
    model = fit_idf([["a"], ["b", "c"], ["a", "c"]], VOCAB)
    v = transform(chunk, model)
    shuffled = list(chunk)
    rnd.shuffle(shuffled)
    w = transform(shuffled, model)
    if len(v):
        assert abs(v.norm - 1) < 1e-9
        assert np.all(np.diff(v.indices) > 0) and np.all(v.values != 0)
    np.testing.assert_array_equal(v.indices, w.indices)
    np.testing.assert_allclose(v.values, w.values, rtol=0, atol=1e-15)


@given(chunks, st.floats(0.01, 100))
def test_idf_scaling_absorbed(chunk, c):
    base = model_with([1.3, 2.1, 0.7])
    scaled = model_with([1.3 * c, 2.1 * c, 0.7 * c])
    np.testing.assert_allclose(transform(chunk, base).values, transform(chunk, scaled).values, atol=1e-12)


def test_stack_and_dense_round_trip():
    x = np.array([0, 0.6, 0, 0.8])
    v = SparseVector.from_dense(x)
    np.testing.assert_array_equal(v.to_dense(), x)
    m = stack([v, v])
    assert m.shape == (2, 4)
    np.testing.assert_array_equal(m.toarray(), [x, x])
    with pytest.raises(ValueError):
        stack([v, SparseVector.from_dense([1.0])])
