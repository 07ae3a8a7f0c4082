import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsekit.core import (
    MarginalVector,
    Scheme,
    SparseSample,
    compensated_cumsum,
    load_vector,
    validate_target,
)
from sparsekit.exceptions import (
    InfeasibleMarginals,
    NegativeNotAllowed,
    NonFinite,
    TrivialInstance,
)


def test_validate_sorted_positive():
    t = validate_target([0.5, 0.3, 0.2], 2)
    assert t.n == 3
    assert t.sort_perm.tolist() == [0, 1, 2]


def test_validate_removes_zeros():
    t = validate_target([0.2, 0, 0.5, 0.3], 2)
    assert t.zeros.tolist() == [1]
    assert t.values[t.active].tolist() == [0.2, 0.5, 0.3]
    assert t.sort_perm.tolist() == [2, 3, 0]


def test_validate_negative_flag():
    t = validate_target([0.5, -0.3, 0.2], 2, allow_negative=True)
    assert np.flatnonzero(t.negative).tolist() == [1]
    assert t.values[t.active].tolist() == [0.5, 0.3, 0.2]
    assert t.signed.tolist() == [0.5, -0.3, 0.2]


@pytest.mark.parametrize(
    "raw, m, exc",
    [
        ([0.5, np.nan, 0.2], 1, NonFinite),
        ([0.5, np.inf, 0.2], 1, NonFinite),
        ([0.5, -0.3, 0.2], 2, NegativeNotAllowed),
        ([0.5, 0.0, 0.2], 2, TrivialInstance),
        ([0.0, 0.0], 1, TrivialInstance),
    ],
)
def test_validate_errors(raw, m, exc):
    with pytest.raises(exc):
        validate_target(raw, m)


def test_trivial_carries_raw():
    with pytest.raises(TrivialInstance) as info:
        validate_target([1.0, 0.0, 2.0], 2)
    assert info.value.raw.tolist() == [1.0, 0.0, 2.0]


def test_stable_ties():
    t = validate_target([0.25, 0.5, 0.25, 0.5], 2)
    assert t.sort_perm.tolist() == [1, 3, 0, 2]


@given(st.lists(st.floats(0.01, 100), min_size=3, max_size=30))
def test_sort_perm_round_trip(values):
    t = validate_target(values, 1)
    perm = t.sort_perm
    assert sorted(perm.tolist()) == list(range(len(values)))
    sorted_vals = t.values[perm]
    assert np.all(np.diff(sorted_vals) <= 0)
    inverse = np.empty_like(perm)
    inverse[perm] = np.arange(perm.size)
    assert np.array_equal(sorted_vals[inverse], np.asarray(values))


@given(st.lists(st.floats(-1e6, 1e6), max_size=200))
@settings(max_examples=50)
def test_compensated_cumsum_matches_fsum(values):
    cum = compensated_cumsum(values)
    assert cum[0] == 0.0
    for j in range(len(values) + 1):
        exact = math.fsum(values[:j])
        assert abs(cum[j] - exact) <= 1e-15 * max(1.0, sum(abs(v) for v in values[:j]))


def test_sparse_sample_sorted_and_dense():
    s = SparseSample(4, [3, 1], [2.0, 5.0])
    assert s.support.tolist() == [1, 3]
    assert s.to_dense().tolist() == [0.0, 5.0, 0.0, 2.0]
    assert s.as_dict() == {1: 5.0, 3: 2.0}
    with pytest.raises(ValueError):
        SparseSample(3, [0, 0], [1.0, 1.0])
    with pytest.raises(ValueError):
        SparseSample(3, [3], [1.0])


def test_marginal_vector_validation():
    mv = MarginalVector([0.5, 0.5, 1.0])
    assert mv.k == 2
    with pytest.raises(InfeasibleMarginals):
        MarginalVector([1.2, 0.8])
    with pytest.raises(InfeasibleMarginals):
        MarginalVector([0.5, 0.6])
    with pytest.raises(InfeasibleMarginals):
        MarginalVector([0.0, 1.0])


def test_scheme_merges_identical_supports():
    a = SparseSample(3, [0, 1], [0.5, 0.5])
    b = SparseSample(3, [0, 2], [0.5, 0.5])
    scheme = Scheme(3, 2, [(0.3, a), (0.4, b), (0.3, a)])
    assert len(scheme) == 2
    assert scheme.as_mapping()[(0, 1)][0] == pytest.approx(0.6, abs=1e-15)
    assert np.allclose(scheme.mean(), [0.5, 0.3, 0.2], atol=1e-15)
    assert np.allclose(scheme.inclusion_probabilities(), [1.0, 0.6, 0.4])


def test_scheme_rejects_bad_atoms():
    a = SparseSample(3, [0, 1], [0.5, 0.5])
    with pytest.raises(ValueError, match="sum"):
        Scheme(3, 2, [(0.5, a)])
    with pytest.raises(ValueError, match="exceeds"):
        Scheme(3, 1, [(1.0, a)])
    with pytest.raises(ValueError, match="conflicting"):
        Scheme(3, 2, [(0.5, a), (0.5, SparseSample(3, [0, 1], [0.4, 0.6]))])


def test_scheme_dict_round_trip():
    a = SparseSample(3, [0, 1], [0.5, 0.5])
    b = SparseSample(3, [0, 2], [0.5, 0.5])
    scheme = Scheme(3, 2, [(0.6, a), (0.4, b)], heavy=[0], divergence="kl")
    back = Scheme.from_dict(scheme.to_dict())
    assert back.to_dict() == scheme.to_dict()


def test_load_vector(tmp_path):
    j = tmp_path / "p.json"
    j.write_text("[0.5, 0.3, 0.2]")
    c = tmp_path / "p.csv"
    c.write_text("0.5\n0.3\n\n0.2\n")
    assert load_vector(j).tolist() == [0.5, 0.3, 0.2]
    assert load_vector(c).tolist() == [0.5, 0.3, 0.2]
