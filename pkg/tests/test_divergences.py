import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from sparsekit import divergences as dv
from sparsekit.divergences import (
    KL,
    CustomSeparable,
    SquaredEuclidean,
    WeightedSquared,
    from_name,
)
from sparsekit.exceptions import ConvergenceError, DomainError


def quadratic():
    return CustomSeparable(lambda x, p: (x - p) ** 2, lambda x, p: 2 * (x - p))


def builtins():
    return [SquaredEuclidean(), KL(), WeightedSquared([1.0, 4.0, 0.5]), quadratic()]


# -- eval ------------------------------------------------------------------


def test_eval_identity_is_zero():
    p = np.array([0.5, 0.3, 0.2])
    assert dv.eval(SquaredEuclidean(), p, p) == 0.0
    assert dv.eval(KL(), p, p) == pytest.approx(0.0, abs=1e-16)


def test_eval_sqeuclid_example():
    assert dv.eval(SquaredEuclidean(), [0.5, 0.5, 0.0], [0.5, 0.3, 0.2]) == pytest.approx(
        0.08, abs=1e-15
    )


def test_eval_kl_zero_convention():
    assert dv.eval(KL(), [1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-15)


def test_eval_rejects_negative_q():
    with pytest.raises(DomainError):
        dv.eval(SquaredEuclidean(), [-0.1, 1.1], [0.5, 0.5])
    with pytest.raises(DomainError):
        dv.eval(KL(), [-0.1, 1.1], [0.5, 0.5])


def test_eval_weighted():
    w = WeightedSquared([1.0, 4.0])
    assert dv.eval(w, [1.0, 0.0], [0.5, 0.5]) == pytest.approx(0.25 + 4 * 0.25)


# -- g and its inverse -----------------------------------------------------


@pytest.mark.parametrize(
    "spec, i, x, want",
    [
        (SquaredEuclidean(), 0, 0.5, 0.25),
        (KL(), 0, 0.7, 0.7),
        (WeightedSquared([4.0]), 0, 0.5, 1.0),
    ],
)
def test_g_eval_examples(spec, i, x, want):
    assert dv.g_eval(spec, i, x, [0.3]) == pytest.approx(want, rel=1e-14)


def test_g_eval_rejects_nonpositive():
    with pytest.raises(DomainError):
        dv.g_eval(SquaredEuclidean(), 0, 0.0, [0.3])
    with pytest.raises(DomainError):
        dv.g_inverse(KL(), 0, -1.0, [0.3])


@pytest.mark.parametrize(
    "spec, lam, want",
    [(SquaredEuclidean(), 0.25, 0.5), (KL(), 0.5, 0.5), (quadratic(), 0.25, 0.5)],
)
def test_g_inverse_examples(spec, lam, want):
    assert dv.g_inverse(spec, 0, lam, [0.3]) == pytest.approx(want, rel=1e-12)


def test_weighted_g_inverse_closed_form():
    w = WeightedSquared([1.0, 4.0])
    assert dv.g_inverse(w, 1, 1.0, [0.5, 0.5]) == pytest.approx(0.5, rel=1e-15)


def test_g_inverse_bracket_failure():
    # g(x) = 1 - exp(-x) (1 + x + x^2) stays below 1, so lambda = 2 has no root
    bounded = CustomSeparable.__new__(CustomSeparable)
    bounded._f = lambda x, p: np.exp(-x) + x * np.exp(-x)
    bounded._df = lambda x, p: -x * np.exp(-x)
    with pytest.raises(ConvergenceError):
        bounded.g_inverse(np.array([2.0]), np.array([1.0]))


def test_custom_rejects_bad_g():
    # f concave: g decreasing
    with pytest.raises(DomainError):
        CustomSeparable(lambda x, p: -(x**2), lambda x, p: -2 * x)
    with pytest.raises(DomainError):
        CustomSeparable(lambda x, p: np.sqrt(x), lambda x, p: 0.5 / np.sqrt(x))


@pytest.mark.parametrize("spec", builtins(), ids=lambda s: s.describe())
@given(x=st.floats(1e-3, 10.0), p=st.floats(0.01, 5.0))
@settings(max_examples=60, deadline=None)
def test_g_inverse_round_trip(spec, x, p):
    i = 1
    pv = [p, p, p]
    back = dv.g_inverse(spec, i, dv.g_eval(spec, i, x, pv), pv)
    assert back == pytest.approx(x, rel=1e-10)


@pytest.mark.parametrize("spec", builtins(), ids=lambda s: s.describe())
@given(x1=st.floats(1e-4, 10.0), x2=st.floats(1e-4, 10.0), p=st.floats(0.01, 5.0))
@settings(max_examples=60, deadline=None)
def test_g_strictly_increasing(spec, x1, x2, p):
    assume(x1 < x2 * (1 - 1e-9))
    pv = [p, p, p]
    assert dv.g_eval(spec, 2, x1, pv) < dv.g_eval(spec, 2, x2, pv)


@given(x=st.floats(0.01, 10.0), p=st.floats(0.01, 5.0))
@settings(max_examples=60, deadline=None)
def test_custom_g_matches_finite_difference(x, p):
    f = lambda x, p: x * np.log(np.maximum(x, 1e-300) / p) - x + p  # noqa: E731
    df = lambda x, p: np.log(x / p)  # noqa: E731
    spec = CustomSeparable(f, df)
    h = 1e-6 * max(1.0, x)
    numeric = (f(x + h, p) - f(x - h, p)) / (2 * h)
    want = x * numeric - f(x, p) + f(0.0, p)
    assert dv.g_eval(spec, 0, x, [p]) == pytest.approx(want, abs=1e-6)


vectors = st.lists(st.floats(0.0, 3.0), min_size=3, max_size=3)


@pytest.mark.parametrize("spec", builtins(), ids=lambda s: s.describe())
@given(q1=vectors, q2=vectors, t=st.floats(0.01, 0.99))
@settings(max_examples=60, deadline=None)
def test_eval_convex(spec, q1, q2, t):
    p = np.array([0.5, 0.3, 0.2])
    q1, q2 = np.array(q1), np.array(q2)
    mix = dv.eval(spec, t * q1 + (1 - t) * q2, p)
    assert mix <= t * dv.eval(spec, q1, p) + (1 - t) * dv.eval(spec, q2, p) + 1e-12


def test_flags():
    assert SquaredEuclidean().permutation_invariant and KL().permutation_invariant
    assert not WeightedSquared([1.0, 2.0]).permutation_invariant
    assert SquaredEuclidean().sign_symmetric and not KL().sign_symmetric
    assert all(s.separable for s in builtins())


def test_weights_validated():
    with pytest.raises(ValueError):
        WeightedSquared([1.0, 0.0])


def test_from_name(tmp_path):
    (tmp_path / "w.json").write_text("[1, 4]")
    assert isinstance(from_name("sqeuclid"), SquaredEuclidean)
    assert isinstance(from_name("kl"), KL)
    w = from_name("wsq:w.json", base_dir=tmp_path)
    assert isinstance(w, WeightedSquared)
    assert w.describe() == "wsq:w.json"
    with pytest.raises(ValueError):
        from_name("mahalanobis")
