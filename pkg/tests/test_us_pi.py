import math

import numpy as np
import pytest

from sparsekit.core import validate_target
from sparsekit.exceptions import NegativeNotAllowed
from sparsekit.oracle import is_preservative
from sparsekit.us_pi import uspi_marginals, uspi_plan, uspi_sample, uspi_scheme
from sparsekit.verify import monte_carlo_check

from conftest import random_instance, scheme_table

THIRD = 1 / 3


@pytest.mark.parametrize(
    "p, h, s",
    [
        ([0.5, 0.3, 0.2], 1, [0.6, 0.4]),
        ([THIRD, THIRD, THIRD], 0, [2 / 3, 2 / 3, 2 / 3]),
        ([0.9, 0.05, 0.05], 1, [0.5, 0.5]),
    ],
)
def test_marginals_examples(p, h, s):
    part, mv = uspi_marginals(validate_target(p, 2), 2)
    assert part.h == h
    assert np.allclose(mv.s, s, atol=1e-15)
    assert mv.k == 2 - h


def test_sample_fixed_offset():
    q = uspi_sample([0.5, 0.3, 0.2], 2, u=0.3)
    assert np.allclose(q.to_dense(), [0.5, 0.5, 0.0], atol=1e-15)
    q = uspi_sample([0.5, 0.3, 0.2], 2, u=0.8)
    assert np.allclose(q.to_dense(), [0.5, 0.0, 0.5], atol=1e-15)


def test_uniform_sample_takes_three_values(rng):
    seen = set()
    for _ in range(200):
        q = uspi_sample([THIRD, THIRD, THIRD], 2, rng)
        assert np.allclose(q.values, 0.5)
        seen.add(q.key)
    assert seen == {(0, 1), (0, 2), (1, 2)}


def test_trivial_passthrough():
    p = [0.0, 0.7, 0.0, 0.3]
    q = uspi_sample(p, 2, u=0.5)
    assert q.to_dense().tolist() == p
    scheme = uspi_scheme(p, 2)
    assert len(scheme) == 1


@pytest.mark.parametrize(
    "p, want",
    [
        ([0.5, 0.3, 0.2], {(0, 1): (0.6, [0.5, 0.5, 0]), (0, 2): (0.4, [0.5, 0, 0.5])}),
        (
            [THIRD, THIRD, THIRD],
            {
                (0, 1): (THIRD, [0.5, 0.5, 0]),
                (0, 2): (THIRD, [0.5, 0, 0.5]),
                (1, 2): (THIRD, [0, 0.5, 0.5]),
            },
        ),
        ([0.9, 0.05, 0.05], {(0, 1): (0.5, [0.9, 0.1, 0]), (0, 2): (0.5, [0.9, 0, 0.1])}),
    ],
)
def test_scheme_examples(p, want):
    got = scheme_table(uspi_scheme(p, 2))
    assert got.keys() == want.keys()
    for key, (prob, vals) in want.items():
        assert got[key][0] == pytest.approx(prob, abs=1e-12)
        assert np.allclose(got[key][1], vals, atol=1e-15)


def test_heavy_values_copied_bit_exactly():
    p = np.array([0.1 + 0.2, 0.01, 0.02, 0.03])
    plan = uspi_plan(p, 2)
    assert plan.heavy_values[0] == p[0]


def test_rejects_negative_without_flag():
    with pytest.raises(NegativeNotAllowed):
        uspi_sample([0.5, -0.3, 0.2], 2, u=0.1)


def test_negative_input_flips_signs():
    q = uspi_scheme([0.5, -0.3, 0.2], 2, allow_negative=True)
    assert np.allclose(q.mean(), [0.5, -0.3, 0.2], atol=1e-15)


def test_scheme_invariants_random(rng):
    for _ in range(300):
        p, m = random_instance(rng)
        scheme = uspi_scheme(p, m)
        assert np.max(np.abs(scheme.mean() - p)) <= 1e-10
        total = math.fsum(p)
        for prob, sample in scheme:
            assert sample.support.size == m
            assert abs(math.fsum(sample.values) - total) <= 1e-12 * max(1.0, total)
        ok, problems = is_preservative(scheme, p, m)
        assert ok, problems


def test_sample_matches_scheme_support(rng):
    p, m = np.array([0.4, 0.25, 0.15, 0.1, 0.06, 0.04]), 3
    keys = {s.key for _, s in uspi_scheme(p, m)}
    for _ in range(100):
        assert uspi_sample(p, m, rng).key in keys


@pytest.mark.slow
def test_monte_carlo_million_draws():
    rng = np.random.default_rng(5)
    p = rng.random(100) ** 3
    plan = uspi_plan(p, 10)
    report = monte_carlo_check(plan.sample_batch, p, 10, 1_000_000, seed=11, marginals=plan.inclusion())
    assert report["unbiased"]["pass"], report["unbiased"]
    assert report["marginals"]["pass"], report["marginals"]
    assert report["sparsity"]["pass"]
