"""Efficient unbiased sparsification for separable divergences.

The threshold lambda solves sum_i min(1, p_i / g_i^{-1}(lambda)) = m.
Coordinates with g_i(p_i) >= lambda are kept exactly; light coordinate i
is drawn with probability p_i / g_i^{-1}(lambda) and, when drawn, takes
the value g_i^{-1}(lambda).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import MarginalVector, TargetVector
from .divergences import Divergence
from .exceptions import BracketError, ConvergenceError, SignFlipUnsupported
from .plan import SparsificationPlan
from .us_pi import _target

LAMBDA_RTOL = 1e-12
MAX_STEPS = 200
HEAVY_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class UsasPlan(SparsificationPlan):
    lam: float


def _active(p: TargetVector):
    idx = p.active
    return p.values[idx], idx


def lambda_residual(spec: Divergence, p: TargetVector, m: int, lam: float) -> float:
    """sum_i min(1, p_i / g_i^{-1}(lam)) - m."""
    vals, idx = _active(p)
    return math.fsum(np.minimum(1.0, vals / spec.g_inverse(np.full(vals.size, lam), vals, idx))) - m


def solve_lambda(spec: Divergence, p: TargetVector, m: int) -> float:
    """Unique lambda > 0 with sum_i min(1, p_i / g_i^{-1}(lambda)) = m.

    The left side decreases in lambda and is strictly decreasing below n,
    so bisection on a bracket [lo, hi] with total(lo) >= m >= total(hi)
    isolates the root.
    """
    if not spec.separable:
        raise ValueError(f"{spec!r} is not additively separable")
    vals, idx = _active(p)
    n = vals.size
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")

    def total(lam):
        return lambda_residual(spec, p, m, lam) + m

    lo = float(np.min(spec.g(vals * n / m, vals, idx))) * (1 - 1e-6)
    for _ in range(MAX_STEPS):
        if lo > 0 and total(lo) >= m:
            break
        lo = lo / 2.0 if lo > 0 else np.finfo(float).tiny
    else:
        raise BracketError("could not find lambda with total >= m; is g increasing?")
    hi = float(np.max(spec.g(vals * n, vals, idx)))
    for _ in range(MAX_STEPS):
        if total(hi) <= m:
            break
        hi *= 2.0
    else:
        raise BracketError("could not find lambda with total <= m; is g increasing?")
    if hi < lo:
        raise BracketError("bracket endpoints are out of order")

    for _ in range(MAX_STEPS):
        if hi - lo <= LAMBDA_RTOL * lo:
            return 0.5 * (lo + hi)
        mid = math.sqrt(lo * hi) if hi > 2.0 * lo else 0.5 * (lo + hi)
        if total(mid) >= m:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(f"lambda bisection stopped at [{lo!r}, {hi!r}]")


def usas_plan(spec: Divergence, p, m: int, allow_negative: bool = False) -> SparsificationPlan:
    """Heavy set, light marginals and survivor values for ``p``.

    Returns a :class:`UsasPlan`, or a passthrough plan when ``p`` has at
    most ``m`` nonzeros.
    """
    target = _target(p, m, allow_negative)
    if not isinstance(target, TargetVector):
        if np.any(np.asarray(target) < 0) and not spec.sign_symmetric:
            raise SignFlipUnsupported(f"{spec.describe()} is not symmetric under sign flips")
        return SparsificationPlan.passthrough(target, m)
    if target.negative.any() and not spec.sign_symmetric:
        raise SignFlipUnsupported(f"{spec.describe()} is not symmetric under sign flips")
    lam = solve_lambda(spec, target, m)
    vals, idx = _active(target)
    is_heavy = spec.g(vals, vals, idx) >= lam * (1.0 - HEAVY_RTOL)
    heavy, light = idx[is_heavy], idx[~is_heavy]
    h = int(heavy.size)
    if h >= m:
        raise ConvergenceError(f"{h} heavy coordinates for m={m}; lambda={lam!r} is off")
    lv = vals[~is_heavy]
    q = spec.g_inverse(np.full(lv.size, lam), lv, light)
    signs = target.signs
    return UsasPlan(
        dim=target.dim,
        m=m,
        heavy=heavy,
        heavy_values=target.signed[heavy],
        light=light,
        marginals=MarginalVector(np.minimum(lv / q, 1.0), k=m - h),
        survivor_values=q * signs[light],
        lam=lam,
    )


def usas_sample(spec: Divergence, p, m: int, rng=None, u=None, allow_negative: bool = False):
    return usas_plan(spec, p, m, allow_negative).sample(rng, u)


def usas_scheme(spec: Divergence, p, m: int, allow_negative: bool = False):
    return usas_plan(spec, p, m, allow_negative).scheme(divergence=spec.describe())


def signflip_sparsify(spec: Divergence, raw, m: int, rng=None, u=None):
    """Sparsify a vector with negative entries.

    Magnitudes are sparsified and the signs restored; this is only valid
    when each coordinate term is unchanged by flipping both q_i and p_i.

    Raises
    ------
    SignFlipUnsupported
        If ``spec`` is not sign-symmetric (KL, for instance).
    """
    if not spec.sign_symmetric:
        raise SignFlipUnsupported(f"{spec.describe()} is not symmetric under sign flips")
    return usas_sample(spec, raw, m, rng=rng, u=u, allow_negative=True)
