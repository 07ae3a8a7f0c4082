"""Efficient unbiased sparsification for permutation-invariant divergences.

Heavy coordinates are kept exactly. The remaining budget m - h is spent
on light coordinates drawn with inclusion probability p_i / ell, and
every drawn light coordinate is set to the light average ell. Outputs
preserve the coordinate sum and do not depend on the divergence.
"""

from __future__ import annotations

import numpy as np

from .core import MarginalVector, TargetVector, validate_target
from .exceptions import TrivialInstance
from .heavy import HeavyPartition, partition
from .plan import SparsificationPlan


def _target(p, m: int, allow_negative: bool):
    if isinstance(p, TargetVector):
        return p
    try:
        return validate_target(p, m, allow_negative=allow_negative)
    except TrivialInstance as exc:
        return exc.raw


def uspi_marginals(p: TargetVector, m: int) -> tuple[HeavyPartition, MarginalVector]:
    part = partition(p, m)
    s = p.values[part.light] / part.ell
    return part, MarginalVector(s, k=m - part.h)


def uspi_plan(p, m: int, allow_negative: bool = False) -> SparsificationPlan:
    target = _target(p, m, allow_negative)
    if not isinstance(target, TargetVector):
        return SparsificationPlan.passthrough(target, m)
    part, s = uspi_marginals(target, m)
    signs = target.signs
    return SparsificationPlan(
        dim=target.dim,
        m=m,
        heavy=part.heavy,
        # copied, never recomputed: heavy outputs equal the input bit for bit
        heavy_values=target.signed[part.heavy],
        light=part.light,
        marginals=s,
        survivor_values=part.ell * signs[part.light],
    )


def uspi_sample(p, m: int, rng=None, u: float | None = None, allow_negative: bool = False):
    """Draw one unbiased m-sparsification of ``p``.

    Parameters
    ----------
    p : array-like or TargetVector
        Vector to sparsify. Vectors with at most ``m`` nonzeros are
        returned unchanged.
    m : int
        Maximum number of nonzero coordinates in the output.
    rng : numpy Generator, int or None
        Source of the single uniform offset when ``u`` is not given.
    u : float, optional
        Offset in [0, 1) fixing the draw.
    allow_negative : bool
        Sparsify magnitudes and restore signs afterwards.

    Returns
    -------
    SparseSample
    """
    return uspi_plan(p, m, allow_negative).sample(rng, u)


def uspi_scheme(p, m: int, allow_negative: bool = False):
    """Exact output distribution of :func:`uspi_sample` as a Scheme."""
    return uspi_plan(p, m, allow_negative).scheme()
