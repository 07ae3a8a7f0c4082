"""Pass/fail reports for schemes (exact) and samplers (Monte Carlo).

Reports are plain dicts, ready for ``json.dumps``: one entry per property
with ``pass``, a residual or z-score, and ``kind`` ("exact" or
"statistical"). Property failures are data, never exceptions.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .core import Scheme, TargetVector
from .oracle import spawn_streams

UNBIASED_TOL = 1e-10
SUM_TOL = 1e-12
MARGINAL_TOL = 1e-10
Z_FLAG = 4.0


def _dense(p) -> np.ndarray:
    return p.signed if isinstance(p, TargetVector) else np.asarray(p, dtype=float)


def check_scheme(
    scheme: Scheme,
    p,
    m: int,
    *,
    unbiased: bool = True,
    sum_preserving: bool = False,
    sparsity: bool = True,
    marginals=None,
) -> dict:
    p = _dense(p)
    report: dict[str, dict] = {}
    if unbiased:
        resid = scheme.mean() - p
        worst = float(np.abs(resid).max(initial=0.0))
        entry = {"pass": worst <= UNBIASED_TOL, "residual": worst, "kind": "exact"}
        if not entry["pass"]:
            entry["residual_vector"] = resid.tolist()
        report["unbiased"] = entry
    if sum_preserving:
        target = math.fsum(p)
        worst = max(
            (abs(math.fsum(s.values) - target) for _, s in scheme), default=0.0
        )
        report["sum_preserving"] = {"pass": worst <= SUM_TOL, "residual": worst, "kind": "exact"}
    if sparsity:
        largest = max((s.support.size for _, s in scheme), default=0)
        report["sparsity"] = {"pass": largest <= m, "max_support": largest, "kind": "exact"}
    if marginals is not None:
        want = np.asarray(getattr(marginals, "s", marginals), dtype=float)
        got = scheme.inclusion_probabilities()
        worst = float(np.abs(got - want).max(initial=0.0))
        report["marginals"] = {"pass": worst <= MARGINAL_TOL, "residual": worst, "kind": "exact"}
    return report


def _z(observed, expected, se):
    """z-scores; a zero standard error only matches an exact hit."""
    diff = observed - expected
    out = np.zeros_like(diff)
    nz = se > 0
    out[nz] = diff[nz] / se[nz]
    exact = ~nz
    scale = np.maximum(1e-300, np.abs(expected[exact]))
    out[exact] = np.where(np.abs(diff[exact]) <= 1e-9 * scale, 0.0, np.inf)
    return out


def monte_carlo_check(
    sampler: Callable[[np.random.Generator, int], tuple[np.ndarray, np.ndarray]],
    p,
    m: int,
    N: int,
    seed: int,
    *,
    marginals=None,
    batch: int = 50_000,
) -> dict:
    """Empirical unbiasedness and inclusion-frequency check.

    ``sampler(rng, size)`` returns ``(indices, values)`` arrays of shape
    ``(size, k)``, one row per draw. Each batch uses its own generator
    stream spawned from ``seed``; statistics are pooled as counts, sums
    and sums of squares, so the report depends only on ``seed``, ``N``
    and ``batch``.
    """
    if N < 10_000:
        raise ValueError("monte_carlo_check needs N >= 10**4")
    p = _dense(p)
    dim = p.size
    sizes = [batch] * (N // batch) + ([N % batch] if N % batch else [])
    total = np.zeros(dim)
    total_sq = np.zeros(dim)
    counts = np.zeros(dim)
    max_support = 0
    for seq, size in zip(spawn_streams(seed, len(sizes)), sizes):
        idx, vals = sampler(np.random.default_rng(seq), size)
        idx = np.asarray(idx)
        vals = np.asarray(vals, dtype=float)
        nonzero = vals != 0
        max_support = max(max_support, int(nonzero.sum(axis=1).max(initial=0)))
        flat, v = idx[nonzero], vals[nonzero]
        total += np.bincount(flat, weights=v, minlength=dim)
        total_sq += np.bincount(flat, weights=v * v, minlength=dim)
        counts += np.bincount(flat, minlength=dim)
    mean = total / N
    var = total_sq / N - mean**2
    # accumulation noise on constant coordinates
    var[var <= 1e-9 * mean**2] = 0.0
    z_mean = _z(mean, p, np.sqrt(var / N))
    # never drawn: the plug-in variance carries no information, so these
    # are reported separately and left to the inclusion-frequency test
    unobserved = (counts == 0) & (p != 0)
    z_mean[unobserved] = 0.0
    report = {
        "samples": N,
        "seed": seed,
        "unbiased": {
            "pass": bool(np.all(np.abs(z_mean) <= Z_FLAG)),
            "z_max": float(np.abs(z_mean).max(initial=0.0)),
            "flagged": np.flatnonzero(np.abs(z_mean) > Z_FLAG).tolist(),
            "unobserved": np.flatnonzero(unobserved).tolist(),
            "kind": "statistical",
        },
        "sparsity": {"pass": max_support <= m, "max_support": max_support, "kind": "exact"},
    }
    if marginals is not None:
        s = np.asarray(getattr(marginals, "s", marginals), dtype=float)
        freq = counts / N
        z_inc = _z(freq, s, np.sqrt(s * (1 - s) / N))
        report["marginals"] = {
            "pass": bool(np.all(np.abs(z_inc) <= Z_FLAG)),
            "z_max": float(np.abs(z_inc).max(initial=0.0)),
            "flagged": np.flatnonzero(np.abs(z_inc) > Z_FLAG).tolist(),
            "kind": "statistical",
        }
    return report


def all_pass(report: dict) -> bool:
    return all(v["pass"] for v in report.values() if isinstance(v, dict) and "pass" in v)
