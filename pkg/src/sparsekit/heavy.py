"""Heavy/light partition of a positive vector for a sparsity budget m.

Sorted position i (1-based, decreasing order) is m-heavy when the mass
strictly after it is at most (m - i) times its own value. Heavy positions
form a prefix, so the threshold is found by binary search over
precomputed suffix sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import TargetVector, compensated_cumsum


@dataclass(frozen=True, eq=False)
class HeavyPartition:
    h: int
    heavy: np.ndarray  # original indices, in decreasing order of value
    light: np.ndarray  # original indices, ascending
    ell: float

    def light_marginals(self, p: TargetVector) -> np.ndarray:
        return p.values[self.light] / self.ell


def _suffix_sums(sorted_values: np.ndarray) -> np.ndarray:
    """``out[i]`` is the sum of ``sorted_values[i:]``; ``out[n] == 0``."""
    rev = compensated_cumsum(sorted_values[::-1])
    return rev[::-1].copy()


def _is_heavy(i: int, sorted_values: np.ndarray, suffix: np.ndarray, m: int) -> bool:
    # 1-based position i: sum_{j>i} p_j <= (m - i) p_i
    return suffix[i] <= (m - i) * sorted_values[i - 1]


def heavy_threshold(p: TargetVector, m: int) -> int:
    """Number of m-heavy indices, by binary search on sorted positions."""
    n = p.n
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    a = p.sorted_values
    suffix = _suffix_sums(a)
    # position m can never be heavy: it would need a nonpositive tail
    lo, hi = 0, m - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if _is_heavy(mid, a, suffix, m):
            lo = mid
        else:
            hi = mid - 1
    return lo


def heavy_mask_linear(p: TargetVector, m: int) -> np.ndarray:
    """Heaviness of every sorted position, tails summed from scratch."""
    a = p.sorted_values
    return np.array([math.fsum(a[i:]) <= (m - i) * a[i - 1] for i in range(1, p.n + 1)])


def heavy_threshold_linear(p: TargetVector, m: int) -> int:
    mask = heavy_mask_linear(p, m)
    return int(np.argmin(mask)) if not mask.all() else int(mask.size)


def partition(p: TargetVector, m: int) -> HeavyPartition:
    h = heavy_threshold(p, m)
    heavy = p.sort_perm[:h].copy()
    light = np.sort(p.sort_perm[h:])
    ell = math.fsum(p.values[light]) / (m - h)
    return HeavyPartition(h=h, heavy=heavy, light=light, ell=ell)
