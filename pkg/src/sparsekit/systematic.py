"""Fixed-size sampling with prescribed inclusion probabilities.

Intervals of length s_i are laid end to end on [0, k); a single uniform
u in [0, 1) selects every interval that contains one of u, u+1, ...,
u+k-1. Intervals are half-open, so every u gives a well-defined subset
of exactly k indices and index i is included with probability s_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import MarginalVector, Scheme, SparseSample, compensated_cumsum
from .exceptions import InfeasibleMarginals, TooLarge

CERTAIN_TOL = 1e-12
BREAKPOINT_TOL = 1e-13
MAX_ENUMERATE = 10_000


@dataclass(frozen=True, eq=False)
class SystematicLayout:
    """Interval layout for a marginal vector.

    Indices with s_i = 1 (up to ``CERTAIN_TOL``) are always selected and
    kept out of the line; removing a unit-length interval shifts the rest
    by an integer and leaves the induced design unchanged.
    """

    certain: np.ndarray
    order: np.ndarray
    cum: np.ndarray
    k: int

    @classmethod
    def build(cls, s: MarginalVector, order=None) -> "SystematicLayout":
        n = len(s)
        order = np.arange(n) if order is None else np.asarray(order, dtype=np.intp)
        if np.sort(order).tolist() != list(range(n)):
            raise ValueError("order must be a permutation of the marginal indices")
        vals = s.s[order]
        sure = vals >= 1.0 - CERTAIN_TOL
        certain = np.sort(order[sure])
        rest = order[~sure]
        k = s.k - int(sure.sum())
        cum = compensated_cumsum(s.s[rest])
        if rest.size:
            if abs(cum[-1] - k) > 1e-9:
                raise InfeasibleMarginals(f"laid intervals end at {cum[-1]!r}, not {k}")
            cum[-1] = k
        return cls(certain=certain, order=rest, cum=cum, k=k)

    def select(self, u) -> np.ndarray:
        """Selected marginal indices for each u; shape ``u.shape + (k_total,)``."""
        u = np.asarray(u, dtype=float)
        if np.any((u < 0) | (u >= 1)):
            raise ValueError("u must lie in [0, 1)")
        points = u[..., None] + np.arange(self.k)
        pos = np.searchsorted(self.cum, points, side="right") - 1
        picked = self.order[np.clip(pos, 0, self.order.size - 1)] if self.order.size else pos
        if self.certain.size:
            certain = np.broadcast_to(self.certain, u.shape + (self.certain.size,))
            picked = np.concatenate([certain, picked], axis=-1)
        return np.sort(picked, axis=-1)

    def cells(self) -> list[tuple[float, float]]:
        """Partition of [0, 1) on which the selected subset is constant."""
        frac = self.cum - np.floor(self.cum)
        frac[frac > 1.0 - BREAKPOINT_TOL] = 0.0
        pts = np.unique(np.concatenate([[0.0, 1.0], frac]))
        keep = [pts[0]]
        for x in pts[1:]:
            if x - keep[-1] > BREAKPOINT_TOL:
                keep.append(x)
        keep[-1] = 1.0
        return list(zip(keep[:-1], keep[1:]))


def _check(s) -> MarginalVector:
    if isinstance(s, MarginalVector):
        return s
    return MarginalVector(np.asarray(s, dtype=float))


def systematic_sample(s, u, order=None) -> np.ndarray:
    """The k-subset (sorted indices into ``s``) selected by offset ``u``.

    ``u`` may be an array of offsets, giving one subset per row.

    Raises
    ------
    InfeasibleMarginals
        If some s_i exceeds 1 or the marginals do not sum to an integer.
    """
    layout = SystematicLayout.build(_check(s), order)
    return layout.select(np.asarray(u, dtype=float))


def enumerate_systematic(s, order=None) -> list[tuple[float, tuple[int, ...]]]:
    """Exact distribution of the subset drawn by :func:`systematic_sample`.

    Returns ``(probability, subset)`` pairs, merged over cells that select
    the same subset.
    """
    s = _check(s)
    if len(s) > MAX_ENUMERATE:
        raise TooLarge(f"enumeration is limited to {MAX_ENUMERATE} indices, got {len(s)}")
    layout = SystematicLayout.build(s, order)
    probs: dict[tuple[int, ...], list[float]] = {}
    for a, b in layout.cells():
        subset = tuple(int(i) for i in layout.select(np.array(0.5 * (a + b))))
        probs.setdefault(subset, []).append(b - a)
    return [(math.fsum(v), key) for key, v in probs.items()]


def subsets_scheme(atoms, n: int) -> Scheme:
    """Wrap ``(prob, subset)`` pairs as a scheme of 0/1 indicator vectors."""
    k = max((len(sub) for _, sub in atoms), default=0)
    return Scheme(
        n, max(k, 1), [(p, SparseSample(n, list(sub), np.ones(len(sub)))) for p, sub in atoms]
    )


def inclusion_probabilities(atoms, n: int | None = None) -> np.ndarray:
    """Per-index inclusion probability of a distribution over subsets.

    ``atoms`` is a :class:`Scheme` or a list of ``(prob, subset)`` pairs.
    Indices that are never selected get probability 0.
    """
    if isinstance(atoms, Scheme):
        return atoms.inclusion_probabilities()
    atoms = list(atoms)
    if n is None:
        n = 1 + max((max(sub) for _, sub in atoms if len(sub)), default=-1)
    terms: list[list[float]] = [[] for _ in range(n)]
    for prob, sub in atoms:
        for i in sub:
            terms[i].append(prob)
    return np.array([math.fsum(t) for t in terms])
