"""Sparsification plans: the common output shape of both algorithms.

A plan keeps a set of heavy coordinates deterministically, and samples a
fixed number of the light coordinates with given inclusion probabilities,
assigning each sampled light coordinate its survivor value.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import MarginalVector, Scheme, SparseSample
from .systematic import SystematicLayout, enumerate_systematic


@dataclass(frozen=True, eq=False)
class SparsificationPlan:
    dim: int
    m: int
    heavy: np.ndarray
    heavy_values: np.ndarray
    light: np.ndarray
    marginals: MarginalVector
    survivor_values: np.ndarray

    @classmethod
    def passthrough(cls, raw, m: int) -> "SparsificationPlan":
        """Plan for a vector that is already m-sparse: return it unchanged."""
        raw = np.asarray(raw, dtype=float)
        keep = np.flatnonzero(raw)
        return cls(
            dim=raw.size,
            m=m,
            heavy=keep,
            heavy_values=raw[keep].copy(),
            light=np.zeros(0, dtype=np.intp),
            marginals=MarginalVector(np.zeros(0)),
            survivor_values=np.zeros(0),
        )

    @property
    def h(self) -> int:
        return int(self.heavy.size)

    @property
    def trivial(self) -> bool:
        return self.light.size == 0

    @cached_property
    def layout(self) -> SystematicLayout:
        return SystematicLayout.build(self.marginals)

    def inclusion(self) -> np.ndarray:
        """Planned inclusion probability of every coordinate."""
        out = np.zeros(self.dim)
        out[self.heavy] = 1.0
        out[self.light] = self.marginals.s
        return out

    def expected_values(self) -> np.ndarray:
        """Planned E[Q]; equals the target for an unbiased plan."""
        out = np.zeros(self.dim)
        out[self.heavy] = self.heavy_values
        out[self.light] = self.marginals.s * self.survivor_values
        return out

    def _assemble(self, picked: np.ndarray) -> SparseSample:
        support = np.concatenate([self.heavy, self.light[picked]])
        values = np.concatenate([self.heavy_values, self.survivor_values[picked]])
        return SparseSample(self.dim, support, values)

    def sample(self, rng=None, u: float | None = None) -> SparseSample:
        """One draw. Pass ``u`` in [0, 1) to fix the offset, else ``rng`` is used."""
        if self.trivial:
            return self._assemble(np.zeros(0, dtype=np.intp))
        if u is None:
            u = np.random.default_rng(rng).random()
        return self._assemble(self.layout.select(np.asarray(u)))

    def sample_batch(self, rng, size: int) -> tuple[np.ndarray, np.ndarray]:
        """``size`` draws as ``(indices, values)`` arrays of shape (size, support)."""
        rng = np.random.default_rng(rng)
        u = rng.random(size)
        heavy_idx = np.broadcast_to(self.heavy, (size, self.heavy.size))
        heavy_val = np.broadcast_to(self.heavy_values, (size, self.heavy.size))
        if self.trivial:
            return heavy_idx.copy(), heavy_val.copy()
        picked = self.layout.select(u)
        return (
            np.concatenate([heavy_idx, self.light[picked]], axis=1),
            np.concatenate([heavy_val, self.survivor_values[picked]], axis=1),
        )

    def scheme(self, divergence: str | None = None) -> Scheme:
        """Exact distribution of :meth:`sample`."""
        if self.trivial:
            atoms = [(1.0, self._assemble(np.zeros(0, dtype=np.intp)))]
        else:
            atoms = [
                (prob, self._assemble(np.asarray(subset, dtype=np.intp)))
                for prob, subset in enumerate_systematic(self.marginals)
            ]
        return Scheme(
            self.dim,
            self.m,
            atoms,
            heavy=sorted(int(i) for i in self.heavy),
            divergence=divergence,
        )
