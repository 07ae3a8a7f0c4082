"""Shared domain types, validation and summation helpers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .exceptions import (
    InfeasibleMarginals,
    NegativeNotAllowed,
    NonFinite,
    TrivialInstance,
)

PROB_TOL = 1e-12
MARGINAL_SUM_TOL = 1e-9


def compensated_cumsum(values: Iterable[float]) -> np.ndarray:
    """Running sums with Neumaier compensation.

    Returns an array of length ``len(values) + 1`` starting at 0.
    """
    out = [0.0]
    total = 0.0
    comp = 0.0
    for v in values:
        v = float(v)
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
        out.append(total + comp)
    return np.asarray(out, dtype=float)


def fsum(values: Iterable[float]) -> float:
    return math.fsum(float(v) for v in values)


@dataclass(frozen=True, eq=False)
class TargetVector:
    """A validated vector to sparsify.

    ``values`` holds magnitudes in the original indexing (zeros kept in
    place so indices never shift); ``active`` lists the nonzero original
    indices in ascending order and ``sort_perm`` lists the same indices
    sorted by decreasing magnitude, ties broken by original index.
    """

    values: np.ndarray
    active: np.ndarray
    sort_perm: np.ndarray
    negative: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @property
    def n(self) -> int:
        return int(self.active.size)

    @property
    def dim(self) -> int:
        return int(self.values.size)

    @property
    def zeros(self) -> np.ndarray:
        return np.flatnonzero(self.values == 0)

    @property
    def signs(self) -> np.ndarray:
        s = np.ones(self.dim)
        if self.negative.size:
            s[self.negative] = -1.0
        return s

    @property
    def signed(self) -> np.ndarray:
        """The original vector, signs restored."""
        return self.values * self.signs

    @property
    def sorted_values(self) -> np.ndarray:
        return self.values[self.sort_perm]

    @property
    def total(self) -> float:
        return math.fsum(self.values[self.active])


def validate_target(raw: Sequence[float], m: int, allow_negative: bool = False) -> TargetVector:
    """Validate ``raw`` for an ``m``-sparsification.

    Raises
    ------
    NonFinite
        If any entry is NaN or infinite.
    NegativeNotAllowed
        If negatives are present and ``allow_negative`` is false.
    TrivialInstance
        If ``raw`` has at most ``m`` nonzero entries; the caller should
        return ``raw`` unchanged.
    """
    arr = np.asarray(raw, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("target vector is empty")
    if int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    m = int(m)
    if not np.all(np.isfinite(arr)):
        bad = np.flatnonzero(~np.isfinite(arr))
        raise NonFinite(f"non-finite entries at indices {bad.tolist()}")
    negative = arr < 0
    if negative.any() and not allow_negative:
        raise NegativeNotAllowed(
            f"negative entries at indices {np.flatnonzero(negative).tolist()}"
        )
    active = np.flatnonzero(arr != 0)
    if active.size <= m:
        raise TrivialInstance(
            f"{active.size} nonzero entries with m={m}; nothing to sparsify", raw=arr
        )
    mags = np.abs(arr)
    order = np.argsort(-mags[active], kind="stable")
    return TargetVector(
        values=mags,
        active=active,
        sort_perm=active[order],
        negative=negative if negative.any() else np.zeros(arr.size, dtype=bool),
    )


@dataclass(frozen=True, eq=False)
class SparseSample:
    """An m-sparse vector of dimension ``n``: values on ``support`` only."""

    n: int
    support: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.intp)
        values = np.asarray(self.values, dtype=float)
        if support.shape != values.shape:
            raise ValueError("support and values must have the same length")
        if support.size and (support.min() < 0 or support.max() >= self.n):
            raise ValueError("support index out of range")
        if np.unique(support).size != support.size:
            raise ValueError("support indices repeat")
        if not np.all(np.isfinite(values)):
            raise NonFinite("sample values must be finite")
        order = np.argsort(support)
        object.__setattr__(self, "support", support[order])
        object.__setattr__(self, "values", values[order])

    @classmethod
    def from_dense(cls, dense: Sequence[float]) -> "SparseSample":
        dense = np.asarray(dense, dtype=float)
        idx = np.flatnonzero(dense)
        return cls(dense.size, idx, dense[idx])

    @property
    def key(self) -> tuple[int, ...]:
        return tuple(int(i) for i in self.support)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.n)
        out[self.support] = self.values
        return out

    def as_dict(self) -> dict[int, float]:
        return {int(i): float(v) for i, v in zip(self.support, self.values)}


@dataclass(frozen=True, eq=False)
class MarginalVector:
    """Inclusion probabilities in (0, 1] summing to an integer ``k``."""

    s: np.ndarray
    k: int = -1

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float).ravel()
        if not np.all(np.isfinite(s)):
            raise InfeasibleMarginals("marginals must be finite")
        if s.size and s.min() <= 0:
            raise InfeasibleMarginals(f"marginals must be positive, min is {s.min()!r}")
        if s.size and s.max() > 1 + PROB_TOL:
            i = int(np.argmax(s))
            raise InfeasibleMarginals(f"marginal s[{i}]={s[i]!r} exceeds 1")
        total = math.fsum(s)
        k = int(round(total)) if self.k < 0 else int(self.k)
        if abs(total - k) > MARGINAL_SUM_TOL:
            raise InfeasibleMarginals(f"marginals sum to {total!r}, not the integer {k}")
        object.__setattr__(self, "s", np.minimum(s, 1.0))
        object.__setattr__(self, "k", k)

    def __len__(self):
        return self.s.size


class Scheme:
    """Exact finitely supported distribution over sparse vectors.

    Atoms sharing a support set are merged; they must then carry the same
    values, since a scheme never places two different vectors on one
    support.
    """

    def __init__(
        self,
        n: int,
        m: int,
        atoms: Iterable[tuple[float, SparseSample]],
        *,
        heavy: Sequence[int] = (),
        divergence: str | None = None,
        merge_tol: float = 1e-12,
    ):
        self.n = int(n)
        self.m = int(m)
        self.heavy = tuple(int(i) for i in heavy)
        self.divergence = divergence
        merged: dict[tuple[int, ...], list] = {}
        for prob, sample in atoms:
            prob = float(prob)
            if not prob > 0:
                continue
            if sample.n != self.n:
                raise ValueError(f"atom has dimension {sample.n}, scheme has {self.n}")
            if sample.support.size > self.m:
                raise ValueError(
                    f"atom support size {sample.support.size} exceeds m={self.m}"
                )
            key = sample.key
            if key in merged:
                other = merged[key][1]
                scale = max(1.0, float(np.abs(other.values).max(initial=0.0)))
                if not np.allclose(other.values, sample.values, rtol=0, atol=merge_tol * scale):
                    raise ValueError(f"conflicting values for support {key}")
                merged[key][0].append(prob)
            else:
                merged[key] = [[prob], sample]
        self.atoms: list[tuple[float, SparseSample]] = [
            (math.fsum(probs), sample) for probs, sample in merged.values()
        ]
        total = math.fsum(p for p, _ in self.atoms)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"atom probabilities sum to {total!r}")

    def __len__(self):
        return len(self.atoms)

    def __iter__(self):
        return iter(self.atoms)

    def __repr__(self):
        return f"Scheme(n={self.n}, m={self.m}, atoms={len(self.atoms)})"

    @classmethod
    def point_mass(cls, vector: Sequence[float], m: int, **kw) -> "Scheme":
        sample = SparseSample.from_dense(vector)
        return cls(sample.n, max(m, sample.support.size), [(1.0, sample)], **kw)

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for p, _ in self.atoms])

    def as_mapping(self) -> dict[tuple[int, ...], tuple[float, np.ndarray]]:
        return {s.key: (p, s.values) for p, s in self.atoms}

    def mean(self) -> np.ndarray:
        terms: list[list[float]] = [[] for _ in range(self.n)]
        for prob, sample in self.atoms:
            for i, v in zip(sample.support, sample.values):
                terms[i].append(prob * v)
        return np.array([math.fsum(t) for t in terms])

    def inclusion_probabilities(self) -> np.ndarray:
        terms: list[list[float]] = [[] for _ in range(self.n)]
        for prob, sample in self.atoms:
            for i in sample.support:
                terms[i].append(prob)
        return np.array([math.fsum(t) for t in terms])

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "divergence": self.divergence,
            "heavy": list(self.heavy),
            "atoms": [
                {
                    "prob": prob,
                    "support": [int(i) for i in s.support],
                    "values": [float(v) for v in s.values],
                }
                for prob, s in self.atoms
            ],
            "marginals": [float(x) for x in self.inclusion_probabilities()],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scheme":
        n = int(data["n"])
        atoms = [
            (a["prob"], SparseSample(n, a["support"], a["values"])) for a in data["atoms"]
        ]
        return cls(
            n,
            int(data["m"]),
            atoms,
            heavy=data.get("heavy", ()),
            divergence=data.get("divergence"),
        )


def load_vector(path: str | Path) -> np.ndarray:
    """Read a vector from a JSON array or a CSV file with one value per line."""
    path = Path(path)
    text = path.read_text()
    stripped = text.strip()
    if stripped.startswith("["):
        data = json.loads(stripped)
        return np.asarray(data, dtype=float)
    values = []
    for line in stripped.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        values.append(float(line.split(",")[0]))
    return np.asarray(values, dtype=float)
