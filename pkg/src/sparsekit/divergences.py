"""Separable divergences D(q) = sum_i f_i(q_i) and their g-transforms.

Every divergence exposes, coordinate-wise and vectorised over numpy
arrays,

* ``f(x, p, idx)``: the coordinate term f_i(x) for target value ``p``,
* ``df(x, p, idx)``: its derivative,
* ``g(x, p, idx)``: x f_i'(x) - f_i(x) + f_i(0), strictly increasing
  on (0, inf) with g(0+) = 0,
* ``g_inverse(lam, p, idx)``: the unique x > 0 with g(x) = lam.

``idx`` carries original coordinate indices, used by divergences whose
terms differ per coordinate (weights).
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable

import numpy as np

from .core import TargetVector, load_vector
from .exceptions import ConvergenceError, DomainError

MAX_DOUBLINGS = 200
MAX_BISECTIONS = 200
G_INVERSE_RTOL = 1e-12


def _as_values(p) -> np.ndarray:
    if isinstance(p, TargetVector):
        return p.signed
    return np.asarray(p, dtype=float)


class Divergence:
    name = "divergence"
    separable = True
    permutation_invariant = False
    strictly_convex = True
    sign_symmetric = False

    def f(self, x, p, idx=None):
        raise NotImplementedError

    def df(self, x, p, idx=None):
        raise NotImplementedError

    def g(self, x, p, idx=None):
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        return x * self.df(x, p, idx) - self.f(x, p, idx) + self.f(np.zeros_like(x), p, idx)

    def g_inverse(self, lam, p, idx=None):
        return _bisect_g_inverse(self, lam, p, idx)

    def eval(self, q, p) -> float:
        """D(q) = Div(q, p) for dense ``q`` and target ``p``."""
        q = np.asarray(q, dtype=float)
        p = _as_values(p)
        if q.shape != p.shape:
            raise ValueError(f"q has shape {q.shape}, p has shape {p.shape}")
        if np.any((q < 0) & (p >= 0)) or np.any((q > 0) & (p < 0)):
            raise DomainError("q leaves the closed orthant containing p")
        idx = np.arange(p.size)
        return float(np.sum(self.f(np.abs(q), np.abs(p), idx)))

    def describe(self) -> str:
        return self.name

    def __repr__(self):
        return f"{type(self).__name__}()"


class SquaredEuclidean(Divergence):
    name = "sqeuclid"
    permutation_invariant = True
    sign_symmetric = True

    def f(self, x, p, idx=None):
        return (np.asarray(x, dtype=float) - p) ** 2

    def df(self, x, p, idx=None):
        return 2.0 * (np.asarray(x, dtype=float) - p)

    def g(self, x, p, idx=None):
        return np.asarray(x, dtype=float) ** 2

    def g_inverse(self, lam, p=None, idx=None):
        return np.sqrt(lam)


class KL(Divergence):
    """Sum of q_i log(q_i / p_i), with 0 log 0 = 0."""

    name = "kl"
    permutation_invariant = True

    def f(self, x, p, idx=None):
        x = np.asarray(x, dtype=float)
        x, p = np.broadcast_arrays(x, np.asarray(p, dtype=float))
        out = np.zeros(x.shape)
        pos = x > 0
        if np.any(pos & (p <= 0)):
            raise DomainError("KL needs p_i > 0 wherever q_i > 0")
        out[pos] = x[pos] * np.log(x[pos] / p[pos])
        return out

    def df(self, x, p, idx=None):
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(x, dtype=float) / p) + 1.0

    def g(self, x, p=None, idx=None):
        return np.asarray(x, dtype=float).copy()

    def g_inverse(self, lam, p=None, idx=None):
        return np.asarray(lam, dtype=float).copy()

    def eval(self, q, p) -> float:
        p = _as_values(p)
        if np.any(p < 0):
            raise DomainError("KL is defined for nonnegative targets only")
        return super().eval(q, p)


class WeightedSquared(Divergence):
    """Sum of w_i (q_i - p_i)^2 with positive weights."""

    name = "wsq"
    sign_symmetric = True

    def __init__(self, weights):
        w = np.asarray(weights, dtype=float).ravel()
        if w.size == 0 or not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise DomainError("weights must be finite and strictly positive")
        self.weights = w

    def _w(self, idx, shape):
        if idx is None:
            if self.weights.size != int(np.prod(shape)):
                raise ValueError("coordinate indices are needed to look up weights")
            return self.weights.reshape(shape)
        return self.weights[np.asarray(idx)]

    def f(self, x, p, idx=None):
        x = np.asarray(x, dtype=float)
        return self._w(idx, x.shape) * (x - p) ** 2

    def df(self, x, p, idx=None):
        x = np.asarray(x, dtype=float)
        return 2.0 * self._w(idx, x.shape) * (x - p)

    def g(self, x, p=None, idx=None):
        x = np.asarray(x, dtype=float)
        return self._w(idx, x.shape) * x**2

    def g_inverse(self, lam, p=None, idx=None):
        lam = np.asarray(lam, dtype=float)
        return np.sqrt(lam / self._w(idx, lam.shape))

    def eval(self, q, p) -> float:
        p = _as_values(p)
        if p.size != self.weights.size:
            raise ValueError(f"{self.weights.size} weights for a vector of length {p.size}")
        return super().eval(q, p)

    def describe(self) -> str:
        return getattr(self, "source", "wsq")

    def __repr__(self):
        return f"WeightedSquared(weights={self.weights.tolist()})"


class CustomSeparable(Divergence):
    """User-supplied coordinate term ``f(x, p_i)`` and derivative ``df(x, p_i)``.

    Both callables must accept numpy arrays. The derivative is required
    rather than approximated because g feeds a root solve.
    """

    name = "custom"

    def __init__(
        self,
        f: Callable,
        df: Callable,
        *,
        permutation_invariant: bool = False,
        sign_symmetric: bool = False,
        probe: float = 1.0,
    ):
        self._f = f
        self._df = df
        self.permutation_invariant = permutation_invariant
        self.sign_symmetric = sign_symmetric
        if not np.isfinite(f(np.zeros(1), np.full(1, probe))).all():
            raise DomainError("f_i(0) must be finite")
        grid = np.logspace(-6, 6, 121)
        gv = self.g(grid, np.full(grid.shape, probe))
        if not (np.all(np.isfinite(gv)) and np.all(gv > 0) and np.all(np.diff(gv) > 0)):
            raise DomainError("g(x) = x f'(x) - f(x) + f(0) is not positive and increasing")

    def f(self, x, p, idx=None):
        return np.asarray(self._f(np.asarray(x, dtype=float), np.asarray(p, dtype=float)), dtype=float)

    def df(self, x, p, idx=None):
        return np.asarray(self._df(np.asarray(x, dtype=float), np.asarray(p, dtype=float)), dtype=float)

    def __repr__(self):
        return f"CustomSeparable({self._f!r})"


def _bisect_g_inverse(div: Divergence, lam, p, idx=None) -> np.ndarray:
    """Solve g(x) = lam coordinate-wise by bracketing then bisection."""
    lam, p = np.broadcast_arrays(np.asarray(lam, dtype=float), np.asarray(p, dtype=float))
    if np.any(lam <= 0):
        raise DomainError("g_inverse needs lambda > 0")
    if idx is not None:
        idx = np.broadcast_to(np.asarray(idx), lam.shape)

    def g(x):
        return div.g(x, p, idx)

    hi = np.ones(lam.shape)
    for _ in range(MAX_DOUBLINGS):
        low = g(hi) < lam
        if not low.any():
            break
        hi = np.where(low, 2.0 * hi, hi)
    else:
        raise ConvergenceError("could not bracket g_inverse from above")
    lo = hi / 2.0
    for _ in range(MAX_DOUBLINGS):
        high = g(lo) > lam
        if not high.any():
            break
        lo = np.where(high, lo / 2.0, lo)
        hi = np.where(high, lo * 2.0, hi)
    else:
        raise ConvergenceError("could not bracket g_inverse from below")
    for _ in range(MAX_BISECTIONS):
        if np.all(hi - lo <= G_INVERSE_RTOL * lo):
            break
        mid = 0.5 * (lo + hi)
        below = g(mid) < lam
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    else:
        raise ConvergenceError("g_inverse bisection did not converge")
    return 0.5 * (lo + hi)


def _coordinate(p, i):
    if isinstance(p, TargetVector):
        return float(p.values[i])
    return abs(float(np.asarray(p, dtype=float)[i]))


def eval(spec: Divergence, q, p) -> float:  # noqa: A001 - mirrors the divergence API
    return spec.eval(q, p)


def g_eval(spec: Divergence, i: int, x: float, p) -> float:
    if not x > 0:
        raise DomainError(f"g is evaluated on x > 0, got {x!r}")
    return float(spec.g(np.array([x]), np.array([_coordinate(p, i)]), np.array([i]))[0])


def g_inverse(spec: Divergence, i: int, lam: float, p) -> float:
    if not lam > 0:
        raise DomainError(f"g_inverse needs lambda > 0, got {lam!r}")
    return float(spec.g_inverse(np.array([lam]), np.array([_coordinate(p, i)]), np.array([i]))[0])


def from_name(name: str, base_dir: str | Path | None = None) -> Divergence:
    """Parse ``"sqeuclid"``, ``"kl"`` or ``"wsq:<weights-file>"``."""
    if name == "sqeuclid":
        return SquaredEuclidean()
    if name == "kl":
        return KL()
    if name.startswith("wsq:"):
        path = Path(name[4:])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        div = WeightedSquared(load_vector(path))
        div.source = name
        return div
    raise ValueError(f"unknown divergence {name!r}; expected sqeuclid, kl or wsq:<file>")
