"""Brute-force verifiers for small instances.

Nothing here uses the heavy threshold or the lambda equation to build its
answer (``is_preservative`` and ``kkt_check_ipo`` only *check* a given
object against those definitions), so these routines serve as independent
witnesses for the sparsification algorithms.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .core import Scheme, SparseSample, TargetVector
from .divergences import Divergence
from .exceptions import FeasibilityNotFound, NoInteriorIndex, TooLarge
from .heavy import partition
from .us_pi import _target

RANDK_MAX_N = 12
SCDO_MAX_N = 6
RANDOM_SCHEME_MAX_N = 8
FEASIBLE_TOL = 1e-7


def _dense_target(p) -> np.ndarray:
    if isinstance(p, TargetVector):
        return p.signed
    return np.asarray(p, dtype=float)


def expected_divergence(scheme: Scheme, spec: Divergence, p) -> float:
    """E[D(Q)] = sum over atoms of prob * D(atom), summed exactly."""
    p = _dense_target(p)
    return math.fsum(prob * spec.eval(sample.to_dense(), p) for prob, sample in scheme)


def randk_scheme(p, m: int) -> Scheme:
    """Uniform random m-subset of the nonzeros, each kept value scaled by n/m."""
    p = _dense_target(p)
    active = np.flatnonzero(p)
    n = active.size
    if n <= m:
        return Scheme.point_mass(p, m)
    if n > RANDK_MAX_N:
        raise TooLarge(f"rand-k enumeration is limited to n <= {RANDK_MAX_N}, got {n}")
    scale = n / m
    supports = list(itertools.combinations(active.tolist(), m))
    prob = 1.0 / len(supports)
    atoms = [(prob, SparseSample(p.size, list(s), p[list(s)] * scale)) for s in supports]
    return Scheme(p.size, m, atoms)


def spawn_streams(rng, count: int) -> list[np.random.SeedSequence]:
    """Independent child seed sequences from a seed or a Generator."""
    if isinstance(rng, np.random.Generator):
        root = np.random.SeedSequence(int(rng.integers(0, 2**63)))
    else:
        root = np.random.SeedSequence(rng)
    return root.spawn(count)


def randk_sample(p, m: int, rng=None) -> SparseSample:
    """One draw of the unbiased rand-k baseline."""
    p = _dense_target(p)
    active = np.flatnonzero(p)
    if active.size <= m:
        return SparseSample.from_dense(p)
    keep = np.random.default_rng(rng).choice(active, size=m, replace=False)
    return SparseSample(p.size, keep, p[keep] * (active.size / m))


@dataclass
class OracleResult:
    value: float
    scheme: Scheme | None
    residual: float
    converged: bool
    restart_values: list[float] = field(default_factory=list)


class _SCDO:
    """Augmented Lagrangian for the concentrated-distribution problem.

    Variables are one probability x_I per m-subset I of the active
    coordinates and one nonnegative support point y^I on I.
    """

    def __init__(self, p: np.ndarray, m: int, spec: Divergence):
        self.p_full = p
        self.active = np.flatnonzero(p)
        self.p = p[self.active]
        self.n = self.active.size
        self.m = m
        self.spec = spec
        self.supports = np.array(list(itertools.combinations(range(self.n), m)), dtype=np.intp)
        self.K = len(self.supports)
        # constant f_i(0) contribution of the coordinates outside each support
        f0 = spec.f(np.zeros(self.n), self.p, self.active)
        outside = np.ones((self.K, self.n), dtype=bool)
        np.put_along_axis(outside, self.supports, False, axis=1)
        self.off = (outside * f0).sum(axis=1)
        self.pi = self.p[self.supports]
        self.idx = self.active[self.supports]
        self.y_floor = 1e-12 * self.p.max()

    def unpack(self, z):
        return z[: self.K], z[self.K :].reshape(self.K, self.m)

    def divergences(self, y):
        return self.spec.f(y, self.pi, self.idx).sum(axis=1) + self.off

    def mean(self, x, y):
        G = np.zeros(self.n)
        np.add.at(G, self.supports, x[:, None] * y)
        return G

    def lagrangian(self, z, nu, lam, rho):
        x, y = self.unpack(z)
        D = self.divergences(y)
        cs = x.sum() - 1.0
        cg = self.mean(x, y) - self.p
        val = x @ D + nu * cs + lam @ cg + 0.5 * rho * (cs * cs + cg @ cg)
        w = lam + rho * cg  # multiplier estimate per coordinate
        wI = w[self.supports]
        gx = D + (nu + rho * cs) + (wI * y).sum(axis=1)
        gy = x[:, None] * (self.spec.df(np.maximum(y, self.y_floor), self.pi, self.idx) + wI)
        return val, np.concatenate([gx, gy.ravel()])

    def residual(self, x, y):
        return max(abs(x.sum() - 1.0), float(np.abs(self.mean(x, y) - self.p).max()))

    def run(self, rng, steps: int):
        x = rng.dirichlet(np.ones(self.K))
        y = self.pi * (self.n / self.m) * np.exp(rng.normal(0.0, 0.5, self.pi.shape))
        z = np.concatenate([x, y.ravel()])
        bounds = [(0.0, None)] * self.K + [(self.y_floor, None)] * (self.K * self.m)
        nu, lam, rho = 0.0, np.zeros(self.n), 10.0
        outer = 30
        per = max(20, steps // outer)
        prev = np.inf
        for _ in range(outer):
            res = minimize(
                self.lagrangian, z, args=(nu, lam, rho), jac=True, method="L-BFGS-B",
                bounds=bounds, options={"maxiter": per, "ftol": 1e-15, "gtol": 1e-12},
            )
            z = res.x
            x, y = self.unpack(z)
            cs = x.sum() - 1.0
            cg = self.mean(x, y) - self.p
            nu += rho * cs
            lam = lam + rho * cg
            r = self.residual(x, y)
            if r < 1e-12:
                break
            if r > 0.25 * prev:
                rho = min(rho * 10.0, 1e10)
            prev = r
        return self.unpack(z)

    def to_scheme(self, x, y) -> Scheme:
        x = np.where(x > 1e-13, x, 0.0)
        x = x / math.fsum(x)
        atoms = []
        for k in np.flatnonzero(x):
            atoms.append(
                (x[k], SparseSample(self.p_full.size, self.active[self.supports[k]], y[k]))
            )
        return Scheme(self.p_full.size, self.m, atoms)


def scdo_solve(
    p, m: int, spec: Divergence, restarts: int = 50, steps: int = 5000, rng=None
) -> OracleResult:
    """Multi-start numeric minimum of E[D(Q)] over concentrated schemes.

    A heuristic witness rather than a certificate: the best value found
    among restarts whose constraints hold to ``FEASIBLE_TOL``.
    """
    p = _dense_target(p)
    n = int(np.count_nonzero(p))
    if n > SCDO_MAX_N:
        raise TooLarge(f"scdo_solve is limited to n <= {SCDO_MAX_N}, got {n}")
    if n <= m:
        scheme = Scheme.point_mass(p, m)
        return OracleResult(expected_divergence(scheme, spec, p), scheme, 0.0, True)
    problem = _SCDO(p, m, spec)
    streams = spawn_streams(rng, restarts)
    best = OracleResult(math.inf, None, math.inf, False)
    values = []
    for seq in streams:
        x, y = problem.run(np.random.default_rng(seq), steps)
        try:
            scheme = problem.to_scheme(x, y)
        except ValueError:
            values.append(math.nan)
            continue
        resid = float(np.abs(scheme.mean() - p).max())
        value = expected_divergence(scheme, spec, p)
        values.append(value)
        if resid <= FEASIBLE_TOL and value < best.value:
            best = OracleResult(value, scheme, resid, True)
    best.restart_values = values
    return best


def random_unbiased_scheme(
    p, m: int, rng=None, *, base: Scheme | None = None, jitter: float = 0.5,
    max_retries: int = 100,
) -> Scheme:
    """A random unbiased m-sparsification of ``p`` with nonnegative values.

    Without ``base``: a random family of m-subsets covering every nonzero
    coordinate, Dirichlet probabilities and log-normal values. With
    ``base``: its supports and probabilities, with each value multiplied
    by exp(jitter * N(0, 1)). In both cases every coordinate is then
    rescaled so the scheme mean equals ``p`` exactly.

    Raises
    ------
    FeasibilityNotFound
        If no covering support family is found within ``max_retries``.
    """
    rng = np.random.default_rng(rng)
    p = _dense_target(p)
    active = np.flatnonzero(p)
    n = active.size
    if n > RANDOM_SCHEME_MAX_N:
        raise TooLarge(f"random schemes are limited to n <= {RANDOM_SCHEME_MAX_N}, got {n}")
    if n <= m:
        return Scheme.point_mass(p, m)
    if base is not None:
        supports = [s.support for _, s in base]
        x = base.probs
        Y = np.zeros((len(supports), p.size))
        for k, (_, s) in enumerate(base):
            Y[k, s.support] = s.values * np.exp(jitter * rng.normal(size=s.values.size))
    else:
        all_supports = list(itertools.combinations(active.tolist(), m))
        lo = math.ceil(n / m)
        for _ in range(max_retries):
            K = int(rng.integers(lo, len(all_supports) + 1))
            pick = rng.choice(len(all_supports), size=K, replace=False)
            supports = [np.array(all_supports[j]) for j in pick]
            covered = np.zeros(p.size, dtype=bool)
            for s in supports:
                covered[s] = True
            if covered[active].all():
                break
        else:
            raise FeasibilityNotFound("no covering support family found")
        x = rng.dirichlet(np.ones(len(supports)))
        Y = np.zeros((len(supports), p.size))
        for k, s in enumerate(supports):
            Y[k, s] = p[s] * (n / m) * np.exp(rng.normal(0.0, 1.0, s.size))
    mass = x @ Y
    scale = np.divide(p, mass, out=np.zeros_like(p), where=mass > 0)
    Y = Y * scale
    atoms = [(x[k], SparseSample(p.size, s, Y[k, s])) for k, s in enumerate(supports)]
    return Scheme(p.size, m, atoms)


@dataclass
class KKTCertificate:
    lam: float
    mu: dict[int, float]
    nu: dict[int, float]
    stationarity_residual: float
    complementarity_residual: float

    @property
    def min_multiplier(self) -> float:
        return min([self.lam, *self.mu.values(), *self.nu.values()])

    def ok(self, tol: float = 1e-9) -> bool:
        return (
            self.stationarity_residual <= tol
            and self.complementarity_residual <= tol
            and self.min_multiplier >= -1e-10
        )


def kkt_check_ipo(s, spec: Divergence, p, m: int) -> KKTCertificate:
    """KKT residuals of inclusion probabilities ``s`` for the convex problem

        minimize sum_i s_i f_i(p_i / s_i)  s.t.  0 < s_i <= 1, sum_i s_i <= m.

    ``s`` is indexed like ``p`` (dense) or like its nonzero coordinates.
    lambda is read off the interior coordinates, mu_i = g_i(p_i) - lambda
    on coordinates with s_i = 1 and nu = 0.
    """
    p = _dense_target(p)
    active = np.flatnonzero(p)
    s = np.asarray(getattr(s, "s", s), dtype=float)
    if s.size == p.size and s.size != active.size:
        s = s[active]
    vals = np.abs(p[active])
    full = s >= 1.0 - 1e-12
    if full.all():
        raise NoInteriorIndex("every inclusion probability is 1")
    interior = ~full
    g_int = spec.g(vals[interior] / s[interior], vals[interior], active[interior])
    lam = float(np.mean(g_int))
    mu = {int(i): float(v) - lam for i, v in zip(active[full], spec.g(vals[full], vals[full], active[full]))}
    nu = {int(i): 0.0 for i in active}
    stationarity = float(np.max(np.abs(g_int - lam)))
    comp = abs(lam * (math.fsum(s) - m))
    comp = max(comp, max((abs(v * (s[k] - 1.0)) for k, v in zip(np.flatnonzero(full), mu.values())), default=0.0))
    return KKTCertificate(lam, mu, nu, stationarity, comp)


def is_preservative(scheme: Scheme, p, m: int, tol: float = 1e-10) -> tuple[bool, list[str]]:
    """Whether every atom keeps all heavy coordinates at p_i and sets every
    other kept coordinate to the light average, with matching marginals."""
    pd = _dense_target(p)
    target = _target(pd, m, allow_negative=False)
    if not isinstance(target, TargetVector):
        ok = len(scheme) == 1 and np.allclose(scheme.atoms[0][1].to_dense(), pd, rtol=0, atol=tol)
        return ok, [] if ok else ["trivial target must map to itself"]
    part = partition(target, m)
    heavy = set(int(i) for i in part.heavy)
    problems = []
    for prob, sample in scheme:
        sup = set(sample.key)
        if not heavy <= sup:
            problems.append(f"support {sample.key} (prob {prob:.3g}) misses heavy {sorted(heavy - sup)}")
            continue
        for i, v in zip(sample.support, sample.values):
            want = pd[i] if int(i) in heavy else part.ell
            if abs(v - want) > tol * max(1.0, abs(want)):
                problems.append(f"support {sample.key}: value {v!r} at {int(i)}, expected {want!r}")
    expected = np.zeros(pd.size)
    expected[part.heavy] = 1.0
    expected[part.light] = pd[part.light] / part.ell
    gap = float(np.abs(scheme.inclusion_probabilities() - expected).max())
    if gap > max(tol, 1e-10):
        problems.append(f"inclusion probabilities off by {gap:.3g}")
    return not problems, problems
