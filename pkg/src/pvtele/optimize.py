"""Optimization of the integrated response ratio.

For a generalized operation the response ratio is
``e^T G(xi) e / e^T G(0) e``, so any integral of it over a fixed quadrature is
a generalized Rayleigh quotient ``e^T W e / e^T G0 e``.  Both schemes run a
seeded particle swarm on that quotient; scheme 1 searches the coefficient
sphere, scheme 2 the NLA gain.  ``eigen_optimum`` gives the exact scheme-1
optimum and serves as a cross-check.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .gaussian_states import GaussianState, as_squeezing, tmsv
from .hermite import DEFAULT_POLICY
from .pv_ops import GeneralizedPVSpec, GeneralizedPVState, nla_coefficients, response_ratio


@dataclass(frozen=True)
class ObjectiveConfig:
    """Integration rule for the objective.

    ``radial_line`` integrates ``H`` along the positive real axis up to
    ``xi_lim``; ``disk`` averages that line integral over all directions
    (needed when ``H`` is not a function of ``|xi|`` alone).
    """

    xi_lim: float = 2.0
    radial_nodes: int = 64
    domain: str = "radial_line"
    angular_nodes: int = 32

    def __post_init__(self):
        if not self.xi_lim > 0:
            raise ValueError("xi_lim must be positive")
        if self.domain not in ("radial_line", "disk"):
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.radial_nodes < 1 or self.angular_nodes < 2 or self.angular_nodes % 2:
            raise ValueError("need at least one radial node and an even angular count")

    def nodes(self):
        """Complex nodes and real weights of the rule."""
        x, w = np.polynomial.legendre.leggauss(self.radial_nodes)
        rho = 0.5 * self.xi_lim * (x + 1)
        wr = 0.5 * self.xi_lim * w
        if self.domain == "radial_line":
            return rho.astype(np.complex128), wr
        theta = 2 * math.pi * np.arange(self.angular_nodes) / self.angular_nodes
        pts = rho[:, None] * np.exp(1j * theta)[None, :]
        wts = wr[:, None] * np.full(self.angular_nodes, 1.0 / self.angular_nodes)[None, :]
        return pts.ravel(), wts.ravel()


@dataclass(frozen=True)
class PSOConfig:
    """Particle-swarm settings; ``bounds=None`` picks the scheme default."""

    swarm: int = 50
    iters: int = 500
    inertia: float = 0.7
    cognitive: float = 1.5
    social: float = 1.5
    seed: int = 0
    bounds: tuple | None = None
    restarts: int = 4
    warm_start: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.swarm < 2 or self.iters < 1 or self.restarts < 1:
            raise ValueError("need swarm >= 2, iters >= 1 and restarts >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True, eq=False)
class QuadraticObjective:
    """``e^T W e / e^T G0 e`` with real symmetric ``W`` and positive definite ``G0``."""

    W: np.ndarray
    G0: np.ndarray

    @property
    def N(self):
        return self.W.shape[0] - 1

    def __call__(self, e):
        e = np.asarray(e, dtype=np.float64)
        return float(e @ self.W @ e / (e @ self.G0 @ e))

    def batch(self, E):
        return np.einsum("pj,jk,pk->p", E, self.W, E) / np.einsum("pj,jk,pk->p", E, self.G0, E)


def _resource(r_or_state):
    if isinstance(r_or_state, GaussianState):
        return r_or_state
    return tmsv(as_squeezing(r_or_state))


def build_objective(resource, N, cfg=None, dagger=True, policy=None):
    """Quadrature-weighted Gram matrices for ``A_N^dag`` (or ``A_N``) on ``resource``."""
    cfg = cfg or ObjectiveConfig()
    base = _resource(resource)
    state = GeneralizedPVState(base, GeneralizedPVSpec(N, None, dagger), policy or DEFAULT_POLICY)
    pts, wts = cfg.nodes()
    G = state.diagonal_gram(pts)
    W = np.einsum("p,pjk->jk", wts, G.real)
    return QuadraticObjective((W + W.T) / 2, state.gram_origin)


def objective(spec, r, cfg=None, policy=None):
    """Integrated response ratio of ``spec`` on the resource ``r`` (squeezing or state)."""
    obj = build_objective(r, spec.N, cfg, spec.dagger, policy)
    return obj(spec.vector)


def bound_objective(r, cfg=None, nbar=0.0):
    """The same integral of the upper bound ``exp((2 nbar + 1) e^{-2r} |xi|^2)``."""
    cfg = cfg or ObjectiveConfig()
    pts, wts = cfg.nodes()
    return float(wts @ np.exp((2 * nbar + 1) * as_squeezing(r).noise * np.abs(pts) ** 2))


def sign_gauge(e):
    """Unit-normalize and make the first nonzero component positive."""
    e = np.asarray(e, dtype=np.float64)
    e = e / np.linalg.norm(e)
    nz = np.flatnonzero(e)
    if nz.size and e[nz[0]] < 0:
        e = -e
    return e + 0.0


def eigen_optimum(obj):
    """Exact maximizer of the quotient: top generalized eigenpair of ``(W, G0)``."""
    d = 1 / np.sqrt(np.diag(obj.G0))
    vals, vecs = scipy.linalg.eigh(d[:, None] * obj.W * d, d[:, None] * obj.G0 * d)
    e = sign_gauge(d * vecs[:, -1])
    return obj(e), e


# -- particle swarm ---------------------------------------------------------


@dataclass
class SwarmResult:
    x: np.ndarray
    value: float
    trace: list = field(default_factory=list)


def _better(f, x, best_f, best_x, prefer_low):
    if f > best_f:
        return True
    return prefer_low and f == best_f and x[0] < best_x[0]


def _swarm(fun, lo, hi, cfg, rng, seeds=(), project=None, prefer_low=False):
    """One global-best PSO run maximizing ``fun`` (batched over rows)."""
    dim = lo.shape[0]
    width = hi - lo
    vmax = 0.5 * width
    x = lo + rng.random((cfg.swarm, dim)) * width
    for i, s in enumerate(seeds[: cfg.swarm]):
        x[i] = s
    if project is not None:
        x = project(x)
    v = (rng.random((cfg.swarm, dim)) - 0.5) * width
    f = fun(x)
    pbest, pbest_f = x.copy(), f.copy()
    g = 0
    for i in range(1, cfg.swarm):
        if _better(f[i], x[i], f[g], x[g], prefer_low):
            g = i
    gbest, gbest_f = x[g].copy(), float(f[g])
    trace = []
    for _ in range(cfg.iters):
        r1 = rng.random((cfg.swarm, dim))
        r2 = rng.random((cfg.swarm, dim))
        v = (cfg.inertia * v + cfg.cognitive * r1 * (pbest - x) + cfg.social * r2 * (gbest - x))
        v = np.clip(v, -vmax, vmax)
        x = np.clip(x + v, lo, hi)
        if project is not None:
            x = project(x)
        f = fun(x)
        improved = f > pbest_f
        pbest[improved] = x[improved]
        pbest_f[improved] = f[improved]
        for i in range(cfg.swarm):
            if _better(f[i], x[i], gbest_f, gbest, prefer_low):
                gbest, gbest_f = x[i].copy(), float(f[i])
        trace.append(gbest_f)
    return SwarmResult(gbest, gbest_f, trace)


def pso_maximize(fun, lo, hi, cfg, seeds=(), project=None, prefer_low=False):
    """Multi-start PSO; restarts use independent child streams of ``cfg.seed``.

    The best restart wins (lowest restart index on ties); the trace is the
    running best over all restarts, iteration by iteration.
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    children = np.random.SeedSequence(int(cfg.seed)).spawn(cfg.restarts)

    def run(k):
        rng = np.random.Generator(np.random.PCG64(children[k]))
        return _swarm(fun, lo, hi, cfg, rng, seeds, project, prefer_low)

    if cfg.threads > 1 and cfg.restarts > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            runs = list(pool.map(run, range(cfg.restarts)))
    else:
        runs = [run(k) for k in range(cfg.restarts)]
    best = runs[0]
    for res in runs[1:]:
        if _better(res.value, res.x, best.value, best.x, prefer_low):
            best = res
    trace = np.maximum.reduce([np.asarray(res.trace) for res in runs])
    return SwarmResult(best.x, best.value, [float(t) for t in trace])


# -- schemes ----------------------------------------------------------------


@dataclass
class OptimizationResult:
    scheme: str
    N: int
    r_db: float
    seed: int
    objective: float
    trace: list
    e: np.ndarray
    g: float | None = None

    def to_dict(self):
        doc = {"scheme": self.scheme, "N": self.N, "r_dB": self.r_db, "seed": int(self.seed)}
        if self.scheme == "e":
            doc["e_opt"] = [float(v) for v in self.e]
        else:
            doc["g_opt"] = self.g
            doc["e_of_g"] = [float(v) for v in self.e]
        doc["objective"] = self.objective
        doc["trace"] = list(self.trace)
        return doc


def _r_db(resource):
    if isinstance(resource, GaussianState):
        # c / V = tanh(2r) for TMSV, TMSC and TMST alike
        return as_squeezing(0.5 * math.atanh(resource.V[0, 2] / resource.V[0, 0])).r_db
    return as_squeezing(resource).r_db


def optimize_e(N, r, ocfg=None, pcfg=None, dagger=True, policy=None, obj=None):
    """Scheme 1: maximize the objective over unit coefficient vectors ``e``.

    The swarm works in coordinates ``y = L^T D e`` where ``D G0 D = L L^T``
    (diagonal scaling, then Cholesky), which turns the quotient into an
    ordinary Rayleigh quotient ``y^T W' y / y^T y`` on the unit sphere.
    """
    ocfg = ocfg or ObjectiveConfig()
    pcfg = pcfg or PSOConfig()
    obj = obj or build_objective(r, N, ocfg, dagger, policy)
    d = 1 / np.sqrt(np.diag(obj.G0))
    L = np.linalg.cholesky(d[:, None] * obj.G0 * d)
    Wd = d[:, None] * obj.W * d
    Wt = scipy.linalg.solve_triangular(L, scipy.linalg.solve_triangular(L, Wd, lower=True).T, lower=True)
    Wt = (Wt + Wt.T) / 2

    def to_e(y):
        return d * scipy.linalg.solve_triangular(L.T, y, lower=False)

    def fun(Y):
        num = np.einsum("pj,jk,pk->p", Y, Wt, Y)
        den = np.einsum("pj,pj->p", Y, Y)
        # a particle can land exactly on the origin when the clamp saturates
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), -np.inf)

    def project(Y):
        n = np.linalg.norm(Y, axis=1, keepdims=True)
        return Y / np.where(n > 0, n, 1.0)

    ident = np.zeros(N + 1)
    ident[0] = 1.0
    seeds = [L.T @ (ident / d)]
    if pcfg.warm_start:
        seeds.append(np.linalg.eigh(Wt)[1][:, -1])
    lo, hi = pcfg.bounds or (-1.0, 1.0)
    res = pso_maximize(fun, np.full(N + 1, lo), np.full(N + 1, hi), pcfg, seeds, project)
    e = sign_gauge(to_e(res.x))
    return OptimizationResult("e", N, _r_db(r), pcfg.seed, obj(e), res.trace, e)


def optimize_g(N, r, ocfg=None, pcfg=None, policy=None, obj=None):
    """Scheme 2: maximize over the NLA gain ``g`` in ``[1, 1/lambda]``; ties go to the lower ``g``."""
    ocfg = ocfg or ObjectiveConfig()
    pcfg = pcfg or PSOConfig()
    sq = as_squeezing(r)
    obj = obj or build_objective(r, N, ocfg, True, policy)
    lo, hi = pcfg.bounds or (1.0, sq.g_max)

    def fun(X):
        return obj.batch(nla_coefficients(X[:, 0], N, sq))

    res = pso_maximize(fun, [lo], [hi], pcfg, [np.array([lo])], prefer_low=True)
    g = float(res.x[0])
    e = nla_coefficients(g, N, sq)
    return OptimizationResult("g", N, sq.r_db, pcfg.seed, obj(e), res.trace, e, g)


def response_curve(resource, e, xi, dagger=True, policy=None):
    """``H(xi)`` for coefficients ``e`` on ``resource`` (complex points allowed)."""
    base = _resource(resource)
    state = GeneralizedPVState(base, GeneralizedPVSpec(len(e) - 1, e, dagger), policy or DEFAULT_POLICY)
    return response_ratio(state, xi)
