"""Teleportation channel in the characteristic-function picture.

The averaged output of the teleportation protocol has
``chi_out(xi) = chi_res(xi, xi^*) chi_in(xi)``; fidelity with a pure input is
``(1/pi) int chi_in(-xi) chi_out(xi) dRe(xi) dIm(xi)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.special import eval_laguerre

from .gaussian_states import (
    ChannelParams,
    GaussianState,
    apply_loss,
    as_squeezing,
    squeezed_pattern,
    tmsv,
)
from .hermite import DEFAULT_POLICY
from .pv_ops import GeneralizedPVSpec, PVSpec, _real, photon_varied

CHUNK = 512
CONVERGENCE_RTOL = 1e-8
FIDELITY_SLACK = 1e-9


class QuadratureError(ArithmeticError):
    """Doubling the quadrature nodes moved the fidelity by more than the tolerance."""

    def __init__(self, coarse, fine):
        self.coarse = coarse
        self.fine = fine
        super().__init__(
            f"fidelity quadrature did not converge: {coarse!r} vs {fine!r} after doubling nodes"
        )


# -- inputs -----------------------------------------------------------------


@dataclass(frozen=True)
class InputState:
    """Pure single-mode input to the channel.

    ``kind`` is one of ``coherent`` (``param`` = alpha), ``squeezed_vacuum``
    (``param`` = s, q-variance ``exp(-2s)``), ``fock`` (``param`` = n) or
    ``custom`` (``func`` maps complex ``xi`` arrays to CF values; the caller
    vouches that it describes a pure state).
    """

    kind: str
    param: complex | float | int = 0.0
    func: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("coherent", "squeezed_vacuum", "fock", "custom"):
            raise ValueError(f"unknown input kind {self.kind!r}")
        if self.kind == "fock" and (int(self.param) != self.param or self.param < 0):
            raise ValueError("Fock inputs need a non-negative integer photon number")
        if self.kind == "custom" and self.func is None:
            raise ValueError("custom inputs need a CF callable")
        if self.kind == "custom":
            probe = np.array([0.3, 0.7j, -1.1 + 0.4j])
            if abs(complex(np.asarray(self.func(np.zeros(1)))[0]) - 1) > 1e-12:
                raise ValueError("custom input CF must equal 1 at the origin")
            if np.any(np.abs(self.func(probe)) > 1 + 1e-12):
                raise ValueError("custom input CF exceeds 1 in modulus")

    @classmethod
    def coherent(cls, alpha):
        return cls("coherent", complex(alpha))

    @classmethod
    def squeezed_vacuum(cls, s):
        return cls("squeezed_vacuum", float(s))

    @classmethod
    def fock(cls, n):
        return cls("fock", int(n))

    @classmethod
    def custom(cls, func):
        return cls("custom", 0.0, func)

    @property
    def is_radial(self):
        # whether |chi_in(xi)|^2 = chi_in(-xi) chi_in(xi) depends on |xi| only
        if self.kind == "squeezed_vacuum":
            return self.param == 0
        return self.kind in ("coherent", "fock")

    def cf(self, xi):
        xi = np.asarray(xi, dtype=np.complex128)
        if self.kind == "coherent":
            a = complex(self.param)
            return np.exp(-0.5 * np.abs(xi) ** 2 + xi * np.conj(a) - np.conj(xi) * a)
        if self.kind == "squeezed_vacuum":
            s = float(self.param)
            return np.exp(-0.5 * (xi.imag**2 * math.exp(-2 * s) + xi.real**2 * math.exp(2 * s))) + 0j
        if self.kind == "fock":
            x = np.abs(xi) ** 2
            return np.exp(-0.5 * x) * eval_laguerre(int(self.param), x) + 0j
        return np.asarray(self.func(xi), dtype=np.complex128)

    def to_dict(self):
        if self.kind == "coherent":
            a = complex(self.param)
            return {"kind": "coherent", "alpha": [a.real, a.imag]}
        if self.kind == "squeezed_vacuum":
            return {"kind": "squeezed_vacuum", "s": float(self.param)}
        if self.kind == "fock":
            return {"kind": "fock", "n": int(self.param)}
        raise ValueError("custom inputs cannot be serialized")

    @classmethod
    def from_dict(cls, doc):
        kind = doc["kind"]
        if kind == "coherent":
            a = doc.get("alpha", 0.0)
            a = complex(a[0], a[1]) if isinstance(a, (list, tuple)) else complex(a)
            return cls.coherent(a)
        if kind == "squeezed_vacuum":
            return cls.squeezed_vacuum(doc.get("s", 0.0))
        if kind == "fock":
            return cls.fock(doc.get("n", 0))
        raise ValueError(f"input kind {kind!r} cannot be read from a file")


# -- resources --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ResourceCF:
    """Two-mode resource: a Gaussian state, optionally photon-varied, optionally lossy.

    With an operation and a channel, the operation acts first.  A pure-loss
    channel maps ``chi(xi1, xi2)`` to
    ``chi(sqrt(T1) xi1, sqrt(T2) xi2) exp(-(1-T1)|xi1|^2/2 - (1-T2)|xi2|^2/2)``,
    so the photon-varied factor is simply evaluated at the contracted point.
    """

    base: GaussianState
    op: PVSpec | GeneralizedPVSpec | None = None
    channel: ChannelParams | None = None
    policy: object = DEFAULT_POLICY

    def __post_init__(self):
        if self.base.K != 2:
            raise ValueError("teleportation resources have two modes")

    @classmethod
    def ideal(cls):
        # r -> infinity limit; flagged so the response is exactly 1
        return _IdealResource()

    @cached_property
    def pv(self):
        return None if self.op is None else photon_varied(self.base, self.op, self.policy)

    @cached_property
    def gaussian(self):
        """The Gaussian part after the channel."""
        return self.base if self.channel is None else apply_loss(self.base, self.channel)

    @property
    def is_radial(self):
        # zero-mean TMSV-layout states are invariant under opposite phase
        # rotations of the two modes; the symmetric PV structure keeps that
        return squeezed_pattern(self.base) is not None

    def gaussian_response(self, xi):
        xi = np.asarray(xi, dtype=np.complex128)
        pts = np.stack([xi, np.conj(xi)], axis=-1)
        return self.gaussian.cf(pts)

    def ratio(self, xi):
        """Photon-varied factor on the diagonal (complex in general)."""
        xi = np.asarray(xi, dtype=np.complex128)
        if self.pv is None:
            return np.ones(xi.shape, dtype=np.complex128)
        ch = self.channel
        if ch is None or ch.T1 == ch.T2:
            scale = 1.0 if ch is None else math.sqrt(ch.T1)
            return np.asarray(self.pv.diagonal_factor(scale * xi)).reshape(xi.shape)
        pts = np.stack([math.sqrt(ch.T1) * xi, math.sqrt(ch.T2) * np.conj(xi)], axis=-1)
        return np.asarray(self.pv.factor(pts)).reshape(xi.shape)

    def response(self, xi):
        return self.ratio(xi) * self.gaussian_response(xi)


class _IdealResource:
    is_radial = True

    def ratio(self, xi):
        return np.ones(np.shape(xi), dtype=np.complex128)

    def gaussian_response(self, xi):
        return np.ones(np.shape(xi), dtype=np.complex128)

    def response(self, xi):
        return np.ones(np.shape(xi), dtype=np.complex128)


def as_resource(res):
    if isinstance(res, (ResourceCF, _IdealResource)):
        return res
    if isinstance(res, GaussianState):
        return ResourceCF(res)
    raise TypeError(f"cannot use {type(res).__name__} as a teleportation resource")


# -- channel ----------------------------------------------------------------


def _scalar_or_array(vals, xi):
    return complex(vals.reshape(-1)[0]) if np.ndim(xi) == 0 else vals


def response_function(res, xi):
    """``chi_res(xi, xi^*)``."""
    res = as_resource(res)
    arr = np.atleast_1d(np.asarray(xi, dtype=np.complex128))
    return _scalar_or_array(np.asarray(res.response(arr)).reshape(arr.shape), xi)


def output_cf(res, inp, xi):
    """``chi_out(xi) = chi_res(xi, xi^*) chi_in(xi)``."""
    res = as_resource(res)
    arr = np.atleast_1d(np.asarray(xi, dtype=np.complex128))
    vals = np.asarray(res.response(arr)).reshape(arr.shape) * inp.cf(arr)
    return _scalar_or_array(vals, xi)


@dataclass(frozen=True)
class QuadratureGrid:
    radial_cutoff: float = 6.0
    nodes: int = 400
    angular_nodes: int = 64

    def __post_init__(self):
        if not self.radial_cutoff > 0:
            raise ValueError("radial_cutoff must be positive")
        if self.nodes < 16:
            raise ValueError("at least 16 radial nodes are required")
        if self.angular_nodes < 4:
            raise ValueError("at least 4 angular nodes are required")

    def doubled(self):
        return QuadratureGrid(self.radial_cutoff, 2 * self.nodes, 2 * self.angular_nodes)


def _gauss_legendre(n, hi):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * hi * (x + 1), 0.5 * hi * w


def map_points(func, pts, threads):
    # fixed chunk boundaries: per-point values do not depend on the thread count
    flat = pts.reshape(-1)
    chunks = [flat[i:i + CHUNK] for i in range(0, flat.size, CHUNK)]
    if threads and threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(func, chunks))
    else:
        parts = [func(c) for c in chunks]
    return np.concatenate(parts).reshape(pts.shape)


def _radial_cutoff(inp, cutoff, tol=1e-18):
    # |chi_in|^2 of a Fock state carries a polynomial factor L_n(rho^2)^2 that
    # pushes its tail past the default cutoff
    if inp.kind != "fock" or inp.param == 0:
        return cutoff
    n = int(inp.param)
    rho = cutoff
    while rho * math.exp(-rho * rho) * eval_laguerre(n, rho * rho) ** 2 > tol:
        rho += 0.25
    return rho


def _fidelity_once(res, inp, grid, threads):
    def integrand(xi):
        return inp.cf(-xi) * inp.cf(xi) * np.asarray(res.response(xi)).reshape(xi.shape)

    rho, wr = _gauss_legendre(grid.nodes, _radial_cutoff(inp, grid.radial_cutoff))
    if res.is_radial and inp.is_radial:
        # (1/pi) int d^2 xi f(|xi|) = 2 int rho f(rho) d rho
        vals = map_points(integrand, rho.astype(np.complex128), threads)
        terms = 2 * wr * rho * vals
    else:
        theta = 2 * math.pi * np.arange(grid.angular_nodes) / grid.angular_nodes
        wt = 2 * math.pi / grid.angular_nodes
        c, s = np.cos(theta), np.sin(theta)
        # squeezed inputs: elliptic polar map with unit Jacobian factor rho
        sx = sy = 1.0
        if inp.kind == "squeezed_vacuum":
            sx, sy = math.exp(-float(inp.param)), math.exp(float(inp.param))
        pts = rho[:, None] * (sx * c + 1j * sy * s)[None, :]
        vals = map_points(integrand, pts, threads)
        terms = (wr * rho)[:, None] * wt * vals / math.pi
    # exact, order-independent accumulation
    return math.fsum(terms.real.ravel()), math.fsum(terms.imag.ravel())


def fidelity(res, inp, grid=None, threads=1, rtol=CONVERGENCE_RTOL):
    """Teleportation fidelity for a pure input.

    The integral is evaluated on ``grid`` and on a grid with doubled node
    counts; a relative change above ``rtol`` raises ``QuadratureError``.
    """
    res = as_resource(res)
    grid = grid or QuadratureGrid()
    coarse, _ = _fidelity_once(res, inp, grid, threads)
    fine, imag = _fidelity_once(res, inp, grid.doubled(), threads)
    if abs(fine - coarse) > rtol * max(abs(fine), 1e-300):
        raise QuadratureError(coarse, fine)
    if abs(imag) > 1e-8:
        raise QuadratureError(complex(coarse), complex(fine, imag))
    if not (-FIDELITY_SLACK <= fine <= 1 + FIDELITY_SLACK):
        raise ArithmeticError(f"fidelity {fine!r} lies outside [0, 1]")
    return min(max(fine, 0.0), 1.0)


# -- bounds and lossy ratio -------------------------------------------------


def h_max(r, xi, nbar=0.0):
    """Upper bound ``exp((2 nbar + 1)(V - sqrt(V^2 - 1)) |xi|^2)`` on any response ratio."""
    r = as_squeezing(r)
    x = np.abs(np.asarray(xi, dtype=np.complex128)) ** 2
    out = np.exp((2 * nbar + 1) * r.noise * x)
    return float(out) if out.ndim == 0 else out


def h_prime(r, spec, ch, xi, policy=None):
    """Lossy-channel response ratio, with the operation applied before the channel."""
    r = as_squeezing(r)
    res = ResourceCF(tmsv(r), spec, ch, policy or DEFAULT_POLICY)
    arr = np.atleast_1d(np.asarray(xi, dtype=np.complex128))
    vals = np.asarray(res.ratio(arr)).reshape(arr.shape)
    vals = np.where(arr == 0, 1.0, vals)
    out = _real(vals, "lossy response ratio")
    return float(out.reshape(-1)[0]) if np.ndim(xi) == 0 else out
