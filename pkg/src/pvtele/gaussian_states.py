"""Gaussian states in quadrature form and their characteristic functions.

Conventions: quadratures ordered (q1, p1, ..., qK, pK), vacuum variance 1
(hbar = 2), ``a = (q + i p) / 2`` and ``D(xi) = exp(xi a^dag - xi^* a)``, so the
vacuum has ``chi(xi) = exp(-|xi|^2 / 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PHYSICALITY_TOL = 1e-9


def _single(m):
    return np.asarray(m, dtype=np.complex128)


def z_matrix(K):
    return np.kron(np.eye(K), _single([[1, 0], [0, -1]]))


def j_matrix(K):
    return np.kron(np.eye(K), _single([[1, 1j], [1, -1j]]) / 2)


def x_matrix(K):
    return np.kron(np.eye(K), _single([[0, 1], [1, 0]]))


def omega(K):
    return np.kron(np.eye(K), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True)
class SqueezingParam:
    """Two-mode squeezing ``r >= 0``."""

    r: float

    def __post_init__(self):
        if not (self.r >= 0 and math.isfinite(self.r)):
            raise ValueError(f"squeezing parameter must be finite and non-negative, got {self.r}")
        object.__setattr__(self, "r", float(self.r))

    @classmethod
    def from_db(cls, r_db):
        # r_dB = -10 log10(exp(-2r))
        return cls(float(r_db) * math.log(10) / 20)

    @classmethod
    def from_lambda(cls, lam):
        return cls(math.atanh(lam))

    @property
    def lam(self):
        return math.tanh(self.r)

    @property
    def V(self):
        return math.cosh(2 * self.r)

    @property
    def r_db(self):
        return -10 * math.log10(math.exp(-2 * self.r))

    @property
    def cross(self):
        """``sqrt(V**2 - 1)``, the TMSV quadrature correlation."""
        return math.sinh(2 * self.r)

    @property
    def noise(self):
        """``V - sqrt(V**2 - 1)``; equals ``exp(-2r)``."""
        V = self.V
        return V - math.sqrt(V * V - 1)

    @property
    def g_max(self):
        """NLA gain at which the amplified TMSV saturates the response bound."""
        V = self.V
        return math.sqrt((V + 1) / (V - 1)) if V > 1 else math.inf


def as_squeezing(r):
    return r if isinstance(r, SqueezingParam) else SqueezingParam(r)


@dataclass(frozen=True)
class ChannelParams:
    T1: float = 1.0
    T2: float = 1.0

    def __post_init__(self):
        for name in ("T1", "T2"):
            T = getattr(self, name)
            if not (0 < T <= 1):
                raise ValueError(f"{name} must lie in (0, 1], got {T}")


@dataclass(frozen=True, eq=False)
class GaussianState:
    """K-mode Gaussian state: covariance ``V`` (2K x 2K) and means ``mu``."""

    V: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        V = np.array(self.V, dtype=np.float64)
        mu = np.array(self.mu, dtype=np.float64).reshape(-1)
        if V.ndim != 2 or V.shape[0] != V.shape[1] or V.shape[0] % 2:
            raise ValueError("covariance must be a square matrix of even size")
        if mu.shape[0] != V.shape[0]:
            raise ValueError("means must have length 2K")
        if not np.allclose(V, V.T, rtol=0, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        V = (V + V.T) / 2
        V.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "mu", mu)
        if not self.is_physical():
            raise ValueError("covariance violates the uncertainty relation V + i Omega >= 0")

    @property
    def K(self):
        return self.V.shape[0] // 2

    @classmethod
    def vacuum(cls, K=1):
        return cls(np.eye(2 * K), np.zeros(2 * K))

    def is_physical(self, tol=PHYSICALITY_TOL):
        ev = np.linalg.eigvalsh(self.V + 1j * omega(self.K))
        return bool(ev.min() >= -tol)

    def augment(self):
        """``(V~, mu~) = (Z J V J^dag Z, Z J mu)``."""
        Z, J = z_matrix(self.K), j_matrix(self.K)
        return Z @ J @ self.V @ J.conj().T @ Z, Z @ J @ self.mu

    def cf(self, xi):
        """Characteristic function at ``xi`` of shape ``(K,)`` or ``(npts, K)``."""
        return gaussian_cf(self, xi)


def augmented_vector(xi):
    """``[xi_1, xi_1^*, ..., xi_K, xi_K^*]`` along the last axis."""
    xi = np.asarray(xi, dtype=np.complex128)
    out = np.empty(xi.shape[:-1] + (2 * xi.shape[-1],), dtype=np.complex128)
    out[..., 0::2] = xi
    out[..., 1::2] = np.conj(xi)
    return out


def gaussian_cf(state, xi):
    xi = np.asarray(xi, dtype=np.complex128)
    if xi.shape[-1] != state.K:
        raise ValueError(f"expected {state.K} phase-space arguments, got {xi.shape[-1]}")
    Vt, mut = state.augment()
    xt = augmented_vector(xi)
    quad = np.einsum("...i,ij,...j->...", np.conj(xt), Vt, xt)
    lin = xt @ np.conj(mut)
    out = np.exp(-0.5 * quad.real + lin)
    return complex(out) if out.ndim == 0 else out


def _tmsv_cov(r, scale=1.0):
    V, c = r.V * scale, r.cross * scale
    return np.array([
        [V, 0, c, 0],
        [0, V, 0, -c],
        [c, 0, V, 0],
        [0, -c, 0, V],
    ])


def _means(z1, z2):
    z1, z2 = complex(z1), complex(z2)
    return 2 * np.array([z1.real, z1.imag, z2.real, z2.imag])


def tmsv(r):
    """Two-mode squeezed vacuum ``S(r)|0, 0>``."""
    return GaussianState(_tmsv_cov(as_squeezing(r)), np.zeros(4))


def tmsc(r, z1=0.0, z2=0.0):
    """Two-mode squeezed coherent state ``D1(z1) D2(z2) S(r)|0, 0>``."""
    return GaussianState(_tmsv_cov(as_squeezing(r)), _means(z1, z2))


def tmst(r, nbar=0.0):
    """Two-mode squeezed thermal state with equal occupations ``nbar`` on both inputs."""
    if nbar < 0:
        raise ValueError("nbar must be non-negative")
    return GaussianState(_tmsv_cov(as_squeezing(r), 2 * nbar + 1), np.zeros(4))


def tmsc_swapped_displacements(z1, z2, r):
    """Displacements for the squeeze-after-displace ordering of the same TMSC state."""
    r = as_squeezing(r).r
    ch, sh = math.cosh(r), math.sinh(r)
    z1, z2 = complex(z1), complex(z2)
    return z1 * ch - z2.conjugate() * sh, z2 * ch - z1.conjugate() * sh


def apply_loss(state, ch):
    """Send both modes of a two-mode state through pure-loss channels."""
    if state.K != 2:
        raise ValueError("apply_loss expects a two-mode state")
    s = np.sqrt([ch.T1, ch.T1, ch.T2, ch.T2])
    V = s[:, None] * state.V * s[None, :] + np.diag(1 - s**2)
    return GaussianState(V, s * state.mu)


def squeezed_pattern(state, tol=1e-14):
    """Return ``(a, b, c)`` when a zero-mean two-mode state has the TMSV layout.

    The layout is ``diag(a, a, b, b)`` plus correlations ``cov(q1, q2) = c``
    and ``cov(p1, p2) = -c``; TMSV, TMST and their lossy versions all have it.
    """
    if state.K != 2 or np.any(state.mu != 0):
        return None
    a, b, c = state.V[0, 0], state.V[2, 2], state.V[0, 2]
    ref = np.array([
        [a, 0, c, 0],
        [0, a, 0, -c],
        [c, 0, b, 0],
        [0, -c, 0, b],
    ])
    if np.max(np.abs(state.V - ref)) > tol * max(1.0, abs(a), abs(b)):
        return None
    return float(a), float(b), float(c)


def _complex_field(value):
    if value is None:
        return 0j
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError("complex values are written as [re, im]")
        return complex(float(value[0]), float(value[1]))
    return complex(float(value))


def state_from_dict(doc):
    """Build a resource from ``{family, r_dB, z1?, z2?, nbar?, loss?}``.

    Returns the Gaussian state before loss and the ``ChannelParams`` (or None).
    """
    family = doc.get("family", "tmsv")
    r = SqueezingParam.from_db(doc["r_dB"])
    if family == "tmsv":
        state = tmsv(r)
    elif family == "tmsc":
        state = tmsc(r, _complex_field(doc.get("z1")), _complex_field(doc.get("z2")))
    elif family == "tmst":
        state = tmst(r, float(doc.get("nbar", 0.0)))
    else:
        raise ValueError(f"unknown resource family {family!r}")
    loss = doc.get("loss")
    ch = ChannelParams(float(loss["T1"]), float(loss["T2"])) if loss else None
    return state, ch


def state_to_dict(family, r, z1=0j, z2=0j, nbar=0.0, ch=None):
    doc = {"family": family, "r_dB": as_squeezing(r).r_db}
    if family == "tmsc":
        doc["z1"] = [complex(z1).real, complex(z1).imag]
        doc["z2"] = [complex(z2).real, complex(z2).imag]
    if family == "tmst":
        doc["nbar"] = float(nbar)
    if ch is not None:
        doc["loss"] = {"T1": ch.T1, "T2": ch.T2}
    return doc
