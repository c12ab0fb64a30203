"""Brute-force truncated Fock-space counterpart of the analytic engine.

States are stored as ensembles of unnormalized kets, ``rho = sum_r |psi_r><psi_r|``
(a single ket for pure states).  Nothing here calls the Hermite machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import expm

from . import _kernels
from .gaussian_states import as_squeezing
from .pv_ops import GeneralizedPVSpec, InvalidOperationError, PVSpec

DEFAULT_DIM = 60
TAIL_MARGIN = 5
TAIL_TOL = 1e-10


class TruncationError(ValueError):
    """The truncated basis holds too much weight near its edge."""


@dataclass(frozen=True)
class FockOperatorSet:
    dim: int = DEFAULT_DIM

    @cached_property
    def a(self):
        return np.diag(np.sqrt(np.arange(1, self.dim, dtype=np.float64)), k=1)

    @cached_property
    def adag(self):
        return self.a.conj().T

    @cached_property
    def number(self):
        return np.diag(np.arange(self.dim, dtype=np.float64))

    def displacement(self, xi):
        return _kernels.displacement_matrix(complex(xi), self.dim)


@dataclass(frozen=True, eq=False)
class FockState:
    """``kets`` has shape ``(R,) + (dim,) * modes``; ``weight`` is the pre-normalization trace."""

    modes: int
    dim: int
    kets: np.ndarray
    weight: float = 1.0

    @property
    def is_pure(self):
        return self.kets.shape[0] == 1

    @property
    def ket(self):
        if not self.is_pure:
            raise ValueError("mixed state has no single ket")
        return self.kets[0]

    def trace(self):
        return float(np.sum(np.abs(self.kets) ** 2))

    def populations(self):
        return np.sum(np.abs(self.kets) ** 2, axis=0)

    def density(self):
        flat = self.kets.reshape(self.kets.shape[0], -1)
        rho = flat.T @ flat.conj()
        return rho.reshape((self.dim,) * (2 * self.modes))

    def tail_mass(self, margin=TAIL_MARGIN):
        pops = self.populations()
        edge = np.zeros(pops.shape, dtype=bool)
        cut = self.dim - margin
        for ax in range(self.modes):
            sl = [slice(None)] * self.modes
            sl[ax] = slice(cut, None)
            edge[tuple(sl)] = True
        return float(pops[edge].sum() / pops.sum())

    def check_tail(self, tol=TAIL_TOL):
        tail = self.tail_mass()
        if tail > tol:
            raise TruncationError(
                f"weight {tail:.2e} in the top {TAIL_MARGIN} levels exceeds {tol:.0e}; increase dim"
            )
        return self

    def mean_photon(self, mode=0):
        pops = self.populations()
        axes = tuple(ax for ax in range(self.modes) if ax != mode)
        marginal = pops.sum(axis=axes) if axes else pops
        return float(np.arange(self.dim) @ marginal / marginal.sum())

    def normalized(self, weight=None):
        tr = self.trace()
        return FockState(self.modes, self.dim, self.kets / math.sqrt(tr),
                         tr if weight is None else weight)

    def compressed(self, cutoff=1e-15):
        """Re-express a large ensemble through the eigenvectors of its density matrix."""
        size = self.dim**self.modes
        if self.kets.shape[0] <= size:
            return self
        rho = self.density().reshape(size, size)
        w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
        keep = w > cutoff * w.max()
        kets = (v[:, keep] * np.sqrt(w[keep])).T
        return FockState(self.modes, self.dim, kets.reshape((-1,) + (self.dim,) * self.modes), self.weight)


def required_dim(r=0.0, extra=0, nbar=0.0, tol=1e-14, minimum=DEFAULT_DIM):
    """Smallest truncation keeping the TMS(V/T) tail below ``tol`` with ``extra`` photons added."""
    lam2 = math.tanh(as_squeezing(r).r) ** 2
    occ = max(lam2 / (1 - lam2), nbar * (1 + 2 * lam2 / (1 - lam2)) + lam2 / (1 - lam2))
    ratio = occ / (occ + 1) if occ > 0 else 0.0
    if ratio == 0.0:
        return max(minimum, extra + 2 * TAIL_MARGIN)
    # geometric tail weighted by n**(2 extra) from photon addition
    n = 1
    while True:
        if (2 * extra) * math.log(n + extra + 1) + n * math.log(ratio) < math.log(tol):
            break
        n += 1
    return max(minimum, n + extra + 2 * TAIL_MARGIN)


def _squeezed_kets(r, dim, levels, pad=20):
    """``S(r)|m, l>`` for ``m, l < levels`` as ``(dim, dim)`` kets.

    ``S(r) = exp(r(a1^dag a2^dag - a1 a2))`` conserves ``n1 - n2``, so each
    sector is exponentiated on its own at truncation ``dim + pad``.
    """
    big = dim + pad
    out = np.zeros((levels, levels, dim, dim))
    for d in range(-(levels - 1), levels):
        ks = [k for k in range(big) if 0 <= k + d < big]
        G = np.zeros((len(ks), len(ks)))
        for i in range(len(ks) - 1):
            amp = math.sqrt((ks[i] + d + 1) * (ks[i] + 1))
            G[i + 1, i] = amp
            G[i, i + 1] = -amp
        U = expm(r * G)
        rows = [(i, ks[i] + d, ks[i]) for i in range(len(ks)) if max(ks[i] + d, ks[i]) < dim]
        ii = np.array([i for i, _, _ in rows])
        a1 = np.array([a for _, a, _ in rows])
        a2 = np.array([b for _, _, b in rows])
        for j, l in enumerate(ks):
            m = l + d
            if m < levels and l < levels:
                out[m, l, a1, a2] = U[ii, j]
    return out


def oracle_state(family, r=0.0, dim=DEFAULT_DIM, z1=0.0, z2=0.0, nbar=0.0, check=True):
    """Truncated TMSV / TMSC / TMST state."""
    r = as_squeezing(r)
    lam = r.lam
    if family in ("tmsv", "tmsc"):
        psi = np.zeros((dim, dim), dtype=np.complex128)
        n = np.arange(dim)
        psi[n, n] = math.sqrt(1 - lam**2) * lam**n
        if family == "tmsc":
            D1 = _kernels.displacement_matrix(complex(z1), dim)
            D2 = _kernels.displacement_matrix(complex(z2), dim)
            psi = D1 @ psi @ D2.T
        state = FockState(2, dim, psi[None])
    elif family == "tmst":
        if nbar == 0:
            return oracle_state("tmsv", r, dim, check=check)
        # thermal populations nbar**n / (nbar + 1)**(n + 1)
        ratio = nbar / (nbar + 1)
        levels = min(dim, int(math.ceil(math.log(1e-17) / math.log(ratio))) + 1)
        n = np.arange(levels)
        p = ratio**n / (nbar + 1)
        w = np.sqrt(np.outer(p, p))
        kets = _squeezed_kets(r.r, dim, levels) * w[:, :, None, None]
        state = FockState(2, dim, kets.reshape(-1, dim, dim).astype(np.complex128))
    else:
        raise ValueError(f"unknown family {family!r}")
    if check:
        state.check_tail()
    return state


def _apply_mode(kets, op, mode):
    # op acts on axis ``mode + 1`` of every ket
    return np.moveaxis(np.tensordot(op, kets, axes=([1], [mode + 1])), 0, mode + 1)


def _power(mat, n):
    return np.linalg.matrix_power(mat, n)


def oracle_apply(state, op, check=True):
    """Apply a PV or generalized PV operation and renormalize.

    The returned state's ``weight`` is the trace before renormalization.
    """
    ops = FockOperatorSet(state.dim)
    kets = state.kets
    if isinstance(op, PVSpec):
        if len(op.modes) != state.modes:
            raise ValueError("PVSpec must list one operation per mode")
        for mode, (t, n) in enumerate(op.modes):
            base = ops.adag if t == 1 else ops.a
            kets = _apply_mode(kets, _power(base, n), mode)
    elif isinstance(op, GeneralizedPVSpec):
        if state.modes != 2:
            raise ValueError("generalized operations act on two modes")
        base = ops.adag if op.dagger else ops.a
        out = np.zeros_like(kets)
        term = kets
        for n, e_n in enumerate(op.e):
            if n:
                term = _apply_mode(_apply_mode(term, base, 0), base, 1)
            out = out + e_n * term
        kets = out
    else:
        raise TypeError(f"unsupported operation {op!r}")
    weight = float(np.sum(np.abs(kets) ** 2)) / state.trace()
    if weight <= 1e-12:
        raise InvalidOperationError("operation annihilates the state")
    result = FockState(state.modes, state.dim, kets).normalized(weight)
    if check:
        result.check_tail()
    return result


def oracle_cf(state, xi):
    """``tr(rho D(xi_1) x ... )`` for one point (length ``modes``) or rows of points."""
    pts = np.atleast_2d(np.asarray(xi, dtype=np.complex128))
    if pts.shape[-1] != state.modes:
        raise ValueError(f"expected {state.modes} arguments per point")
    kets = state.kets
    norm = state.trace()
    out = np.empty(pts.shape[0], dtype=np.complex128)
    for i, p in enumerate(pts):
        moved = kets
        for mode in range(state.modes):
            moved = _apply_mode(moved, _kernels.displacement_matrix(p[mode], state.dim), mode)
        out[i] = np.vdot(kets, moved) / norm
    return complex(out[0]) if np.ndim(xi) == 1 else out


def _loss_kraus(T, dim, k):
    # <n-k| E_k |n> = sqrt(C(n, k)) (1-T)**(k/2) T**((n-k)/2)
    E = np.zeros((dim, dim))
    for n in range(k, dim):
        E[n - k, n] = math.sqrt(math.comb(n, k) * (1 - T) ** k * T ** (n - k))
    return E


def oracle_loss(state, ch):
    """Pure-loss channels on both modes via their Kraus decomposition."""
    if state.modes != 2:
        raise ValueError("oracle_loss expects a two-mode state")
    kets = state.kets
    for mode, T in enumerate((ch.T1, ch.T2)):
        if T == 1:
            continue
        kmax = state.dim
        parts = [_apply_mode(kets, _loss_kraus(T, state.dim, k), mode) for k in range(kmax)]
        kets = np.concatenate(parts, axis=0)
        kets = FockState(2, state.dim, kets).compressed().kets
    return FockState(2, state.dim, kets, state.weight)


def oracle_fidelity(input_ket, noise, radial_nodes=120, angular_nodes=32):
    """Average fidelity of a pure single-mode input through additive Gaussian noise.

    ``noise`` is ``sigma`` in the response function ``exp(-sigma |xi|^2)``
    (``exp(-2r)`` for a bare TMSV).  The output is
    ``int P(beta) D(beta) rho D(beta)^dag`` with
    ``P(beta) = exp(-|beta|^2 / sigma) / (pi sigma)``, so the fidelity is
    ``int P(beta) |<psi|D(beta)|psi>|^2 d^2 beta``.
    """
    psi = np.asarray(input_ket, dtype=np.complex128)
    psi = psi / np.linalg.norm(psi)
    dim = psi.shape[0]
    u, wu = np.polynomial.laguerre.laggauss(radial_nodes)
    th = 2 * np.pi * np.arange(angular_nodes) / angular_nodes
    total = 0.0
    for ui, wi in zip(u, wu):
        rho = math.sqrt(noise * ui)
        acc = 0.0
        for t in th:
            D = _kernels.displacement_matrix(rho * np.exp(1j * t), dim)
            acc += abs(np.vdot(psi, D @ psi)) ** 2
        total += wi * acc / angular_nodes
    return float(total)


def fock_ket(n, dim=DEFAULT_DIM):
    psi = np.zeros(dim, dtype=np.complex128)
    psi[n] = 1.0
    return psi


def coherent_ket(alpha, dim=DEFAULT_DIM):
    return _kernels.displacement_matrix(complex(alpha), dim)[:, 0].copy()


def squeezed_ket(s, dim=DEFAULT_DIM):
    """``exp(s (a^2 - a^dag 2) / 2)|0>`` for real ``s`` (q-quadrature variance ``exp(-2s)``)."""
    psi = np.zeros(dim, dtype=np.complex128)
    t = math.tanh(s)
    for m in range(0, dim, 2):
        k = m // 2
        psi[m] = (-t) ** k * math.sqrt(math.factorial(m)) / (2**k * math.factorial(k))
    return psi / math.sqrt(math.cosh(s))
