"""Photon-varied resource states and their response ratios.

A per-mode photon-varying (PV) operation applies ``a**n`` (subtraction,
``t = -1``) or ``a^dag**n`` (addition, ``t = +1``).  On a Gaussian state the
result has characteristic function

    chi_PV(xi) = (-1)**sum(n) / N * H_{n1,n1,...,nK,nK}(X(V~' xi~ + mu~); -X V~'/2) * chi(xi)

with ``V~' = V~ + diag(t1, t1, ..., tK, tK) / 2``.  The generalized operation
``A_N^dag = sum_n e_n (a1^dag a2^dag)**n`` (or its adjoint ``A_N``) expands the
same way into a Gram matrix of cross terms ``a^dag**j rho a**k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .gaussian_states import (
    GaussianState,
    as_squeezing,
    augmented_vector,
    squeezed_pattern,
    tmsv,
    x_matrix,
)
from .hermite import (
    DEFAULT_MAX_DEGREE,
    DEFAULT_POLICY,
    hermite_general_batch,
    hermite_two_mode_four_index,
    stirling2,
)

IMAG_TOL = 1e-10


class ConsistencyError(ArithmeticError):
    """An analytically real quantity came out with a significant imaginary part."""


class InvalidOperationError(ValueError):
    """The operation annihilates the state (non-positive normalization)."""


@dataclass(frozen=True)
class PVSpec:
    """Per-mode ``(t, n)`` pairs; ``t = -1`` subtracts ``n`` photons, ``t = +1`` adds them."""

    modes: tuple

    def __post_init__(self):
        modes = tuple((int(t), int(n)) for t, n in self.modes)
        for t, n in modes:
            if t not in (-1, 1):
                raise ValueError(f"t must be -1 or +1, got {t}")
            if not 0 <= n <= DEFAULT_MAX_DEGREE:
                raise ValueError(f"photon number {n} outside [0, {DEFAULT_MAX_DEGREE}]")
        object.__setattr__(self, "modes", modes)

    @classmethod
    def symmetric(cls, t, n, K=2):
        return cls(((t, n),) * K)

    @property
    def ts(self):
        return tuple(t for t, _ in self.modes)

    @property
    def ns(self):
        return tuple(n for _, n in self.modes)

    @property
    def total(self):
        return sum(self.ns)

    def to_dict(self):
        return {"pv": [{"t": t, "n": n} for t, n in self.modes]}

    @classmethod
    def from_dict(cls, doc):
        return cls(tuple((d["t"], d["n"]) for d in doc["pv"]))


@dataclass(frozen=True)
class GeneralizedPVSpec:
    """``sum_{n<=N} e_n (a1^dag a2^dag)**n`` (``dagger=True``) or its adjoint.

    ``e`` is stored with unit Euclidean norm; the response ratio does not
    depend on its scale.  Omitting ``e`` gives the identity ``(1, 0, ..., 0)``.
    """

    N: int
    e: tuple = None
    dagger: bool = True

    def __post_init__(self):
        N = int(self.N)
        if N < 0:
            raise ValueError("N must be non-negative")
        e = np.eye(N + 1)[0] if self.e is None else np.asarray(self.e, dtype=np.float64).reshape(-1)
        if e.shape[0] != N + 1:
            raise ValueError(f"e must have N + 1 = {N + 1} entries, got {e.shape[0]}")
        norm = np.linalg.norm(e)
        if not (norm > 0 and np.all(np.isfinite(e))):
            raise ValueError("e must be finite and non-zero")
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "e", tuple(float(v) for v in e / norm))
        object.__setattr__(self, "dagger", bool(self.dagger))

    @property
    def vector(self):
        return np.array(self.e)

    def to_dict(self):
        return {"generalized": {"N": self.N, "e": list(self.e), "dagger": self.dagger}}

    @classmethod
    def from_dict(cls, doc):
        g = doc["generalized"]
        return cls(g["N"], g.get("e"), g.get("dagger", True))


def operation_from_dict(doc):
    if "pv" in doc:
        return PVSpec.from_dict(doc)
    if "generalized" in doc:
        return GeneralizedPVSpec.from_dict(doc)
    raise ValueError("operation needs either a 'pv' or a 'generalized' entry")


def _shifted(state, ts):
    Vt, mut = state.augment()
    Vp = Vt + np.diag(np.repeat(np.asarray(ts, dtype=np.float64), 2)) / 2
    X = x_matrix(state.K)
    M = -0.5 * (X @ Vp)
    # X V~' is symmetric analytically; drop rounding asymmetry.
    M = (M + M.T) / 2
    return Vp, mut, X, M


def _points(xi, K):
    xi = np.asarray(xi, dtype=np.complex128)
    if xi.shape[-1] != K:
        raise ValueError(f"expected {K} phase-space arguments, got {xi.shape[-1]}")
    return xi


def _diag_points(xi):
    """``(xi, xi^*)`` pairs for the teleportation diagonal."""
    xi = np.asarray(xi, dtype=np.complex128)
    return np.stack([xi, np.conj(xi)], axis=-1)


def _real(values, what):
    values = np.asarray(values)
    scale = np.maximum(1.0, np.abs(values.real))
    if np.any(np.abs(values.imag) > IMAG_TOL * scale):
        worst = float(np.max(np.abs(values.imag) / scale))
        raise ConsistencyError(f"{what} has relative imaginary part {worst:.3g}")
    return values.real


def _pattern_abc(pattern, ts):
    a, b, c = pattern
    return -(a + ts[0]) / 2, -(b + ts[1]) / 2, c / 2


@dataclass(frozen=True, eq=False)
class PhotonVariedState:
    """Gaussian ``base`` after the per-mode operations in ``spec``."""

    base: GaussianState
    spec: PVSpec
    policy: object = field(default=DEFAULT_POLICY)

    def __post_init__(self):
        if len(self.spec.modes) != self.base.K:
            raise ValueError("PVSpec must list one operation per mode")
        if self.norm <= 0:
            raise InvalidOperationError(
                f"normalization {self.norm:.3g} is not positive; the operation annihilates the state"
            )

    @cached_property
    def _setup(self):
        return _shifted(self.base, self.spec.ts)

    @cached_property
    def index(self):
        return tuple(n for n in self.spec.ns for _ in range(2))

    @cached_property
    def _pattern(self):
        return squeezed_pattern(self.base)

    def _numerator(self, xi):
        # (-1)**sum(n) H(X(V~' xi~ + mu~); M) for rows of xi (shape (npts, K)).
        Vp, mut, X, M = self._setup
        args = (augmented_vector(xi) @ Vp.T + mut) @ X.T
        sign = -1.0 if self.spec.total % 2 else 1.0
        return sign * hermite_general_batch(M, args, self.index, self.policy)

    @cached_property
    def norm(self):
        val = self._numerator(np.zeros((1, self.base.K)))[0]
        return float(_real(val, "normalization"))

    def factor(self, xi):
        """``chi_PV / chi`` at the points ``xi`` (shape ``(..., K)``)."""
        xi = _points(xi, self.base.K)
        flat = xi.reshape(-1, self.base.K)
        out = self._numerator(flat) / self.norm
        return out.reshape(xi.shape[:-1])

    def cf(self, xi):
        xi = _points(xi, self.base.K)
        return self.factor(xi) * self.base.cf(xi)

    def diagonal_factor(self, xi):
        """``chi_PV(xi, xi^*) / chi(xi, xi^*)`` for two-mode states."""
        if self.base.K != 2:
            raise ValueError("the teleportation diagonal needs a two-mode resource")
        if self._pattern is not None:
            A, B, C = _pattern_abc(self._pattern, self.spec.ts)
            n1, n2 = self.spec.ns
            idx = (n1, n1, n2, n2)
            num = hermite_two_mode_four_index(A, B, C, idx, xi, policy=self.policy)
            den = hermite_two_mode_four_index(A, B, C, idx, 0.0, policy=self.policy)
            return np.asarray(num) / den
        return self.factor(_diag_points(xi))

    def response(self, xi):
        return self.diagonal_factor(xi) * self.base.cf(_diag_points(xi))


def _gram_indices(N, dagger):
    # cross term a^dag**j rho a**k (dagger) or a**j rho a^dag**k on each mode
    idx = {}
    for j in range(N + 1):
        for k in range(N + 1):
            idx[j, k] = (j, k, j, k) if dagger else (k, j, k, j)
    return idx


@dataclass(frozen=True, eq=False)
class GeneralizedPVState:
    """Two-mode Gaussian ``base`` after ``A_N^dag`` (or ``A_N``)."""

    base: GaussianState
    spec: GeneralizedPVSpec
    policy: object = field(default=DEFAULT_POLICY)

    def __post_init__(self):
        if self.base.K != 2:
            raise ValueError("generalized PV operations act on two-mode states")
        if self.norm <= 0:
            raise InvalidOperationError("the generalized operation annihilates the state")

    @property
    def t(self):
        return 1 if self.spec.dagger else -1

    @cached_property
    def _setup(self):
        return _shifted(self.base, (self.t, self.t))

    @cached_property
    def _pattern(self):
        return squeezed_pattern(self.base)

    def gram(self, xi):
        """Cross-term matrices ``G[..., j, k]`` at two-mode points ``xi`` (shape ``(..., 2)``)."""
        xi = _points(xi, 2)
        flat = xi.reshape(-1, 2)
        Vp, mut, X, M = self._setup
        args = (augmented_vector(flat) @ Vp.T + mut) @ X.T
        N = self.spec.N
        G = np.empty((flat.shape[0], N + 1, N + 1), dtype=np.complex128)
        for (j, k), idx in _gram_indices(N, self.spec.dagger).items():
            G[:, j, k] = hermite_general_batch(M, args, idx, self.policy)
        return G.reshape(xi.shape[:-1] + (N + 1, N + 1))

    def diagonal_gram(self, xi):
        xi = np.asarray(xi, dtype=np.complex128)
        if self._pattern is None:
            return self.gram(_diag_points(xi))
        A, B, C = _pattern_abc(self._pattern, (self.t, self.t))
        return gram_four_index(A, B, C, self.spec.N, self.spec.dagger, xi, self.policy)

    @cached_property
    def gram_origin(self):
        # Hermitian (overlaps <v_k|v_j>); real e only sees the real symmetric part
        G = self.diagonal_gram(np.zeros(1))[0]
        _real(G - G.conj().T, "anti-Hermitian part of the Gram matrix")
        return (G.real + G.real.T) / 2

    @cached_property
    def norm(self):
        e = self.spec.vector
        return float(e @ self.gram_origin @ e)

    def factor(self, xi):
        e = self.spec.vector
        G = self.gram(xi)
        return np.einsum("j,...jk,k->...", e, G, e) / self.norm

    def cf(self, xi):
        xi = _points(xi, 2)
        return self.factor(xi) * self.base.cf(xi)

    def diagonal_factor(self, xi):
        e = self.spec.vector
        G = self.diagonal_gram(xi)
        return np.einsum("j,...jk,k->...", e, G, e) / self.norm

    def response(self, xi):
        return self.diagonal_factor(xi) * self.base.cf(_diag_points(xi))


def gram_four_index(A, B, C, N, dagger, xi, policy=None):
    """Gram matrices on the diagonal via the four-index closed form."""
    xi = np.asarray(xi, dtype=np.complex128)
    G = np.empty(xi.shape + (N + 1, N + 1), dtype=np.complex128)
    for (j, k), idx in _gram_indices(N, dagger).items():
        G[..., j, k] = hermite_two_mode_four_index(A, B, C, idx, xi, policy=policy)
    return G


def photon_varied(base, spec, policy=None):
    policy = policy or DEFAULT_POLICY
    if isinstance(spec, GeneralizedPVSpec):
        return GeneralizedPVState(base, spec, policy)
    return PhotonVariedState(base, spec, policy)


def pv_cf(state, xi):
    """Characteristic function of a photon-varied state."""
    return state.cf(xi)


def quadratic_ratio(e, G, G0):
    """``e^T G e / e^T G0 e`` for real ``e``; broadcast over leading axes of ``G``."""
    e = np.asarray(e, dtype=np.float64)
    return np.einsum("j,...jk,k->...", e, G, e) / (e @ G0 @ e)


def response_ratio(state, xi):
    """Response ratio ``chi_PV(xi, xi^*) / chi(xi, xi^*)`` (real), vectorized over ``xi``."""
    xi_arr = np.asarray(xi, dtype=np.complex128)
    vals = np.atleast_1d(state.diagonal_factor(np.atleast_1d(xi_arr)))
    vals = np.where(np.atleast_1d(xi_arr) == 0, 1.0, vals)
    out = _real(vals, "response ratio")
    return float(out[0]) if xi_arr.ndim == 0 else out.reshape(xi_arr.shape)


def h_matrix(r, N, xi, policy=None):
    """Entry ``(j, k)`` is ``H_{k,j,k,j}(xi, xi^*)`` with the addition-branch constants."""
    r = as_squeezing(r)
    A = -(r.V + 1) / 2
    C = r.cross / 2
    G = gram_four_index(A, A, C, N, True, np.asarray(xi, dtype=np.complex128), policy)
    return np.swapaxes(G, -1, -2)


def nla_matrix(N, r):
    """``C`` with ``e(g) = C @ [ln(g)**n for n in 0..N]`` (unnormalized NLA coefficients).

    ``C[m, n] = lambda**m * S(n, m) / n!``; ``S(0, 0) = 1`` gives ``e_0 = 1``.
    """
    lam = as_squeezing(r).lam
    C = np.zeros((N + 1, N + 1))
    for m in range(N + 1):
        for n in range(m, N + 1):
            C[m, n] = lam**m * stirling2(n, m) / math.factorial(n)
    return C


def nla_coefficients(g, N, r, normalize=True):
    """Coefficients making ``A_N^dag`` act on the TMSV like ``g**(a1^dag a1)`` truncated at order N.

    ``e_m = lambda**m * sum_{n=m}^{N} ln(g)**n / n! * S(n, m)`` for ``m >= 1`` and ``e_0 = 1``.
    Accepts an array of gains, returning one row per gain.
    """
    g_arr = np.asarray(g, dtype=np.float64)
    if not np.all(g_arr > 0):
        raise ValueError("gain must be positive")
    powers = np.log(g_arr)[..., None] ** np.arange(N + 1)
    e = powers @ nla_matrix(N, r).T
    if normalize:
        e = e / np.linalg.norm(e, axis=-1, keepdims=True)
    return e


def tmsv_pv(r, spec, policy=None):
    """Convenience: photon-varied TMSV."""
    return photon_varied(tmsv(r), spec, policy)
