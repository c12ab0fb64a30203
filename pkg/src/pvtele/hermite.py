"""Multi-index, multi-variable Hermite functions.

``H_n(x; M)`` is defined through the generating function

    sum_n prod_i (u_i**n_i / n_i!) H_n(x; M) = exp(u^T M u + x^T u)

and evaluated as an explicit finite sum over pair counts: ``k_ii`` copies of
``M_ii u_i**2`` and ``k_ij`` copies of ``2 M_ij u_i u_j`` (i < j), leaving the
power ``q_i = n_i - 2 k_ii - sum_{j != i} k_ij`` for ``x_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from . import _kernels

DEFAULT_MAX_DEGREE = 40
MACHINE_DEGREE_LIMIT = 24

_FACT = np.array([float(math.factorial(k)) for k in range(171)])


class DegreeLimitError(ValueError):
    """Total degree of a multi-index exceeds the configured cap."""


class HermitePrecisionError(ArithmeticError):
    """A machine-precision evaluation produced a non-finite value."""

    def __init__(self, what):
        super().__init__(
            f"non-finite intermediate while evaluating {what} in machine precision; "
            "retry with PrecisionPolicy('extended')"
        )


@dataclass(frozen=True)
class PrecisionPolicy:
    """Arithmetic used for Hermite sums.

    ``machine`` runs the compiled kernels in float64 with sorted compensated
    summation, and hands over to ``extended`` (mpmath with ``mantissa_bits``)
    for total degrees above ``auto_extend_above``; set that to ``None`` to pin
    machine precision.
    """

    mode: str = "machine"
    mantissa_bits: int = 256
    auto_extend_above: int | None = MACHINE_DEGREE_LIMIT

    def __post_init__(self):
        if self.mode not in ("machine", "extended"):
            raise ValueError(f"unknown precision mode {self.mode!r}")
        if self.mantissa_bits < 53:
            raise ValueError("mantissa_bits must be at least 53")

    def uses_extended(self, degree):
        if self.mode == "extended":
            return True
        return self.auto_extend_above is not None and degree > self.auto_extend_above

    @classmethod
    def parse(cls, text):
        """Parse ``machine`` or ``extended[:bits]``."""
        text = text.strip().lower()
        if text == "machine":
            return cls()
        if text.startswith("extended"):
            _, _, bits = text.partition(":")
            return cls("extended", int(bits) if bits else 256)
        raise ValueError(f"cannot parse precision {text!r}")

    def describe(self):
        return "machine" if self.mode == "machine" else f"extended:{self.mantissa_bits}"


DEFAULT_POLICY = PrecisionPolicy()


@dataclass(frozen=True, eq=False)
class HermiteParams:
    """Symmetric matrix ``M`` and argument vector ``x``."""

    M: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        M = np.array(self.M, dtype=np.complex128)
        x = np.array(self.x, dtype=np.complex128).reshape(-1)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("M must be square")
        if not np.array_equal(M, M.T):
            raise ValueError("M must be symmetric")
        if x.shape[0] != M.shape[0]:
            raise ValueError("x length must match the dimension of M")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "x", x)

    @property
    def dim(self):
        return self.M.shape[0]


@dataclass(frozen=True)
class MultiIndex:
    indices: tuple
    max_degree: int = DEFAULT_MAX_DEGREE

    def __post_init__(self):
        idx = tuple(int(v) for v in self.indices)
        if any(v < 0 for v in idx):
            raise ValueError("multi-index entries must be non-negative")
        if sum(idx) > self.max_degree:
            raise DegreeLimitError(
                f"total degree {sum(idx)} exceeds the cap {self.max_degree}"
            )
        object.__setattr__(self, "indices", idx)

    @property
    def degree(self):
        return sum(self.indices)

    def __len__(self):
        return len(self.indices)


def _as_index(idx, max_degree=DEFAULT_MAX_DEGREE):
    if isinstance(idx, MultiIndex):
        if idx.degree > max_degree:
            raise DegreeLimitError(f"total degree {idx.degree} exceeds the cap {max_degree}")
        return idx
    return MultiIndex(tuple(idx), max_degree)


def _pairs(dim):
    pi, pj = np.triu_indices(dim)
    return pi.astype(np.int64), pj.astype(np.int64)


@lru_cache(maxsize=4096)
def _pair_table(dim, active, idx):
    # Pair counts K and leftover powers Q for every admissible term.
    pi, pj = _pairs(dim)
    act = np.array(active, dtype=np.bool_)
    n = np.array(idx, dtype=np.int64)
    empty_k = np.zeros((0, len(pi)), dtype=np.int64)
    empty_q = np.zeros((0, dim), dtype=np.int64)
    count = _kernels.enumerate_pair_counts(pi, pj, act, n, False, empty_k, empty_q)
    K = np.zeros((count, len(pi)), dtype=np.int64)
    Q = np.zeros((count, dim), dtype=np.int64)
    _kernels.enumerate_pair_counts(pi, pj, act, n, True, K, Q)
    K.setflags(write=False)
    Q.setflags(write=False)
    return K, Q


def _pair_weights(M):
    pi, pj = _pairs(M.shape[0])
    w = M[pi, pj].copy()
    w[pi != pj] *= 2.0
    return w


def hermite_terms(M, idx):
    """Return ``(coefs, Q)`` with ``H_idx(x; M) = sum_t coefs[t] * prod_i x_i**Q[t, i]``."""
    M = np.asarray(M, dtype=np.complex128)
    w = _pair_weights(M)
    active = tuple(bool(v != 0) for v in w)
    K, Q = _pair_table(M.shape[0], active, tuple(idx))
    n = np.array(idx, dtype=np.int64)
    coefs = _kernels.pair_coefficients(K, Q, n, w, _FACT)
    return coefs, Q


def _extended_general(M, X, idx, bits):
    w = _pair_weights(M)
    active = tuple(bool(v != 0) for v in w)
    K, Q = _pair_table(M.shape[0], active, tuple(idx))
    with mpmath.workprec(bits):
        wm = [mpmath.mpc(complex(v)) for v in w]
        fm = [mpmath.factorial(k) for k in range(max(idx, default=0) + 1)]
        base = mpmath.mpf(1)
        for v in idx:
            base *= fm[v]
        coefs = []
        for t in range(K.shape[0]):
            c = mpmath.mpc(base)
            for i in range(Q.shape[1]):
                c /= fm[Q[t, i]]
            for p in range(K.shape[1]):
                if K[t, p]:
                    c *= wm[p] ** int(K[t, p]) / fm[K[t, p]]
            coefs.append(c)
        out = np.empty(X.shape[0], dtype=np.complex128)
        for pt in range(X.shape[0]):
            xs = [mpmath.mpc(complex(v)) for v in X[pt]]
            terms = []
            for t, c in enumerate(coefs):
                for i in range(Q.shape[1]):
                    if Q[t, i]:
                        c = c * xs[i] ** int(Q[t, i])
                terms.append(c)
            out[pt] = complex(mpmath.fsum(terms))
    return out


def hermite_general_batch(M, X, idx, policy=None, max_degree=DEFAULT_MAX_DEGREE):
    """Evaluate ``H_idx(x; M)`` for every row ``x`` of ``X`` (shape ``(npts, dim)``)."""
    policy = policy or DEFAULT_POLICY
    M = np.asarray(M, dtype=np.complex128)
    X = np.atleast_2d(np.asarray(X, dtype=np.complex128))
    mi = _as_index(idx, max_degree)
    if len(mi) != M.shape[0] or X.shape[1] != M.shape[0]:
        raise ValueError("multi-index, matrix and argument dimensions disagree")
    if mi.degree == 0:
        return np.ones(X.shape[0], dtype=np.complex128)
    if policy.uses_extended(mi.degree):
        return _extended_general(M, X, mi.indices, policy.mantissa_bits)
    coefs, Q = hermite_terms(M, mi.indices)
    out = _kernels.eval_monomials(coefs, Q, X)
    if not (np.all(np.isfinite(coefs)) and np.all(np.isfinite(out))):
        raise HermitePrecisionError(f"H_{mi.indices}")
    return out


def hermite_general(params, idx, policy=None, max_degree=DEFAULT_MAX_DEGREE):
    """Evaluate ``H_idx(params.x; params.M)``.

    Parameters
    ----------
    params : HermiteParams
    idx : MultiIndex or sequence of int
        One non-negative entry per dimension.
    policy : PrecisionPolicy, optional

    Returns
    -------
    complex
        Exactly ``1`` for the all-zero index.
    """
    mi = _as_index(idx, max_degree)
    if len(mi) != params.dim:
        raise ValueError("multi-index length must equal params.dim")
    return complex(hermite_general_batch(params.M, params.x[None, :], mi, policy, max_degree)[0])


# ---------------------------------------------------------------------------
# two-mode four-index specialisation


@lru_cache(maxsize=16384)
def _four_index_coefficients(A, B, C, idx4, extended_bits):
    n1, n2, n3, n4 = idx4
    empty = np.zeros((0, 4), dtype=np.int64)
    count = _kernels.four_index_terms(n1, n2, n3, n4, False, empty)
    terms = np.zeros((count, 4), dtype=np.int64)
    _kernels.four_index_terms(n1, n2, n3, n4, True, terms)
    if not extended_bits:
        coef = _kernels.four_index_coefficients(terms, n1, n2, n3, n4, A, B, C, _FACT)
        if not np.all(np.isfinite(coef)):
            raise HermitePrecisionError(f"H_{idx4}")
        coef.setflags(write=False)
        return coef
    smax = sum(idx4) // 2
    with mpmath.workprec(extended_bits):
        f = [mpmath.factorial(k) for k in range(max(idx4) + 1)]
        Am, Bm, Cm = mpmath.mpf(A), mpmath.mpf(B), mpmath.mpf(C)
        AC, BC = Am + Cm, Bm + Cm
        top = f[n1] * f[n2] * f[n3] * f[n4]
        groups = [[] for _ in range(smax + 1)]
        for n5, n6, n7, n8 in terms.tolist():
            e1 = n1 + n2 - 2 * n5 - n7 - n8
            e2 = n3 + n4 - 2 * n6 - n7 - n8
            den = (f[n5] * f[n1 - n5 - n7] * f[n2 - n5 - n8] * f[n6]
                   * f[n3 - n6 - n7] * f[n4 - n6 - n8] * f[n7] * f[n8])
            groups[n5 + n6 + n7 + n8].append(
                top / den * AC**e1 * Am**n5 * BC**e2 * Bm**n6 * Cm ** (n7 + n8)
            )
        return tuple(mpmath.fsum(g) for g in groups)


def _check_abc(A, B, C):
    for name, v in (("A", A), ("B", B), ("C", C)):
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite")


def four_index_coefficients(A, B, C, idx4, policy=None):
    """Polynomial coefficients ``c[S]`` with ``H = sum_S c[S] xi**(a-S) zeta**(b-S)``.

    ``a = n2 + n3`` and ``b = n1 + n4``.  Extended-precision coefficients come
    back as a tuple of mpmath numbers.
    """
    policy = policy or DEFAULT_POLICY
    A, B, C = float(A), float(B), float(C)
    _check_abc(A, B, C)
    mi = _as_index(idx4)
    if len(mi) != 4:
        raise ValueError("idx4 must have four entries")
    bits = policy.mantissa_bits if policy.uses_extended(mi.degree) else 0
    return _four_index_coefficients(A, B, C, mi.indices, bits)


def hermite_two_mode_four_index(A, B, C, idx4, xi, conj_point=None, policy=None):
    """``H_{n1,n2,n3,n4}(xi, conj_point)`` for two-mode states of the squeezed-vacuum family.

    ``conj_point`` defaults to ``conj(xi)``; passing another value treats the
    second argument as an independent variable.  Accepts scalars or arrays.
    The origin is handled as the analytic limit: only the constant term survives.
    """
    policy = policy or DEFAULT_POLICY
    xi_arr = np.asarray(xi, dtype=np.complex128)
    scalar = xi_arr.ndim == 0
    xi_flat = np.atleast_1d(xi_arr).ravel()
    if conj_point is None:
        zeta_flat = np.conj(xi_flat)
    else:
        zeta_flat = np.broadcast_to(
            np.asarray(conj_point, dtype=np.complex128), xi_arr.shape
        ).ravel()
    n1, n2, n3, n4 = _as_index(idx4).indices
    coef = four_index_coefficients(A, B, C, (n1, n2, n3, n4), policy)
    a, b = n2 + n3, n1 + n4
    if isinstance(coef, tuple):
        out = np.empty(xi_flat.shape[0], dtype=np.complex128)
        with mpmath.workprec(policy.mantissa_bits):
            for pt in range(xi_flat.shape[0]):
                z1 = mpmath.mpc(complex(xi_flat[pt]))
                z2 = mpmath.mpc(complex(zeta_flat[pt]))
                terms = [c * z1 ** (a - s) * z2 ** (b - s) for s, c in enumerate(coef) if s <= min(a, b)]
                out[pt] = complex(mpmath.fsum(terms))
    else:
        out = _kernels.eval_four_index(coef, a, b, xi_flat, zeta_flat)
        if not np.all(np.isfinite(out)):
            raise HermitePrecisionError(f"H_{(n1, n2, n3, n4)}")
    return complex(out[0]) if scalar else out.reshape(xi_arr.shape)


def four_index_params(A, B, C, xi, conj_point=None):
    """The general ``dim=4`` problem whose value equals the four-index form."""
    zeta = np.conj(xi) if conj_point is None else conj_point
    M = np.zeros((4, 4), dtype=np.complex128)
    M[0, 1] = M[1, 0] = A / 2
    M[2, 3] = M[3, 2] = B / 2
    M[0, 2] = M[2, 0] = C / 2
    M[1, 3] = M[3, 1] = C / 2
    x = np.array([(A + C) * zeta, (A + C) * xi, (B + C) * xi, (B + C) * zeta])
    return HermiteParams(M, x)


def stirling2(n, m):
    """Stirling number of the second kind ``S(n, m)`` (exact integer, ``0 <= m <= n <= 64``)."""
    n, m = int(n), int(m)
    if not (0 <= m <= n <= 64):
        raise ValueError(f"stirling2 needs 0 <= m <= n <= 64, got n={n}, m={m}")
    total = sum((-1) ** (m - j) * math.comb(m, j) * j**n for j in range(m + 1))
    return total // math.factorial(m)
