"""Inner loops shared by the Hermite evaluators and the Fock oracle.

Everything here stays inside the numba nopython subset; see ``_accel``.
Enumeration order is fixed (lexicographic) and every sum goes through
``sorted_sum`` so results do not depend on how callers batch the work.
"""

import math

import numpy as np

from ._accel import jit


@jit
def sorted_sum(vals):
    # Neumaier accumulation over values ordered by increasing magnitude.
    order = np.argsort(np.abs(vals), kind="mergesort")
    sr = 0.0
    cr = 0.0
    si = 0.0
    ci = 0.0
    for idx in order:
        v = vals[idx]
        x = v.real
        t = sr + x
        if abs(sr) >= abs(x):
            cr += (sr - t) + x
        else:
            cr += (x - t) + sr
        sr = t
        y = v.imag
        t = si + y
        if abs(si) >= abs(y):
            ci += (si - t) + y
        else:
            ci += (y - t) + si
        si = t
    return complex(sr + cr, si + ci)


@jit
def enumerate_pair_counts(pi, pj, active, n, fill, K, Q):
    """Walk every pair-count assignment compatible with the multi-index ``n``.

    Pair ``p`` couples indices ``pi[p] <= pj[p]``; a diagonal pair consumes two
    units of its index, an off-diagonal pair one unit of each.  Inactive pairs
    (zero matrix entry) are pinned to zero.  Returns the number of terms; when
    ``fill`` is true the counts go to ``K`` and the leftover powers to ``Q``.
    """
    P = pi.shape[0]
    rem = n.copy()
    if P == 0:
        if fill:
            Q[0, :] = rem
        return 1
    k = np.full(P, -1, dtype=np.int64)
    count = 0
    p = 0
    while p >= 0:
        if p == P:
            if fill:
                K[count, :] = k
                Q[count, :] = rem
            count += 1
            p -= 1
            continue
        i = pi[p]
        j = pj[p]
        kp = k[p]
        if kp > 0:
            if i == j:
                rem[i] += 2 * kp
            else:
                rem[i] += kp
                rem[j] += kp
        kp += 1
        if kp == 0:
            ok = True
        elif not active[p]:
            ok = False
        elif i == j:
            ok = 2 * kp <= rem[i]
        else:
            ok = kp <= rem[i] and kp <= rem[j]
        if ok:
            if i == j:
                rem[i] -= 2 * kp
            else:
                rem[i] -= kp
                rem[j] -= kp
            k[p] = kp
            p += 1
            if p < P:
                k[p] = -1
        else:
            k[p] = -1
            p -= 1
    return count


@jit
def pair_coefficients(K, Q, n, cpair, fact):
    T = K.shape[0]
    out = np.empty(T, dtype=np.complex128)
    base = 1.0
    for i in range(n.shape[0]):
        base *= fact[n[i]]
    for t in range(T):
        c = complex(base)
        for i in range(Q.shape[1]):
            c /= fact[Q[t, i]]
        for p in range(K.shape[1]):
            kp = K[t, p]
            for _ in range(kp):
                c *= cpair[p]
            c /= fact[kp]
        out[t] = c
    return out


@jit
def eval_monomials(coefs, Q, X):
    """Sum ``coefs[t] * prod_i X[pt, i] ** Q[t, i]`` for every row of ``X``."""
    npts = X.shape[0]
    d = X.shape[1]
    T = coefs.shape[0]
    out = np.empty(npts, dtype=np.complex128)
    maxq = 0
    for t in range(T):
        for i in range(d):
            if Q[t, i] > maxq:
                maxq = Q[t, i]
    powers = np.empty((d, maxq + 1), dtype=np.complex128)
    vals = np.empty(T, dtype=np.complex128)
    for pt in range(npts):
        for i in range(d):
            powers[i, 0] = 1.0
            for q in range(1, maxq + 1):
                powers[i, q] = powers[i, q - 1] * X[pt, i]
        for t in range(T):
            v = coefs[t]
            for i in range(d):
                v *= powers[i, Q[t, i]]
            vals[t] = v
        out[pt] = sorted_sum(vals)
    return out


@jit
def four_index_terms(n1, n2, n3, n4, fill, out):
    # (n5, n6, n7, n8) with every factorial argument non-negative.
    count = 0
    for n5 in range(min(n1, n2) + 1):
        for n6 in range(min(n3, n4) + 1):
            for n7 in range(min(n1 - n5, n3 - n6) + 1):
                for n8 in range(min(n2 - n5, n4 - n6) + 1):
                    if fill:
                        out[count, 0] = n5
                        out[count, 1] = n6
                        out[count, 2] = n7
                        out[count, 3] = n8
                    count += 1
    return count


@jit
def four_index_coefficients(terms, n1, n2, n3, n4, A, B, C, fact):
    """Coefficients ``c[S]`` of ``xi**(a-S) * zeta**(b-S)`` grouped by ``S = n5+n6+n7+n8``."""
    smax = (n1 + n2 + n3 + n4) // 2
    T = terms.shape[0]
    vals = np.zeros(T, dtype=np.complex128)
    svals = np.empty(T, dtype=np.int64)
    AC = A + C
    BC = B + C
    top = fact[n1] * fact[n2] * fact[n3] * fact[n4]
    for t in range(T):
        n5 = terms[t, 0]
        n6 = terms[t, 1]
        n7 = terms[t, 2]
        n8 = terms[t, 3]
        e1 = n1 + n2 - 2 * n5 - n7 - n8
        e2 = n3 + n4 - 2 * n6 - n7 - n8
        den = (fact[n5] * fact[n1 - n5 - n7] * fact[n2 - n5 - n8]
               * fact[n6] * fact[n3 - n6 - n7] * fact[n4 - n6 - n8]
               * fact[n7] * fact[n8])
        v = top / den
        for _ in range(e1):
            v *= AC
        for _ in range(n5):
            v *= A
        for _ in range(e2):
            v *= BC
        for _ in range(n6):
            v *= B
        for _ in range(n7 + n8):
            v *= C
        vals[t] = v
        svals[t] = n5 + n6 + n7 + n8
    coef = np.zeros(smax + 1, dtype=np.float64)
    for s in range(smax + 1):
        m = 0
        for t in range(T):
            if svals[t] == s:
                m += 1
        if m == 0:
            continue
        group = np.empty(m, dtype=np.complex128)
        m = 0
        for t in range(T):
            if svals[t] == s:
                group[m] = vals[t]
                m += 1
        coef[s] = sorted_sum(group).real
    return coef


@jit
def eval_four_index(coef, a, b, xi, zeta):
    """``sum_S coef[S] * xi**(a-S) * zeta**(b-S)`` at every point; 0**0 is 1."""
    npts = xi.shape[0]
    out = np.empty(npts, dtype=np.complex128)
    S = coef.shape[0]
    vals = np.empty(S, dtype=np.complex128)
    for pt in range(npts):
        for s in range(S):
            if s > a or s > b or coef[s] == 0.0:
                vals[s] = 0.0
                continue
            v = complex(coef[s])
            for _ in range(a - s):
                v *= xi[pt]
            for _ in range(b - s):
                v *= zeta[pt]
            vals[s] = v
        out[pt] = sorted_sum(vals)
    return out


@jit
def displacement_matrix(alpha, dim):
    """Truncated ``<m|D(alpha)|n>`` from normalized associated-Laguerre recurrences.

    Along each diagonal ``m = n + k`` the element is ``(alpha/|alpha|)**k f_n``
    with ``f_n = sqrt(n!/(n+k)!) x**(k/2) exp(-x/2) L_n^(k)(x)``, ``x = |alpha|^2``,
    which obeys the three-term recurrence
    ``sqrt((n+1)(n+1+k)) f_{n+1} = (2n+1+k-x) f_n - sqrt(n(n+k)) f_{n-1}``.
    Elements above the diagonal follow from ``<n|D|n+k> = (-conj(u))**k f_n``.
    """
    out = np.zeros((dim, dim), dtype=np.complex128)
    x = abs(alpha) ** 2
    if x == 0.0:
        for n in range(dim):
            out[n, n] = 1.0
        return out
    u = alpha / abs(alpha)
    lx = np.log(x)
    for k in range(dim):
        up = u**k
        down = (-np.conj(u)) ** k
        f_prev = 0.0
        f = np.exp(0.5 * k * lx - 0.5 * x - 0.5 * math.lgamma(k + 1.0))
        for n in range(dim - k):
            out[n + k, n] = up * f
            if k > 0:
                out[n, n + k] = down * f
            f_next = ((2 * n + 1 + k - x) * f - np.sqrt(n * (n + k)) * f_prev) / np.sqrt((n + 1) * (n + 1 + k))
            f_prev = f
            f = f_next
    return out
