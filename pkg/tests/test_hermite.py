import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pvtele.gaussian_states import SqueezingParam
from pvtele.hermite import (
    DegreeLimitError,
    HermiteParams,
    HermitePrecisionError,
    MultiIndex,
    PrecisionPolicy,
    four_index_coefficients,
    four_index_params,
    hermite_general,
    hermite_general_batch,
    hermite_two_mode_four_index,
    stirling2,
)

EXTENDED = PrecisionPolicy("extended", 200)


def random_complex(rng, shape, radius):
    # uniform modulus in [0, radius], uniform phase
    return radius * rng.random(shape) * np.exp(2j * np.pi * rng.random(shape))


def random_params(rng, dim, scale=1.0):
    A = random_complex(rng, (dim, dim), scale)
    M = np.triu(A) + np.triu(A, 1).T
    return HermiteParams(M, random_complex(rng, dim, scale))


def indices_up_to(dim, total):
    for idx in itertools.product(range(total + 1), repeat=dim):
        if sum(idx) <= total:
            yield idx


# -- closed forms --------------------------------------------------------------


def test_zero_index_is_exactly_one():
    p = random_params(np.random.default_rng(0), 3)
    assert hermite_general(p, (0, 0, 0)) == 1


def test_one_dimensional_second_order():
    m, x0 = 0.3 - 0.2j, 1.1 + 0.4j
    p = HermiteParams([[m]], [x0])
    assert hermite_general(p, (2,)) == pytest.approx(x0**2 + 2 * m, rel=1e-14)


def test_two_dimensional_mixed_order():
    c = 0.25 + 0.1j
    M = np.array([[0.4, c], [c, -0.7]])
    x = np.array([0.3 - 1j, 2.0 + 0.5j])
    assert hermite_general(HermiteParams(M, x), (1, 1)) == pytest.approx(x[0] * x[1] + 2 * c, rel=1e-14)


def test_one_dimensional_matches_physicists_hermite():
    # exp(2 x u - u^2) generates the physicists' H_n
    from scipy.special import eval_hermite

    for n in range(12):
        val = hermite_general(HermiteParams([[-1.0]], [2 * 0.37]), (n,))
        assert val.real == pytest.approx(eval_hermite(n, 0.37), rel=1e-11, abs=1e-11)


def test_normalization_of_symmetric_subtraction_at_origin():
    # <n1 n2> on TMSV = V sinh^2 r (Fock-basis expectation)
    r = SqueezingParam.from_db(8)
    A = B = -(r.V - 1) / 2
    C = r.cross / 2
    expected = r.V * math.sinh(r.r) ** 2
    four = hermite_two_mode_four_index(A, B, C, (1, 1, 1, 1), 0.0)
    gen = hermite_general(four_index_params(A, B, C, 0.0), (1, 1, 1, 1))
    assert four.real == pytest.approx(expected, rel=1e-12)
    assert gen.real == pytest.approx(expected, rel=1e-12)


# -- generating function (normative) -----------------------------------------


def generating_series(params, u, order):
    total = 0j
    for idx in indices_up_to(params.dim, order):
        w = np.prod([u[i] ** n / math.factorial(n) for i, n in enumerate(idx)])
        total += w * hermite_general(params, idx)
    return total


def test_generating_function_random_params():
    rng = np.random.default_rng(20240611)
    for trial in range(200):
        dim = 1 + trial % 4
        p = random_params(rng, dim)
        u = random_complex(rng, dim, 0.3)
        exact = np.exp(u @ p.M @ u + p.x @ u)
        series = generating_series(p, u, 12)
        assert abs(series - exact) <= 1e-6 * abs(exact), (trial, dim)


# -- derivative identity -------------------------------------------------------


def gaussian(M, d, x):
    return np.exp(-0.5 * x @ M @ x + d @ x)


@pytest.mark.parametrize("dim", [1, 2])
def test_derivative_identity_finite_differences(dim):
    rng = np.random.default_rng(7 + dim)
    h = 1e-5
    for _ in range(25):
        A = rng.uniform(-1, 1, (dim, dim))
        M = (A + A.T) / 2
        d = rng.uniform(-1, 1, dim)
        x = rng.uniform(-1, 1, dim)
        herm = HermiteParams(-0.5 * M, M @ x - d)
        f0 = gaussian(M, d, x)
        E = np.eye(dim)
        for i in range(dim):
            # first derivative
            fd = (gaussian(M, d, x + h * E[i]) - gaussian(M, d, x - h * E[i])) / (2 * h)
            idx = tuple(int(k == i) for k in range(dim))
            an = -hermite_general(herm, idx).real * f0
            assert fd == pytest.approx(an, rel=1e-5, abs=1e-9)
            # second derivative
            fd2 = (gaussian(M, d, x + h * E[i]) - 2 * f0 + gaussian(M, d, x - h * E[i])) / h**2
            idx2 = tuple(2 * int(k == i) for k in range(dim))
            an2 = hermite_general(herm, idx2).real * f0
            assert fd2 == pytest.approx(an2, rel=1e-5, abs=1e-4 * max(1.0, abs(an2)))
        if dim == 2:
            fm = sum(
                s1 * s2 * gaussian(M, d, x + h * (s1 * E[0] + s2 * E[1]))
                for s1 in (1, -1) for s2 in (1, -1)
            ) / (4 * h * h)
            an = hermite_general(herm, (1, 1)).real * f0
            assert fm == pytest.approx(an, rel=1e-5, abs=1e-4 * max(1.0, abs(an)))


# -- structure -----------------------------------------------------------------


def test_permutation_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(30):
        dim = int(rng.integers(2, 5))
        p = random_params(rng, dim)
        idx = tuple(int(v) for v in rng.integers(0, 4, dim))
        perm = rng.permutation(dim)
        q = HermiteParams(p.M[np.ix_(perm, perm)], p.x[perm])
        a = hermite_general(p, idx)
        b = hermite_general(q, tuple(idx[k] for k in perm))
        assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_four_index_matches_general_up_to_degree_12():
    rng = np.random.default_rng(11)
    A, B, C = -1.3, -0.8, 0.9
    for idx in indices_up_to(4, 12):
        if sum(idx) % 3:
            continue
        xi = complex(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5))
        four = hermite_two_mode_four_index(A, B, C, idx, xi)
        gen = hermite_general(four_index_params(A, B, C, xi), idx)
        assert abs(four - gen) <= 1e-10 * max(1.0, abs(gen)), idx


def test_four_index_independent_second_argument():
    A, B, C = -0.6, -0.9, 0.4
    xi, zeta = 0.7 + 0.2j, -0.3 + 1.1j
    for idx in [(1, 0, 2, 1), (2, 2, 1, 0), (3, 1, 1, 2)]:
        four = hermite_two_mode_four_index(A, B, C, idx, xi, zeta)
        gen = hermite_general(four_index_params(A, B, C, xi, zeta), idx)
        assert four == pytest.approx(gen, rel=1e-11)


def test_four_index_origin_limit():
    A, B, C = -1.1, -1.1, 0.8
    for idx in indices_up_to(4, 8):
        at0 = hermite_two_mode_four_index(A, B, C, idx, 0.0)
        gen = hermite_general(four_index_params(A, B, C, 0.0), idx)
        assert np.isfinite(at0)
        assert abs(at0 - gen) <= 1e-12 * max(1.0, abs(gen))
    assert hermite_two_mode_four_index(A, B, C, (0, 0, 0, 0), 1.7 - 0.2j) == 1


def test_four_index_vectorized_shape():
    xs = np.linspace(0, 2, 12).reshape(3, 4) + 0.1j
    out = hermite_two_mode_four_index(-1.0, -1.0, 0.5, (2, 1, 2, 1), xs)
    assert out.shape == (3, 4)
    assert out[1, 2] == pytest.approx(hermite_two_mode_four_index(-1.0, -1.0, 0.5, (2, 1, 2, 1), xs[1, 2]))


def test_batch_agrees_with_scalar():
    rng = np.random.default_rng(5)
    p = random_params(rng, 3)
    X = rng.normal(size=(6, 3)) + 1j * rng.normal(size=(6, 3))
    out = hermite_general_batch(p.M, X, (2, 1, 3))
    for k in range(6):
        assert out[k] == pytest.approx(hermite_general(HermiteParams(p.M, X[k]), (2, 1, 3)), rel=1e-13)


# -- precision -----------------------------------------------------------------


def test_extended_matches_machine_at_moderate_degree():
    rng = np.random.default_rng(9)
    p = random_params(rng, 4, 0.7)
    idx = (3, 2, 2, 3)
    assert hermite_general(p, idx, EXTENDED) == pytest.approx(hermite_general(p, idx), rel=1e-11)
    A, B, C = -1.2, -1.2, 1.0
    a = hermite_two_mode_four_index(A, B, C, (5, 5, 5, 5), 0.8 + 0.3j)
    b = hermite_two_mode_four_index(A, B, C, (5, 5, 5, 5), 0.8 + 0.3j, policy=EXTENDED)
    assert a == pytest.approx(b, rel=1e-10)


def test_automatic_extension_above_degree_limit():
    coef = four_index_coefficients(-1.0, -1.0, 0.5, (7, 7, 7, 7))
    assert isinstance(coef, tuple)
    pinned = PrecisionPolicy(auto_extend_above=None)
    assert isinstance(four_index_coefficients(-1.0, -1.0, 0.5, (7, 7, 7, 7), pinned), np.ndarray)


def test_machine_overflow_raises_precision_error():
    pinned = PrecisionPolicy(auto_extend_above=None)
    with pytest.raises(HermitePrecisionError, match="extended"):
        hermite_two_mode_four_index(-1e80, -1e80, 1e80, (10, 10, 10, 10), 1e10, policy=pinned)
    with pytest.raises(HermitePrecisionError):
        hermite_general_batch([[1e300]], [[1e300]], (6,), pinned)


def test_degree_cap():
    with pytest.raises(DegreeLimitError):
        MultiIndex((20, 21))
    with pytest.raises(DegreeLimitError):
        hermite_general(HermiteParams([[1.0]], [1.0]), MultiIndex((5,), max_degree=4))
    with pytest.raises(ValueError):
        MultiIndex((1, -1))


def test_params_validation():
    with pytest.raises(ValueError, match="symmetric"):
        HermiteParams([[1, 2], [3, 4]], [0, 0])
    with pytest.raises(ValueError, match="length"):
        HermiteParams(np.eye(2), [0, 0, 0])
    with pytest.raises(ValueError):
        hermite_general(HermiteParams(np.eye(2), [0, 0]), (1, 1, 1))
    with pytest.raises(ValueError):
        four_index_coefficients(float("nan"), 0, 0, (1, 0, 0, 0))


def test_policy_parse():
    assert PrecisionPolicy.parse("machine").mode == "machine"
    p = PrecisionPolicy.parse("extended:128")
    assert (p.mode, p.mantissa_bits) == ("extended", 128)
    assert PrecisionPolicy.parse("extended").mantissa_bits == 256
    with pytest.raises(ValueError):
        PrecisionPolicy("extended", 32)
    with pytest.raises(ValueError):
        PrecisionPolicy.parse("quad")


# -- Stirling numbers ----------------------------------------------------------


@pytest.mark.parametrize("n,m,value", [(3, 1, 1), (3, 2, 3), (4, 2, 7), (0, 0, 1), (5, 0, 0), (6, 3, 90)])
def test_stirling2_values(n, m, value):
    assert stirling2(n, m) == value


def test_stirling2_recurrence_and_range():
    for n in range(1, 40):
        for m in range(1, n):
            assert stirling2(n, m) == m * stirling2(n - 1, m) + stirling2(n - 1, m - 1)
        assert stirling2(n, n) == 1
    assert stirling2(64, 64) == 1
    for bad in [(3, 4), (65, 2), (-1, 0)]:
        with pytest.raises(ValueError):
            stirling2(*bad)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.integers(0, 4), min_size=2, max_size=2),
    st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1),
    st.complex_numbers(max_magnitude=2), st.complex_numbers(max_magnitude=2),
)
def test_property_two_dimensional_recurrence(idx, m11, m12, m22, x1, x2):
    # d/du_1 of the generating function: H_{n+e1} = x1 H_n + 2 (M11 n1 H_{n-e1} + M12 n2 H_{n-e2})
    M = np.array([[m11, m12], [m12, m22]])
    p = HermiteParams(M, [x1, x2])
    n1, n2 = idx
    lhs = hermite_general(p, (n1 + 1, n2))
    rhs = x1 * hermite_general(p, (n1, n2))
    if n1:
        rhs += 2 * m11 * n1 * hermite_general(p, (n1 - 1, n2))
    if n2:
        rhs += 2 * m12 * n2 * hermite_general(p, (n1, n2 - 1))
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs), abs(rhs))
