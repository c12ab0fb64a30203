import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pvtele.fock_oracle import FockOperatorSet, oracle_apply, oracle_cf, oracle_state, required_dim
from pvtele.gaussian_states import GaussianState, SqueezingParam, tmsc, tmst, tmsv
from pvtele.hermite import PrecisionPolicy
from pvtele.pv_ops import (
    ConsistencyError,
    GeneralizedPVSpec,
    GeneralizedPVState,
    InvalidOperationError,
    PhotonVariedState,
    PVSpec,
    h_matrix,
    nla_coefficients,
    nla_matrix,
    operation_from_dict,
    photon_varied,
    pv_cf,
    response_ratio,
    tmsv_pv,
)
from pvtele.teleport import h_max

R8 = SqueezingParam.from_db(8)
RADII = np.linspace(0.15, 3.0, 20)


def oracle_ratio(r, spec, xi, dim=None, family="tmsv", **kw):
    extra = spec.total if isinstance(spec, PVSpec) else spec.N
    dim = dim or required_dim(r, extra, kw.get("nbar", 0.0))
    base = oracle_state(family, r, dim, **kw)
    out = oracle_apply(base, spec)
    pts = np.stack([xi, np.conj(xi)], 1)
    return oracle_cf(out, pts), oracle_cf(base, pts)


# -- specs ---------------------------------------------------------------------


def test_spec_validation_and_round_trip():
    with pytest.raises(ValueError):
        PVSpec(((0, 1), (1, 1)))
    with pytest.raises(ValueError):
        PVSpec(((1, -1), (1, 1)))
    with pytest.raises(ValueError):
        PVSpec(((1, 41), (1, 0)))
    spec = PVSpec(((-1, 2), (1, 1)))
    assert operation_from_dict(spec.to_dict()) == spec
    assert spec.total == 3 and spec.ts == (-1, 1) and spec.ns == (2, 1)
    g = GeneralizedPVSpec(2, (3.0, 0.0, 4.0), False)
    assert g.e == pytest.approx((0.6, 0.0, 0.8))
    assert operation_from_dict(g.to_dict()) == g
    assert GeneralizedPVSpec(3).e == (1.0, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        GeneralizedPVSpec(2, (1.0, 2.0))
    with pytest.raises(ValueError):
        GeneralizedPVSpec(1, (0.0, 0.0))
    with pytest.raises(ValueError):
        GeneralizedPVSpec(-1)
    with pytest.raises(ValueError):
        operation_from_dict({"nothing": 1})


# -- photon-varied CFs ---------------------------------------------------------


def test_no_operation_reduces_to_gaussian():
    base = tmsc(0.6, 0.2 - 0.1j, 0.4)
    st = photon_varied(base, PVSpec(((-1, 0), (1, 0))))
    pts = np.array([[0.3 + 0.2j, -1.0], [2.0j, 0.5 - 0.5j]])
    assert np.allclose(pv_cf(st, pts), base.cf(pts), rtol=1e-14)
    assert st.norm == 1


def test_vacuum_addition_gives_single_photon_cf():
    st = photon_varied(GaussianState.vacuum(1), PVSpec(((1, 1),)))
    xi = np.array([[0.0], [0.4 + 0.3j], [1.5], [-2.0 + 1.0j]])
    x = np.abs(xi[:, 0]) ** 2
    assert np.allclose(pv_cf(st, xi), np.exp(-x / 2) * (1 - x), atol=1e-14)


def test_subtraction_normalization():
    st = tmsv_pv(R8, PVSpec.symmetric(-1, 1))
    assert st.norm == pytest.approx(R8.V * math.sinh(R8.r) ** 2, rel=1e-12)


def test_subtraction_from_vacuum_is_invalid():
    with pytest.raises(InvalidOperationError):
        photon_varied(GaussianState.vacuum(2), PVSpec(((-1, 1), (-1, 0))))
    with pytest.raises(ValueError):
        photon_varied(tmsv(0.3), PVSpec(((-1, 1),)))


def test_cf_origin_is_one():
    for spec in [PVSpec.symmetric(-1, 2), PVSpec(((1, 1), (-1, 3))), GeneralizedPVSpec(3, (0.5, -0.2, 0.1, 0.3))]:
        st = photon_varied(tmsc(0.7, 0.3, -0.2j), spec)
        assert st.cf(np.zeros(2)) == pytest.approx(1, abs=1e-13)


@pytest.mark.parametrize("spec", [
    PVSpec.symmetric(-1, 1), PVSpec.symmetric(1, 2), PVSpec(((-1, 2), (1, 1))), PVSpec(((1, 0), (-1, 3))),
])
def test_tmsv_matches_oracle(spec):
    r = R8
    s = tmsv_pv(r, spec)
    orc, base = oracle_ratio(r, spec, RADII.astype(complex))
    pts = np.stack([RADII, RADII], 1).astype(complex)
    assert np.max(np.abs(pv_cf(s, pts) - orc)) < 1e-8
    assert np.max(np.abs(response_ratio(s, RADII) - (orc / base).real)) < 1e-8


def test_off_diagonal_cf_matches_oracle():
    r = SqueezingParam(0.7)
    spec = PVSpec(((-1, 1), (1, 2)))
    s = tmsv_pv(r, spec)
    o = oracle_apply(oracle_state("tmsv", r, required_dim(r, 3)), spec)
    pts = np.array([[0.5 + 0.2j, -1.0 + 0.3j], [1.2j, 0.7], [-0.4, -0.9 - 1.1j]])
    assert np.max(np.abs(s.cf(pts) - oracle_cf(o, pts))) < 1e-9


def test_tmsc_and_tmst_match_oracle():
    r = SqueezingParam(0.6)
    xs = np.array([0.5, 1.0 + 0.5j, 2.0j, -1.5 + 1.0j])
    spec = PVSpec.symmetric(-1, 1)
    s = photon_varied(tmsc(r, 0.3 - 0.2j, 0.5), spec)
    o, b = oracle_ratio(r, spec, xs, dim=90, family="tmsc", z1=0.3 - 0.2j, z2=0.5)
    pts = np.stack([xs, xs.conj()], 1)
    assert np.max(np.abs(s.cf(pts) - o)) < 1e-8
    s2 = photon_varied(tmst(r, 0.3), spec)
    o2, b2 = oracle_ratio(r, spec, xs, family="tmst", nbar=0.3)
    assert np.max(np.abs(response_ratio(s2, xs) - (o2 / b2).real)) < 1e-8


@pytest.mark.parametrize("dagger", [True, False])
def test_generalized_matches_oracle(dagger):
    r = SqueezingParam(0.7)
    spec = GeneralizedPVSpec(3, (0.6, -0.3, 0.5, 0.2), dagger)
    s = tmsv_pv(r, spec)
    orc, base = oracle_ratio(r, spec, RADII.astype(complex))
    assert np.max(np.abs(response_ratio(s, RADII) - (orc / base).real)) < 1e-8
    pts = np.array([[0.4 - 0.2j, 1.1], [0.9j, -0.6 + 0.6j]])
    o = oracle_apply(oracle_state("tmsv", r, required_dim(r, 3)), spec)
    assert np.max(np.abs(s.cf(pts) - oracle_cf(o, pts))) < 1e-9


def test_generalized_single_term_is_symmetric_addition():
    a = tmsv_pv(R8, GeneralizedPVSpec(2, (0.0, 0.0, 1.0)))
    b = tmsv_pv(R8, PVSpec.symmetric(1, 2))
    assert np.allclose(response_ratio(a, RADII), response_ratio(b, RADII), rtol=1e-12)
    c = tmsv_pv(R8, GeneralizedPVSpec(1, (0.0, 1.0), dagger=False))
    d = tmsv_pv(R8, PVSpec.symmetric(-1, 1))
    assert np.allclose(response_ratio(c, RADII), response_ratio(d, RADII), rtol=1e-12)


# -- response ratio properties ---------------------------------------------------


def test_ratio_origin_exactly_one():
    for spec in [PVSpec.symmetric(1, 1), GeneralizedPVSpec(2, (1.0, 0.5, 0.2))]:
        assert response_ratio(tmsv_pv(R8, spec), 0.0) == 1.0


def test_subtraction_above_one_and_addition_threshold():
    xs = np.linspace(0.01, 3, 300)
    sub = response_ratio(tmsv_pv(R8, PVSpec.symmetric(-1, 1)), xs)
    assert np.all(sub > 1)
    add = response_ratio(tmsv_pv(R8, PVSpec.symmetric(1, 1)), xs)
    assert add[0] < 1 and add[-1] > 1
    assert np.all(np.diff(np.sign(add - 1)) >= 0)


def test_radial_symmetry():
    for spec in [PVSpec.symmetric(-1, 2), PVSpec.symmetric(1, 1), GeneralizedPVSpec(2, (1.0, -0.4, 0.3))]:
        s = tmsv_pv(R8, spec)
        for rho in (0.3, 1.1, 2.6):
            ring = rho * np.exp(1j * np.linspace(0, 2 * np.pi, 9))
            vals = response_ratio(s, ring)
            assert np.allclose(vals, vals[0], rtol=1e-12)
            # the generic (non-four-index) path agrees
            generic = s.factor(np.stack([ring, ring.conj()], 1)).real
            assert np.allclose(generic, vals, rtol=1e-10)


def test_scale_invariance():
    e = np.array([0.7, -0.2, 0.4, 0.1])
    a = response_ratio(tmsv_pv(R8, GeneralizedPVSpec(3, e)), RADII)
    b = response_ratio(tmsv_pv(R8, GeneralizedPVSpec(3, -3.7 * e)), RADII)
    assert np.allclose(a, b, rtol=1e-12, atol=0)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(1, 5),
    st.lists(st.floats(-1, 1), min_size=6, max_size=6),
    st.floats(0.1, 1.5),
    st.booleans(),
)
def test_property_upper_bound(N, coefs, r, dagger):
    e = np.array(coefs[: N + 1])
    if np.linalg.norm(e) < 1e-3:
        e = np.eye(N + 1)[0]
    s = tmsv_pv(r, GeneralizedPVSpec(N, e, dagger))
    xs = np.linspace(0.05, 3, 30)
    assert np.all(response_ratio(s, xs) <= h_max(r, xs) * (1 + 1e-9))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), st.sampled_from([-1, 1]), st.sampled_from([-1, 1]), st.floats(0.05, 1.2))
def test_property_pv_upper_bound(n1, n2, t1, t2, r):
    s = tmsv_pv(r, PVSpec(((t1, n1), (t2, n2))))
    xs = np.linspace(0.05, 3, 25)
    assert np.all(response_ratio(s, xs) <= h_max(r, xs) * (1 + 1e-9))


def test_consistency_error_on_complex_ratio():
    # TMSC with complex displacement: the diagonal factor is genuinely complex
    s = photon_varied(tmsc(0.8, 0.7j, 0.2), PVSpec.symmetric(-1, 1))
    with pytest.raises(ConsistencyError):
        response_ratio(s, np.array([1.0 + 0.5j]))


def test_extended_policy_agrees():
    ext = PrecisionPolicy("extended", 160)
    spec = PVSpec.symmetric(-1, 3)
    a = response_ratio(tmsv_pv(R8, spec), RADII)
    b = response_ratio(photon_varied(tmsv(R8), spec, ext), RADII)
    assert np.allclose(a, b, rtol=1e-11)


# -- Gram matrices -------------------------------------------------------------------


def test_h_matrix_examples():
    assert h_matrix(R8, 0, 0.0)[0, 0] == 1
    assert np.allclose(h_matrix(0.0, 1, 0.0), np.eye(2))
    for N in range(11):
        G = h_matrix(R8, N, 0.0)
        assert np.allclose(G, G.conj().T)
        assert np.allclose(G.imag, 0)
        # entries span many decades: test the diagonally scaled matrix
        d = 1 / np.sqrt(np.diag(G.real))
        scaled = d[:, None] * G.real * d
        assert np.linalg.eigvalsh(scaled).min() > 0
        np.linalg.cholesky(scaled)


def test_h_matrix_is_oracle_gram():
    r, N, dim = SqueezingParam(0.5), 3, 80
    ket = oracle_state("tmsv", r, dim).ket
    ops = FockOperatorSet(dim)
    vecs = [ket]
    for _ in range(N):
        vecs.append(ops.adag @ vecs[-1] @ ops.adag.T)
    G = np.array([[np.vdot(vecs[j], vecs[k]) for k in range(N + 1)] for j in range(N + 1)])
    assert np.allclose(h_matrix(r, N, 0.0), G, rtol=1e-10)
    # off the origin it produces the generalized state's diagonal Gram
    s = GeneralizedPVState(tmsv(r), GeneralizedPVSpec(N))
    xi = np.array([0.7, 1.9])
    assert np.allclose(h_matrix(r, N, xi), np.swapaxes(s.diagonal_gram(xi), -1, -2), rtol=1e-12)


# -- NLA coefficients ----------------------------------------------------------------


def test_nla_examples():
    lam = R8.lam
    assert nla_coefficients(1.7, 0, R8) == pytest.approx([1.0])
    g = 1.3
    L = math.log(g)
    assert nla_coefficients(g, 1, R8, normalize=False) == pytest.approx([1, lam * L])
    assert nla_coefficients(g, 2, R8, normalize=False) == pytest.approx([1, lam * (L + L * L / 2), lam**2 * L * L / 2])
    e = nla_coefficients(g, 4, R8)
    assert np.linalg.norm(e) == pytest.approx(1)
    rows = nla_coefficients(np.array([1.1, 1.3]), 2, R8, normalize=False)
    assert rows[1] == pytest.approx(nla_coefficients(1.3, 2, R8, normalize=False))
    assert nla_matrix(3, R8)[0].tolist() == [1, 0, 0, 0]
    with pytest.raises(ValueError):
        nla_coefficients(0.0, 2, R8)


def test_nla_operator_action_on_tmsv():
    # A_N^dag(e(g)) |TMSV> equals sum_n ln^n g / n! (a1^dag a1)^n |TMSV>
    r, N, dim, g = SqueezingParam(0.4), 4, 70, 1.4
    ket = oracle_state("tmsv", r, dim).ket
    ops = FockOperatorSet(dim)
    e = nla_coefficients(g, N, r, normalize=False)
    lhs = np.zeros_like(ket)
    term = ket
    for n in range(N + 1):
        lhs = lhs + e[n] * term
        term = ops.adag @ term @ ops.adag.T
    rhs = np.zeros_like(ket)
    num = ops.number @ ket
    power = ket
    for n in range(N + 1):
        rhs = rhs + math.log(g) ** n / math.factorial(n) * power
        power = ops.number @ power
    assert np.max(np.abs(lhs - rhs)[: dim - N, : dim - N]) < 1e-12
    assert num.shape == ket.shape
