import json
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ellhol.affine import char_level_one
from ellhol.chern import (BChInput, FormalRing, a_hat_series, bismut_chern, chern_character,
                          completed_witten_series, ech_cutoff_sequence, ech_restriction_check, evaluate_q,
                          grassmann_transport, localization_identity_check, q_graded_bismut_chern,
                          q_graded_chern, q_graded_chern_anomaly_free, q_graded_laurent, theta11_taylor,
                          witten_root_series, witten_series)
from ellhol.errors import AlgebraMismatch, DimMismatch, TruncationTooSmall, ValidationError
from ellhol.grassmann import ExtAlgebra, GrassMat, g_exp, g_str, scalar_max_diff
from ellhol.special import eisenstein_G, eta, qpow
from ellhol.transport import LoopConnection, cartan_block, random_smooth_loop

mp.mp.dps = 30


def series_inverse(c, D):
    out = [0] * (D + 1)
    out[0] = 1 / c[0]
    for k in range(1, D + 1):
        out[k] = -sum(c[j] * out[k - j] for j in range(1, k + 1) if j < len(c)) / c[0]
    return out


def mp_witten_root(tau, D):
    nome = mp.exp(1j * mp.pi * tau)
    e = mp.exp(2j * mp.pi * tau / 24) * mp.qp(mp.exp(2j * mp.pi * tau))
    f = lambda x: 1j * mp.jtheta(1, x / 2j, nome) / e ** 3
    c = mp.taylor(f, 0, D + 1)
    return [complex(v) for v in series_inverse(c[1:], D)]


@pytest.mark.parametrize("tau", [1j, 0.2 + 0.9j, -0.35 + 1.4j])
def test_witten_root_series_against_mpmath(tau):
    ours = witten_root_series(tau, 8)
    ref = mp_witten_root(tau, 8)
    assert np.max(np.abs(ours - np.array(ref))) < 1e-12


def test_theta11_taylor_leading():
    tau = 0.1 + 1.1j
    a = theta11_taylor(tau, 5)
    assert np.all(a[::2] == 0)
    assert abs(a[1] - eta(tau) ** 3) < 1e-14


def test_witten_quadratic_coefficient_is_g2():
    tau = 0.2 + 1.1j
    assert abs(witten_root_series(tau, 4)[2] - eisenstein_G(2, tau)) < 1e-13


def test_completed_witten_invariance():
    ring = FormalRing(2, 6)
    tau = 0.1 + 1.2j
    a = completed_witten_series(ring, tau)
    b = completed_witten_series(ring, -1 / tau).substitute_scale(1 / tau)
    assert a.max_abs_diff(b) < 1e-12
    # the uncompleted series is not invariant
    c = witten_series(ring, -1 / tau).substitute_scale(1 / tau)
    assert witten_series(ring, tau).max_abs_diff(c) > 1e-3


def test_a_hat_coefficients():
    s = a_hat_series(FormalRing(1, 6)).coeffs
    assert np.allclose(s, [1, 0, -1 / 24, 0, 7 / 5760, 0, -31 / 967680], atol=1e-15)


def test_witten_tends_to_a_hat():
    ring = FormalRing(2, 4)
    assert witten_series(ring, 8j).max_abs_diff(a_hat_series(ring)) < 1e-20 + 1e-9


def test_formal_ring_algebra(rng):
    ring = FormalRing(2, 5)
    c = rng.normal(size=2)
    e = ring.exp_linear(c)
    assert (e * ring.exp_linear(-c)).max_abs_diff(ring.one()) < 1e-14
    assert e.inverse().max_abs_diff(ring.exp_linear(-c)) < 1e-13
    lin = ring.var(0) * c[0] + ring.var(1) * c[1]
    assert lin.exp().max_abs_diff(e) < 1e-14
    assert e.coefficient([2, 1]) == pytest.approx(c[0] ** 2 / 2 * c[1])
    with pytest.raises(ZeroDivisionError):
        ring.var(0).inverse()
    with pytest.raises(ValueError):
        ring.one() + FormalRing(2, 4).one()
    with pytest.raises(ValueError):
        FormalRing(0, 3)


def test_chern_character_counts():
    ring = FormalRing(2, 3)
    ch = chern_character([((1, 0), 1), ((-1, 0), 1), ((0, 1), 2)], ring)
    assert ch.constant_term() == 4
    assert ch.coefficient([2, 0]) == pytest.approx(1.0)
    assert ch.coefficient([0, 1]) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        chern_character([((1,), 1)], ring)


@pytest.mark.parametrize("rep", ["S00", "S01", "S10", "S11"])
def test_laurent_expansion_matches_character(rep):
    tau = 0.1 + 1.2j
    z = np.array([0.13 + 0.02j, 0.31])
    sh, rows = q_graded_laurent(rep, 2, 10)
    v = sum(qpow(float(sh + Fraction(k, 2)), tau) * sum(c * np.exp(1j * np.pi * np.dot(key, z))
                                                        for key, c in row.items())
            for k, row in enumerate(rows))
    assert abs(v - char_level_one(rep, z, tau)) < 1e-12


def test_anomaly_free_series_constant_term_is_fock_dimension():
    ring = FormalRing(2, 2)
    series = q_graded_chern_anomaly_free("S00", ring, 4)
    dims = {e: s.constant_term() for e, s in series.items()}
    assert dims[Fraction(0)] == 1
    assert all(abs(v.imag) < 1e-12 and abs(v.real - round(v.real)) < 1e-9 for v in dims.values())


def test_evaluate_q_matches_character():
    ring = FormalRing(2, 0)
    tau = 1.1j
    val = evaluate_q(q_graded_chern("S10", ring, 12), tau).constant_term()
    assert abs(val - char_level_one("S10", [0, 0], tau)) < 1e-12


def test_truncation_errors():
    with pytest.raises(TruncationTooSmall):
        q_graded_laurent("S00", 2, 0)


@pytest.mark.parametrize("l,tau", [(1, 1.1j), (2, 0.2 + 1.3j)])
def test_localization_identity(l, tau):
    assert localization_identity_check(l, tau, 4)["deviation"] < 1e-10
    assert localization_identity_check(l, tau, 4, eta_power=2 * l + 1)["deviation"] > 1e-3


def alg_and_connection(n=3, K=32):
    alg = ExtAlgebra(2)
    conn = random_smooth_loop(n, K, np.random.default_rng(2))
    return alg, conn


def test_bch_trivial_b_field():
    alg = ExtAlgebra(2)
    conn = LoopConnection(2, "so", np.zeros((16, 2, 2)))
    b = GrassMat(alg, 2, {0b11: 0.7 * np.eye(2)})
    val = bismut_chern(BChInput(conn, None, b))
    assert val == pytest.approx({0: 2.0, 0b11: 1.4})


def test_bch_constant_matches_exponential(rng):
    alg = ExtAlgebra(3)
    A = cartan_block([0.4, 1.1])
    R = GrassMat(alg, 4, {0b011: rng.normal(size=(4, 4)), 0b110: rng.normal(size=(4, 4))})
    conn = LoopConnection.constant(A, 64, "so")
    inp = BChInput(conn, [R] * 64)
    expected = g_str(g_exp(GrassMat.scalar(alg, 4, A) + R))
    assert scalar_max_diff(bismut_chern(inp), expected) < 1e-8


def test_bch_conjugation_invariant(rng):
    alg, conn = alg_and_connection()
    curv = [GrassMat(alg, 3, {0b11: rng.normal(size=(3, 3))}) for _ in range(conn.K)]
    inp = BChInput(conn, curv, GrassMat(alg, 3, {0b11: 0.2 * np.eye(3)}))
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    assert scalar_max_diff(bismut_chern(inp), bismut_chern(inp.conjugated(Q))) < 1e-12


def test_grassmann_transport_body_is_ordinary_transport():
    alg, conn = alg_and_connection()
    from ellhol.transport import parallel_transport
    hol = grassmann_transport([GrassMat.scalar(alg, 3, a) for a in conn.samples])
    assert np.max(np.abs(hol.body() - parallel_transport(conn).hol)) < 1e-13


def test_q_graded_bch():
    alg = ExtAlgebra(2)
    conn = LoopConnection(1, "gl", np.zeros((16, 1, 1)))
    b = GrassMat(alg, 1, {0b11: np.eye(1)})
    inputs = [(0, BChInput(conn, None, b)), (1, BChInput(conn, None, b)), (5, BChInput(conn, None, b))]
    out = q_graded_bismut_chern(inputs, 3, shift=Fraction(-1, 8))
    assert set(out[0].terms) == {Fraction(-1, 8), Fraction(7, 8)}
    with pytest.raises(AlgebraMismatch):
        q_graded_bismut_chern([(0, BChInput(conn, None, b)),
                               (1, BChInput(conn, None, GrassMat(ExtAlgebra(3), 1, {0b11: np.eye(1)})))], 3)


def test_bch_input_validation():
    alg, conn = alg_and_connection()
    with pytest.raises(DimMismatch):
        BChInput(conn, [GrassMat.zero(alg, 2)] * conn.K)
    with pytest.raises(DimMismatch):
        BChInput(conn, [GrassMat.zero(alg, 3)] * (conn.K - 1))
    with pytest.raises(AlgebraMismatch):
        BChInput(conn, [GrassMat.zero(alg, 3)] * conn.K, GrassMat.zero(ExtAlgebra(3), 3))
    with pytest.raises(AlgebraMismatch):
        BChInput(conn, None, GrassMat(alg, 3, {0b11: np.diag([1.0, 2.0, 3.0])}))


def test_bch_json_round_trip(rng):
    alg, conn = alg_and_connection()
    curv = [GrassMat(alg, 3, {0b11: rng.normal(size=(3, 3)) + 1j}) for _ in range(conn.K)]
    inp = BChInput(conn, curv, GrassMat(alg, 3, {0: 0.1 * np.eye(3), 0b11: 0.2 * np.eye(3)}))
    back = BChInput.from_json(json.loads(json.dumps(inp.to_json())))
    assert scalar_max_diff(bismut_chern(back), bismut_chern(inp)) == 0
    with pytest.raises(ValidationError):
        BChInput.from_json(dict(inp.to_json(), curvature=[{"0,1": [[1, 0]]}] * conn.K))


@pytest.mark.parametrize("rep", ["S00", "S01", "S10", "S11"])
def test_restriction_two_paths(rep):
    alg = ExtAlgebra(3)
    R = [GrassMat(alg, 1, {0b011: np.array([[0.3]]), 0b110: np.array([[0.1j]])}),
         GrassMat(alg, 1, {0b101: np.array([[-0.2]])})]
    r = ech_restriction_check(rep, [0.1 + 0.02j, 0.27], 1j * np.log(10) / (2 * np.pi), R, Fraction(3, 2))
    assert r["deviation"] < 1e-10


def test_restriction_cutoff_sequence_shrinks():
    alg = ExtAlgebra(2)
    R = [GrassMat(alg, 1, {0b11: np.array([[0.3]])})]
    seq = ech_cutoff_sequence("S10", [0.2], 1j * np.log(10) / (2 * np.pi), R, [1, 2, 3])
    incs = [s["increment"] for s in seq[1:]]
    assert incs[1] < incs[0]
    with pytest.raises(DimMismatch):
        ech_restriction_check("S10", [0.2, 0.1], 1j, R, 1)


@settings(max_examples=10)
@given(st.floats(-1, 1), st.floats(-1, 1))
def test_exp_linear_property(a, b):
    ring = FormalRing(2, 4)
    lhs = ring.exp_linear([a, 0]) * ring.exp_linear([0, b])
    assert lhs.max_abs_diff(ring.exp_linear([a, b])) < 1e-13
