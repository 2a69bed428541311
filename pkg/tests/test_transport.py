import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from ellhol.cli import fixture_path
from ellhol.errors import DefectiveMonodromy, NotSpecialOrthogonal, ValidationError
from ellhol.transport import (GaugeTransform, LoopConnection, Monodromy, aw_check, cartan_block, check_membership,
                              chirality, continuous_angle_lift, floquet_reduce, gamma_matrices, oriented_angles,
                              parallel_transport, random_smooth_loop, spin_rep, spin_supertrace,
                              supertrace_from_angles, zeta_pfaffian_circle)


def rotation(theta):
    return np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])


def test_zero_connection_gives_identity():
    c = LoopConnection(3, "gl", np.zeros((16, 3, 3)))
    assert np.array_equal(parallel_transport(c).hol, np.eye(3))


def test_constant_connection_is_exponential(rng):
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    hol = parallel_transport(LoopConnection.constant(A, 256)).hol
    assert np.max(np.abs(hol - expm(A))) < 1e-10


def fine_reference(f, n, K=8192):
    return parallel_transport(LoopConnection.from_function(f, K)).hol


def test_fourth_order_convergence():
    rng = np.random.default_rng(3)
    B = [rng.normal(size=(3, 3)) for _ in range(3)]

    def f(t):
        return B[0] + np.cos(2 * np.pi * t) * B[1] + np.sin(4 * np.pi * t) * B[2]

    ref = fine_reference(f, 3)
    errs = [np.max(np.abs(parallel_transport(LoopConnection.from_function(f, K)).hol - ref)) for K in (32, 64, 128)]
    r1, r2 = errs[0] / errs[1], errs[1] / errs[2]
    assert 12 < r1 < 20 and 12 < r2 < 20


def test_floquet_constant():
    A = cartan_block([0.3, -1.1]) + 0.0
    K0, res = floquet_reduce(LoopConnection.constant(A, 32, "so"))
    assert np.max(np.abs(K0 - A)) < 1e-10 and res < 1e-10


def test_floquet_rotation_eigenvalues():
    a = 0.3
    K0, _ = floquet_reduce(LoopConnection.constant(cartan_block([2 * np.pi * a]), 32, "so"))
    ev = np.sort(np.linalg.eigvals(K0).imag)
    assert np.allclose(ev, [-2 * np.pi * a, 2 * np.pi * a], atol=1e-10)


def test_floquet_defective():
    mono = Monodromy(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(DefectiveMonodromy):
        floquet_reduce(mono)


def test_gamma_and_chirality():
    for n in (1, 2, 3):
        g = gamma_matrices(n)
        d = 2 ** n
        for a in range(2 * n):
            for b in range(2 * n):
                anti = g[a] @ g[b] + g[b] @ g[a]
                assert np.allclose(anti, 2 * (a == b) * np.eye(d))
        G = chirality(n)
        assert np.allclose(G @ G, np.eye(d))
        assert all(np.allclose(G @ x, -x @ G) for x in g)


def test_spin_rep_is_lie_homomorphism(rng):
    X, Y = (rng.normal(size=(6, 6)) for _ in range(2))
    A, B = X - X.T, Y - Y.T
    lhs = spin_rep(A @ B - B @ A)
    rhs = spin_rep(A) @ spin_rep(B) - spin_rep(B) @ spin_rep(A)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_supertrace_single_rotation():
    assert spin_supertrace(np.eye(4)) == 0
    theta = 1.1
    assert abs(spin_supertrace(rotation(theta)) - 2j * math.sin(theta / 2)) < 1e-14
    assert abs(supertrace_from_angles(np.array([theta])) - 2j * math.sin(theta / 2)) < 1e-15


def test_pfaffian_trivial_factor():
    conn = LoopConnection.constant(cartan_block([0.0, 2 * np.pi * 0.3]), 32, "so")
    assert abs(zeta_pfaffian_circle(conn)) < 1e-14


def test_pfaffian_constant_blocks():
    a = np.array([0.15, 0.4])
    conn = LoopConnection.constant(cartan_block(2 * np.pi * a), 32, "so")
    assert abs(zeta_pfaffian_circle(conn) - np.prod(2j * np.sin(np.pi * a))) < 1e-12


def test_aw_zero_connection():
    r = aw_check(LoopConnection(4, "so", np.zeros((16, 4, 4))))
    assert r["lhs"] == 0 and r["rhs"] == 0 and r["absdiff"] == 0


def test_aw_constant_cartan():
    a = np.array([0.2, 0.35])
    expected = (2j) ** 2 * np.sin(0.2 * np.pi) * np.sin(0.35 * np.pi)
    r = aw_check(LoopConnection.constant(cartan_block(2 * np.pi * a), 64, "so"))
    assert abs(r["lhs"] - expected) < 1e-12 and abs(r["rhs"] - expected) < 1e-12


def test_aw_gauge_transformed_cartan():
    a = np.array([0.2, 0.35])
    expected = (2j) ** 2 * np.sin(0.2 * np.pi) * np.sin(0.35 * np.pi)
    conn = GaugeTransform.random(4, np.random.default_rng(5)).apply(
        LoopConnection.constant(cartan_block(2 * np.pi * a), 512, "so"))
    r = aw_check(conn)
    assert abs(r["lhs"] - expected) < 1e-7 and abs(r["rhs"] - expected) < 1e-7


def test_aw_beyond_half_turn():
    # rotation numbers past 1/2: the continued angles differ from the principal ones
    a = np.array([0.7, 1.2])
    r = aw_check(LoopConnection.constant(cartan_block(2 * np.pi * a), 64, "so"))
    assert abs(r["rhs"] - np.prod(2j * np.sin(np.pi * a))) < 1e-12
    assert r["absdiff"] < 1e-12


def test_aw_large_loops_regression():
    # amplitude 1.5 drives angles through 0 and pi at nearby parameters
    rng = np.random.default_rng(0)
    for _ in range(50):
        random_smooth_loop(4, 512, rng, scale=1.5)
    loops = [random_smooth_loop(6, 512, rng, scale=1.5) for _ in range(32)]
    for k in (6, 9, 31):
        assert aw_check(loops[k])["absdiff"] < 1e-7


@settings(max_examples=8)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([4, 6]))
def test_aw_property(seed, n):
    conn = random_smooth_loop(n, 128, np.random.default_rng(seed))
    r = aw_check(conn)
    assert r["absdiff"] < 1e-7
    assert abs(r["norm_sq"] - r["det_I_minus_hol"]) < 1e-9


@settings(max_examples=5)
@given(st.integers(0, 2 ** 32 - 1))
def test_gauge_invariance_property(seed):
    rng = np.random.default_rng(seed)
    conn = random_smooth_loop(4, 512, rng)
    base = spin_supertrace(parallel_transport(conn, spin=True))
    g = GaugeTransform.random(4, rng)
    assert abs(spin_supertrace(parallel_transport(g.apply(conn), spin=True)) - base) < 1e-7


def test_oriented_angles_known():
    R = np.zeros((4, 4))
    R[:2, :2], R[2:, 2:] = rotation(0.4), rotation(-1.3)
    th = oriented_angles(R)
    # determined up to permutation and an even number of sign flips
    assert np.allclose(sorted(th), [-1.3, 0.4]) or np.allclose(sorted(th), [-0.4, 1.3])
    P = np.eye(4)[[1, 0, 2, 3]] @ np.diag([1, 1, 1, 1])
    P[0] *= -1  # an SO(4) change of basis
    th2 = oriented_angles(P @ R @ P.T)
    assert abs(supertrace_from_angles(th2) - supertrace_from_angles(th)) < 1e-12


def test_continuation_from_zero():
    theta, svals = continuous_angle_lift(LoopConnection.constant(cartan_block([0.5, 2.0]), 32, "so"))
    assert svals[0] == 0 and svals[-1] == 1
    assert np.allclose(sorted(np.abs(theta)), [0.5, 2.0])


def test_validation():
    X = np.random.default_rng(1).normal(size=(16, 4, 4))
    with pytest.raises(ValidationError):
        LoopConnection(4, "so", X)
    with pytest.raises(ValidationError):
        LoopConnection(4, "gl", X[:8])
    with pytest.raises(ValidationError):
        check_membership(X, "u")
    with pytest.raises(NotSpecialOrthogonal):
        spin_supertrace(np.diag([1.0, 1.0, 1.0, -1.0]))
    with pytest.raises(ValidationError):
        parallel_transport(LoopConnection(3, "so", X[:, :3, :3] - X[:, :3, :3].transpose(0, 2, 1)), spin=True)


def test_json_round_trip(rng):
    conn = random_smooth_loop(4, 32, rng)
    back = LoopConnection.from_json(json.loads(json.dumps(conn.to_json())))
    assert np.array_equal(back.samples, conn.samples) and back.algebra == "so"
    with pytest.raises(ValidationError):
        LoopConnection.from_json({"n": 4, "algebra": "so"})


def test_bundled_fixture():
    path = fixture_path("so4_smooth.json")
    obj = json.loads(path.read_text())
    conn = LoopConnection.from_json(obj)
    expected = complex(*obj["metadata"]["expected_supertrace"])
    r = aw_check(conn)
    assert r["absdiff"] < 1e-7
    assert abs(r["lhs"] - expected) < 1e-7
    assert np.allclose(sorted(r["angle_data"]["rotation_numbers"]), obj["metadata"]["rotation_numbers"], atol=1e-7)
