import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from ellhol.errors import NonConvergent
from ellhol.special import (SpinStructure, ThetaChar, bernoulli_number, completed_witten_factor,
                            conjugated_heat_residual, dG2_dtau, eisenstein, eisenstein_G, eta,
                            eta_transform_check, g2_hat, g2_hat_transform_check, g2_quasimodular_defect,
                            g2_transform_check, heat_residual, log_eta_derivative_residual, modified_heat_residual,
                            modular_check, theta, theta_char, theta_product, theta_sum)

# mpmath's jtheta(n, pi z, exp(i pi tau)); the odd function carries a factor i
MP_INDEX = {(0, 0): (3, 1), (0, 1): (4, 1), (1, 0): (2, 1), (1, 1): (1, 1j)}
IJ = [(0, 0), (0, 1), (1, 0), (1, 1)]


def mp_theta(i, j, z, tau):
    n, c = MP_INDEX[(i, j)]
    return c * complex(mp.jtheta(n, mp.pi * z, mp.exp(1j * mp.pi * tau)))


def mp_eta(tau):
    return complex(mp.exp(1j * mp.pi * tau / 12) * mp.qp(mp.exp(2j * mp.pi * tau)))


def lattice_G(k, tau, M=60):
    """G_k from Sum'_(m,n) (m tau + n)^(-k), inner sum over n in closed form.

    Sum_n (w + n)^-2 = pi^2 / sin^2(pi w) and its derivatives give the inner
    sums; the outer sum over m is absolutely convergent for Im tau > 0.
    """
    mp.mp.dps = 30
    tau = mp.mpc(tau)
    E = 2 * mp.zeta(k)
    for m in range(1, M):
        # Sum_n (m tau + n)^-k = (-1)^k/(k-1)! d^(k-2)/dw^(k-2) [pi^2/sin^2(pi w)] at w = m tau
        f = lambda w: mp.pi ** 2 / mp.sin(mp.pi * w) ** 2
        inner = mp.diff(f, m * tau, k - 2) * (-1) ** k / mp.factorial(k - 1)
        E += 2 * inner
    G = mp.factorial(k - 1) / (2 * (2j * mp.pi) ** k) * E
    mp.mp.dps = 15
    return complex(G)


taus = st.builds(complex, st.floats(-0.5, 0.5), st.floats(0.3, 2.0))
zs = st.builds(complex, st.floats(-0.5, 0.5), st.floats(-0.3, 0.3))


@pytest.mark.parametrize("ij", IJ)
@pytest.mark.parametrize("z,tau", [(0.23 + 0.1j, 0.2 + 0.9j), (0.0, 1j), (-0.41 - 0.2j, -0.35 + 0.5j)])
def test_theta_matches_mpmath(ij, z, tau):
    ref = mp_theta(*ij, z, tau)
    assert abs(theta(*ij, z, tau) - ref) <= 1e-13 * max(1, abs(ref))
    assert abs(theta_sum(*ij, z, tau) - ref) <= 1e-13 * max(1, abs(ref))


@given(zs, taus)
def test_sum_equals_product(z, tau):
    for i, j in IJ:
        s, p = theta_sum(i, j, z, tau), theta_product(i, j, z, tau)
        assert abs(s - p) <= 1e-12 * max(1, abs(s))


def test_theta11_vanishes_at_origin():
    for tau in (2j, 0.3 + 0.7j, -0.5 + 0.2j):
        assert theta_char(0.5, 0.5, 0, tau) == 0
        assert theta(1, 1, 0, tau) == 0


def test_theta00_tends_to_one():
    assert abs(theta(0, 0, 0.1, 12j) - 1) < 1e-15


def test_theta10_product_at_i():
    q = cmath.exp(-2 * math.pi)
    p = 2 * q ** 0.125
    for n in range(1, 40):
        p *= (1 - q ** n) * (1 + q ** n) ** 2
    assert abs(theta(1, 0, 0, 1j) - p) < 1e-12
    assert abs(theta_char(0.5, 0, 0, 1j) - p) < 1e-12


@given(zs, taus)
def test_half_period_shift(z, tau):
    assert abs(theta(0, 1, z, tau) - theta(0, 0, z + 0.5, tau)) <= 1e-12 * max(1, abs(theta(0, 1, z, tau)))


@given(zs, taus)
def test_theta11_odd_others_even(z, tau):
    for i, j in IJ:
        s = -1 if (i, j) == (1, 1) else 1
        a, b = theta(i, j, -z, tau), s * theta(i, j, z, tau)
        assert abs(a - b) <= 1e-12 * max(1, abs(a))


def test_theta00_constant_frozen():
    # theta_00(0, i) = pi^(1/4) / Gamma(3/4)
    assert abs(theta(0, 0, 0, 1j) - 1.0864348112133080146) < 1e-15


def test_eta_at_i():
    closed = math.gamma(0.25) / (2 * math.pi ** 0.75)
    assert abs(eta(1j) - closed) < 1e-15
    assert abs(eta(1j) - 0.76822542232605665) < 1e-15


@given(taus)
def test_eta_matches_mpmath(tau):
    assert abs(eta(tau) - mp_eta(tau)) < 1e-13


def test_eta_transforms():
    lhs, rhs, _ = eta_transform_check("T", 1.3j)
    assert abs(lhs - rhs) < 1e-12
    for tau in (1j, 0.2 + 0.8j, -0.4 + 1.3j):
        assert eta_transform_check("S", tau)[2] < 1e-10


@pytest.mark.parametrize("k", [4, 6])
@pytest.mark.parametrize("tau", [1j, 0.2 + 1.1j, -0.3 + 0.9j])
def test_eisenstein_lattice_oracle(k, tau):
    assert abs(eisenstein_G(k, tau) - lattice_G(k, tau)) < 1e-12


@pytest.mark.parametrize("tau", [1j, 0.2 + 1.1j, -0.3 + 0.9j])
def test_g2_lattice_oracle(tau):
    # Eisenstein summation order: inner sum over n, then over m
    assert abs(eisenstein_G(2, tau) - lattice_G(2, tau)) < 1e-12


def test_eisenstein_constant_terms():
    assert bernoulli_number(2) == pytest.approx(1 / 6)
    # deep in the cusp only the constant term survives
    assert abs(eisenstein_G(2, 20j) + 1 / 24) < 1e-15
    assert abs(eisenstein_G(4, 20j) - 1 / 240) < 1e-15
    assert eisenstein(4, 1j).k == 4


def test_g2_at_i_frozen():
    assert abs(eisenstein_G(2, 1j) + 1 / (8 * math.pi)) < 1e-15


def test_g2_quasimodular_law():
    tau = 0.2 + 1j
    assert abs(eisenstein_G(2, -1 / tau) - tau ** 2 * eisenstein_G(2, tau) + tau / (4j * math.pi)) < 1e-9
    assert g2_transform_check("S", tau)[2] < 1e-12
    assert g2_transform_check("T", tau)[2] < 1e-14
    assert abs(g2_quasimodular_defect(tau) - (-tau / (4j * math.pi))) < 1e-12


def test_g2_hat():
    # the completion vanishes at the fixed point of S, so Ghat - G = 1/(8 pi) there
    assert abs(g2_hat(1j)) < 1e-15
    assert abs(g2_hat(1j) - eisenstein_G(2, 1j) - 1 / (8 * math.pi)) < 1e-15
    for tau in (1j, 0.3 + 0.7j, -0.45 + 1.6j):
        assert g2_hat_transform_check("S", tau)[2] < 1e-12


def test_ramanujan_derivative():
    tau, h = 0.1 + 1.2j, 1e-4
    fd = (eisenstein_G(2, tau + h) - eisenstein_G(2, tau - h)) / (2 * h)
    assert abs(fd - dG2_dtau(tau)) < 1e-7


@pytest.mark.parametrize("ij", IJ)
def test_heat_residuals(ij):
    assert abs(heat_residual(*ij, 0.2, 1.5j)) < 1e-5
    assert abs(modified_heat_residual(*ij, 0.2, 1.4j)) < 1e-5


def test_heat_residual_odd_point_exact():
    for tau in (1j, 0.4 + 0.6j):
        assert heat_residual(1, 1, 0, tau) == 0


def test_heat_richardson_second_order():
    r1 = abs(heat_residual(0, 0, 0.2 + 0.05j, 1.5j, 1e-3))
    r2 = abs(heat_residual(0, 0, 0.2 + 0.05j, 1.5j, 5e-4))
    assert 3.5 < r1 / r2 < 4.5


def test_log_eta_and_conjugated_operator():
    assert abs(log_eta_derivative_residual(0.1 + 1.1j)) < 1e-8
    assert abs(conjugated_heat_residual(0.2, 1.4j)) < 1e-5


def test_modular_multipliers():
    z, tau = 0.17 + 0.05j, 0.1 + 1.2j
    for which in ("T", "S"):
        for target in ("theta11_over_eta", "theta11_over_eta3", "completed_series"):
            lhs, rhs, d = modular_check(which, target, z, tau)
            assert d < 1e-10 * max(1, abs(rhs)), (which, target)


def test_completed_factor_sign():
    # the invariant combination carries exp(+4 pi^2 G_2 z^2); the opposite sign is not invariant
    z, tau = 0.2 + 0.1j, 0.1 + 1.1j

    def minus(z, tau):
        return cmath.exp(-4 * math.pi ** 2 * eisenstein_G(2, tau) * z * z) * z * eta(tau) ** 3 / theta(1, 1, z, tau)

    assert abs(completed_witten_factor(z / tau, -1 / tau) - completed_witten_factor(z, tau)) < 1e-12
    assert abs(minus(z / tau, -1 / tau) - minus(z, tau)) > 1e-2


def test_theta11_derivative_normalization():
    # with the product normalization theta_11'(0) = 2 pi i eta^3
    h = 1e-5
    for tau in (1j, 0.3 + 0.9j):
        d = (theta(1, 1, h, tau) - theta(1, 1, -h, tau)) / (2 * h)
        assert abs(d / eta(tau) ** 3 - 2j * math.pi) < 1e-8


def test_spin_structures():
    s = SpinStructure.parse("11")
    assert s.is_odd and s.twist == (0, 0)
    assert SpinStructure.parse("01").twist == (1, 0)
    assert ThetaChar.standard(1, 0) == ThetaChar(0.5, 0.0)
    with pytest.raises(ValueError):
        SpinStructure.parse("21")


def test_domain_errors():
    with pytest.raises(ValueError):
        theta(0, 0, 0.1, -1j)
    with pytest.raises(ValueError):
        theta(2, 0, 0.1, 1j)
    with pytest.raises(ValueError):
        eisenstein_G(3, 1j)


def test_nonconvergent_near_real_axis():
    with pytest.raises(NonConvergent):
        eta(0.1 + 1e-9j)


def test_mpmath_oracle_is_independent():
    # sanity check of the oracle itself against a classical value
    assert abs(mp_theta(0, 0, 0, 1j) - 1.0864348112133080146) < 1e-15
    assert np.isfinite(lattice_G(2, 1j))


def test_bernoulli_exact():
    from fractions import Fraction
    from ellhol.special import bernoulli_fraction
    assert [bernoulli_fraction(k) for k in (2, 4, 6, 12)] == [Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42),
                                                              Fraction(-691, 2730)]
