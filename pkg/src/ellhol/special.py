"""Jacobi theta functions, Dedekind eta, Eisenstein series and their modular laws.

Conventions
-----------
* ``theta_char(a, b, z, tau)`` is the characteristic series
  ``sum_n exp(pi i (n+a)^2 tau + 2 pi i (n+a)(z+b))``.
* ``theta(i, j, z, tau)`` is the half-characteristic function normalized by its
  product expansion in ``xi = 2 pi i z``.  For ``(i, j) != (1, 1)`` this is exactly
  ``theta_char(i/2, j/2, z, tau)``; for the odd function the product expansion
  ``q^(1/8) (e^(xi/2) - e^(-xi/2)) prod(...)`` equals ``-i * theta_char(1/2, 1/2)``,
  and the library uses the product normalization throughout
  (``q^(-1/12) theta_11 / eta -> 2i sin(pi z)``).
* Every fractional power of ``q`` is ``exp(2 pi i r tau)``; this is what makes the
  T-transformation phases (``e^(pi i/6)`` for ``theta_11/eta``) come out.
* ``eisenstein_G(k)`` is ``-B_k/(2k) + sum sigma_{k-1}(n) q^n``, so
  ``q d/dq log eta = -G_2``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import NonConvergent

TWO_PI_I = 2j * math.pi
_REL_TAIL = 1e-17
_MIN_TERMS = 8
_MAX_TERMS = 200_000

# theta_sum(i, j) = THETA_SUM_PHASE[(i, j)] * theta_char(i/2, j/2)
THETA_SUM_PHASE = {(0, 0): 1.0, (0, 1): 1.0, (1, 0): 1.0, (1, 1): -1j}


@dataclass(frozen=True)
class ThetaChar:
    a: float
    b: float

    @classmethod
    def standard(cls, i: int, j: int) -> ThetaChar:
        _check_bits(i, j)
        return cls(i / 2, j / 2)


@dataclass(frozen=True)
class SpinStructure:
    """Spin structure on the elliptic curve, labelled like the representation ``S_ij``.

    ``(1, 1)`` is the odd spin structure (trivial square root of the canonical
    bundle, ``dbar`` on functions).  The associated flat twist is the
    characteristic ``((1-i)/2, (1-j)/2)``, i.e. the 2-torsion point
    ``((1-j) + (1-i) tau) / 2``.
    """

    i: int
    j: int

    def __post_init__(self):
        _check_bits(self.i, self.j)

    @property
    def is_odd(self) -> bool:
        return self.i == 1 and self.j == 1

    @property
    def twist(self) -> tuple[int, int]:
        return (1 - self.i, 1 - self.j)

    @classmethod
    def parse(cls, s: str) -> SpinStructure:
        s = s.strip()
        if len(s) != 2 or any(ch not in "01" for ch in s):
            raise ValueError(f"spin structure must be two bits like '11', got {s!r}")
        return cls(int(s[0]), int(s[1]))


@dataclass(frozen=True)
class EisensteinVal:
    k: int
    value: complex
    convention: str = "G_k = (k-1)!/(2(2 pi i)^k) E_k = -B_k/(2k) + sum sigma_{k-1}(n) q^n"


def _check_bits(i, j):
    if i not in (0, 1) or j not in (0, 1):
        raise ValueError(f"theta indices must be bits, got ({i}, {j})")


def _check_tau(tau: complex) -> complex:
    tau = complex(tau)
    if not tau.imag > 0:
        raise NonConvergent(f"Im(tau) must be positive, got tau = {tau}")
    return tau


def qpow(r: float, tau: complex) -> complex:
    """``q**r`` as ``exp(2 pi i r tau)``."""
    return cmath.exp(TWO_PI_I * r * tau)


# ---------------------------------------------------------------------------
# theta: sum form
# ---------------------------------------------------------------------------
def _sum_window(a: float, z: complex, tau: complex) -> np.ndarray:
    # |term| = exp(-pi y (n + a + Im z / y)^2 + const): Gaussian around the centre
    y = tau.imag
    centre = -a - z.imag / y
    half = math.sqrt(math.log(1.0 / _REL_TAIL) / (math.pi * y)) + 2.0
    half = max(half, _MIN_TERMS)
    if half > _MAX_TERMS:
        raise NonConvergent(f"theta series needs more than {_MAX_TERMS} terms at tau = {tau}")
    lo = math.floor(centre - half)
    hi = math.ceil(centre + half)
    return np.arange(lo, hi + 1, dtype=float)


_QUARTER_TURNS = np.array([1, 1j, -1, -1j])


def _char_phase(nu: np.ndarray, b: float) -> np.ndarray:
    """``exp(2 pi i nu b)``, exact when ``4 nu b`` is an integer."""
    k = 4 * nu * b
    kr = np.round(k)
    exact = np.abs(k - kr) == 0
    out = np.exp(2j * math.pi * nu * b)
    out[exact] = _QUARTER_TURNS[kr[exact].astype(int) % 4]
    return out


def theta_char(a: float, b: float, z: complex, tau: complex) -> complex:
    """Theta function with real characteristics ``(a, b)`` by direct summation.

    The summation window is centred on the largest term and extends until the
    Gaussian tail drops below ``1e-17`` of it (at least 8 terms per side).  For
    half-integral ``a`` the terms at ``nu`` and ``-nu`` are added pairwise first,
    so odd cases vanish exactly at ``z = 0``.
    """
    tau = _check_tau(tau)
    z = complex(z)
    nu = _sum_window(a, z, tau) + a
    terms = np.exp(math.pi * 1j * nu * nu * tau + TWO_PI_I * nu * z) * _char_phase(nu, b)
    if float(2 * a).is_integer():
        key = np.round(2 * nu).astype(np.int64)
        pos = {int(k): idx for idx, k in enumerate(key)}
        paired, used = [], set()
        for idx, k in enumerate(key):
            if idx in used:
                continue
            jdx = pos.get(-int(k))
            if jdx is not None and jdx != idx and jdx not in used:
                paired.append(terms[idx] + terms[jdx])
                used.update((idx, jdx))
            else:
                paired.append(terms[idx])
                used.add(idx)
        terms = np.array(paired)
    # add small terms first
    order = np.argsort(np.abs(terms))
    return complex(np.sum(terms[order]))


def theta_sum(i: int, j: int, z: complex, tau: complex) -> complex:
    """``theta_ij`` evaluated from the characteristic series (library normalization)."""
    _check_bits(i, j)
    return THETA_SUM_PHASE[(i, j)] * theta_char(i / 2, j / 2, z, tau)


# ---------------------------------------------------------------------------
# theta: product form
# ---------------------------------------------------------------------------
def _product_terms(q_abs: float, growth: float, offset: float) -> int:
    """Number of factors so that ``|q|^(n - offset) * growth`` is below the tail target."""
    if q_abs == 0.0:
        return _MIN_TERMS
    target = _REL_TAIL * (1.0 - q_abs)
    n = (math.log(target) - math.log(growth)) / math.log(q_abs) + offset
    n = max(_MIN_TERMS, int(math.ceil(n)) + 1)
    if n > _MAX_TERMS:
        raise NonConvergent(f"product expansion needs more than {_MAX_TERMS} factors (|q| = {q_abs})")
    return n


def theta_product(i: int, j: int, z: complex, tau: complex) -> complex:
    """``theta_ij(z, tau)`` from its triple-product expansion in ``xi = 2 pi i z``."""
    _check_bits(i, j)
    tau = _check_tau(tau)
    z = complex(z)
    xi = TWO_PI_I * z
    q_abs = math.exp(-2 * math.pi * tau.imag)
    growth = math.exp(abs(xi.real))
    two_cosh = cmath.exp(xi) + cmath.exp(-xi)
    if i == 1:
        N = _product_terms(q_abs, growth, 0.0)
        n = np.arange(1, N + 1, dtype=float)
        qn = np.exp(TWO_PI_I * n * tau)
        sign = -1.0 if j == 1 else 1.0
        factors = (1.0 - qn) * (1.0 + sign * qn * two_cosh + qn * qn)
        half = cmath.exp(xi / 2)
        half_inv = cmath.exp(-xi / 2)
        pre = qpow(1 / 8, tau) * (half - half_inv if j == 1 else half + half_inv)
    else:
        N = _product_terms(q_abs, growth, 0.5)
        n = np.arange(1, N + 1, dtype=float)
        qn = np.exp(TWO_PI_I * n * tau)
        qh = np.exp(TWO_PI_I * (n - 0.5) * tau)
        sign = -1.0 if j == 1 else 1.0
        factors = (1.0 - qn) * (1.0 + sign * qh * two_cosh + qh * qh)
        pre = 1.0
    return complex(pre * np.prod(factors))


def theta(i: int, j: int, z: complex, tau: complex) -> complex:
    """Library ``theta_ij``; evaluated through the product expansion."""
    return theta_product(i, j, z, tau)


# ---------------------------------------------------------------------------
# eta and Eisenstein series
# ---------------------------------------------------------------------------
def eta(tau: complex) -> complex:
    """Dedekind eta ``q^(1/24) prod_{n>=1} (1 - q^n)``."""
    tau = _check_tau(tau)
    q_abs = math.exp(-2 * math.pi * tau.imag)
    N = _product_terms(q_abs, 1.0, 0.0)
    n = np.arange(1, N + 1, dtype=float)
    return complex(qpow(1 / 24, tau) * np.prod(1.0 - np.exp(TWO_PI_I * n * tau)))


@lru_cache(maxsize=64)
def _divisor_sums(power: int, N: int) -> np.ndarray:
    sig = np.zeros(N + 1)
    for d in range(1, N + 1):
        sig[d::d] += float(d) ** power
    return sig


@lru_cache(maxsize=None)
def bernoulli_fraction(k: int) -> Fraction:
    """Exact ``B_k`` (``B_1 = -1/2``) by the Akiyama-Tanigawa recurrence."""
    a = [Fraction(0)] * (k + 1)
    for m in range(k + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
    return -a[0] if k == 1 else a[0]


def bernoulli_number(k: int) -> float:
    return float(bernoulli_fraction(k))


def eisenstein_G(k: int, tau: complex, N: int | None = None) -> complex:
    """Normalized Eisenstein series ``G_k = -B_k/(2k) + sum_{n<=N} sigma_{k-1}(n) q^n``.

    For ``k = 2`` this is the value of the conditionally convergent lattice sum
    taken in the order "inner sum over n, outer over m" (times the normalizing
    constant ``1/(2 (2 pi i)^2)``).
    """
    if k < 2 or k % 2:
        raise ValueError(f"k must be an even integer >= 2, got {k}")
    tau = _check_tau(tau)
    q_abs = math.exp(-2 * math.pi * tau.imag)
    if N is None:
        # sigma_{k-1}(n) <= zeta(k-1)-ish * n^(k-1); bound n^k |q|^n by the tail target
        N = _MIN_TERMS
        while N <= _MAX_TERMS and (N ** k) * q_abs ** N > _REL_TAIL * (1 - q_abs):
            N += 1
        if N > _MAX_TERMS:
            raise NonConvergent(f"Eisenstein series needs more than {_MAX_TERMS} terms")
    sig = _divisor_sums(k - 1, N)[1:]
    n = np.arange(1, N + 1, dtype=float)
    qn = np.exp(TWO_PI_I * n * tau)
    const = -bernoulli_number(k) / (2 * k)
    return complex(const + np.sum((sig * qn)[::-1]))


def eisenstein(k: int, tau: complex, N: int | None = None) -> EisensteinVal:
    return EisensteinVal(k, eisenstein_G(k, tau, N))


def g2_hat(tau: complex) -> complex:
    """Non-holomorphic completion of ``G_2`` transforming with exact weight 2.

    With the q-expansion normalization of :func:`eisenstein_G` the completion is
    ``G_2 + 1/(8 pi Im tau)``.
    """
    tau = _check_tau(tau)
    return eisenstein_G(2, tau) + 1.0 / (8 * math.pi * tau.imag)


def g2_quasimodular_defect(tau: complex) -> complex:
    """``G_2(-1/tau) - tau^2 G_2(tau)``; equals ``-tau/(4 pi i)`` for this normalization."""
    tau = _check_tau(tau)
    return eisenstein_G(2, -1 / tau) - tau * tau * eisenstein_G(2, tau)


def dG2_dtau(tau: complex) -> complex:
    """``d G_2 / d tau`` from Ramanujan's identity ``q dG_2/dq = -2 G_2^2 + (5/6) G_4``."""
    g2 = eisenstein_G(2, tau)
    g4 = eisenstein_G(4, tau)
    return TWO_PI_I * (-2 * g2 * g2 + (5 / 6) * g4)


# ---------------------------------------------------------------------------
# heat operators
# ---------------------------------------------------------------------------
def _second_diff_z(f, z, tau, h):
    return (f(z + h, tau) - 2 * f(z, tau) + f(z - h, tau)) / (h * h)


def _first_diff_tau(f, z, tau, h):
    return (f(z, tau + h) - f(z, tau - h)) / (2 * h)


def _first_diff_z(f, z, tau, h):
    return (f(z + h, tau) - f(z - h, tau)) / (2 * h)


def _check_step(tau, h):
    tau = _check_tau(tau)
    if not tau.imag > h:
        raise ValueError(f"step h = {h} must be smaller than Im(tau) = {tau.imag}")
    return tau


def heat_residual(i: int, j: int, z: complex, tau: complex, h: float = 1e-3) -> complex:
    """``(d/dtau - (1/(4 pi i)) d^2/dz^2) theta_ij`` by central differences; O(h^2)."""
    tau = _check_step(tau, h)
    f = lambda zz, tt: theta(i, j, zz, tt)
    return _first_diff_tau(f, z, tau, h) - _second_diff_z(f, z, tau, h) / (4j * math.pi)


def theta_over_eta3(i: int, j: int, z: complex, tau: complex) -> complex:
    return theta(i, j, z, tau) / eta(tau) ** 3


def modified_heat_residual(i: int, j: int, z: complex, tau: complex, h: float = 1e-3) -> complex:
    """Modified heat operator applied to ``theta_ij / eta^3``.

    The operator is ``d/dtau - 3 (2 pi i) G_2 - (1/(4 pi i)) d^2/dz^2``: the
    ``-3 G_2`` shift is the one belonging to ``q d/dq = (2 pi i)^(-1) d/dtau``.
    """
    tau = _check_step(tau, h)
    f = lambda zz, tt: theta_over_eta3(i, j, zz, tt)
    g2 = eisenstein_G(2, tau)
    return (_first_diff_tau(f, z, tau, h) - 3 * TWO_PI_I * g2 * f(z, tau)
            - _second_diff_z(f, z, tau, h) / (4j * math.pi))


def conjugated_heat_coefficients(tau: complex) -> tuple[complex, complex, complex]:
    """``(C1, C2, C3)`` of ``e^{c z^2} o D_hat o e^{-c z^2} = D + C1 z d/dz + C2 z^2 + C3``.

    Here ``c = 4 pi^2 G_2(tau)``; the coefficients are polynomials in ``G_2, G_4``
    (``dG_2/dtau`` is eliminated with Ramanujan's identity).
    """
    g2 = eisenstein_G(2, tau)
    beta = 1 / (4j * math.pi)
    alpha = 3 * TWO_PI_I
    c = 4 * math.pi ** 2 * g2
    c_tau = 4 * math.pi ** 2 * dG2_dtau(tau)
    return 4 * beta * c, -c_tau - 4 * beta * c * c, 2 * beta * c - alpha * g2


def conjugated_heat_residual(z: complex, tau: complex, h: float = 1e-3) -> complex:
    """Conjugated operator applied to ``e^{4 pi^2 G_2 z^2} theta_11 / eta^3``."""
    tau = _check_step(tau, h)

    def f(zz, tt):
        return cmath.exp(4 * math.pi ** 2 * eisenstein_G(2, tt) * zz * zz) * theta_over_eta3(1, 1, zz, tt)

    c1, c2, c3 = conjugated_heat_coefficients(tau)
    val = f(z, tau)
    plain = _first_diff_tau(f, z, tau, h) - _second_diff_z(f, z, tau, h) / (4j * math.pi)
    return plain + c1 * z * _first_diff_z(f, z, tau, h) + c2 * z * z * val + c3 * val


def log_eta_derivative_residual(tau: complex, h: float = 1e-3) -> complex:
    """``q d/dq log eta + G_2`` with a fourth-order central difference in tau."""
    tau = _check_step(tau, 2 * h)
    e0 = eta(tau)
    d = (-eta(tau + 2 * h) + 8 * eta(tau + h) - 8 * eta(tau - h) + eta(tau - 2 * h)) / (12 * h)
    return d / (e0 * TWO_PI_I) + eisenstein_G(2, tau)


# ---------------------------------------------------------------------------
# modular transformations
# ---------------------------------------------------------------------------
def completed_witten_factor(z: complex, tau: complex) -> complex:
    """``exp(4 pi^2 G_2 z^2) * z * eta^3 / theta_11``: SL2(Z)-invariant in ``(z, tau)``.

    In the Chern-root variable ``x = 2 pi i z`` the exponent reads ``-G_2 x^2``.
    """
    z = complex(z)
    if z == 0:
        return eta(tau) ** 3 / (TWO_PI_I * eta(tau) ** 3)
    return cmath.exp(4 * math.pi ** 2 * eisenstein_G(2, tau) * z * z) * z * eta(tau) ** 3 / theta(1, 1, z, tau)


_TARGETS = {
    "theta11_over_eta": lambda z, t: theta(1, 1, z, t) / eta(t),
    "theta11_over_eta3": lambda z, t: theta(1, 1, z, t) / eta(t) ** 3,
    "completed_series": completed_witten_factor,
}


def _multiplier(which: str, target: str, z: complex, tau: complex) -> complex:
    if which == "T":
        return {"theta11_over_eta": cmath.exp(1j * math.pi / 6),
                "theta11_over_eta3": 1.0,
                "completed_series": 1.0}[target]
    phase = cmath.exp(1j * math.pi * z * z / tau)
    return {"theta11_over_eta": -1j * phase,
            "theta11_over_eta3": phase / tau,
            "completed_series": 1.0}[target]


def modular_check(which: str, target: str, z: complex, tau: complex) -> tuple[complex, complex, float]:
    """Compare ``target`` at the transformed point with the stated transformation law.

    ``which`` is ``"T"`` (``(z, tau) -> (z, tau + 1)``) or ``"S"``
    (``(z, tau) -> (z/tau, -1/tau)``).  Returns ``(lhs, rhs, |lhs - rhs|)``.
    """
    if which not in ("T", "S"):
        raise ValueError(f"which must be 'T' or 'S', got {which!r}")
    if target not in _TARGETS:
        raise ValueError(f"unknown target {target!r}; choose from {sorted(_TARGETS)}")
    tau = _check_tau(tau)
    z = complex(z)
    f = _TARGETS[target]
    if which == "T":
        lhs = f(z, tau + 1)
    else:
        lhs = f(z / tau, -1 / tau)
    rhs = _multiplier(which, target, z, tau) * f(z, tau)
    return lhs, rhs, abs(lhs - rhs)


def eta_transform_check(which: str, tau: complex) -> tuple[complex, complex, float]:
    """``eta(tau+1) = e^{pi i/12} eta(tau)`` and ``eta(-1/tau) = sqrt(-i tau) eta(tau)``."""
    tau = _check_tau(tau)
    if which == "T":
        lhs, rhs = eta(tau + 1), cmath.exp(1j * math.pi / 12) * eta(tau)
    elif which == "S":
        lhs, rhs = eta(-1 / tau), cmath.sqrt(-1j * tau) * eta(tau)
    else:
        raise ValueError(f"which must be 'T' or 'S', got {which!r}")
    return lhs, rhs, abs(lhs - rhs)


def g2_transform_check(which: str, tau: complex) -> tuple[complex, complex, float]:
    """``G_2(tau+1) = G_2(tau)``; ``G_2(-1/tau) = tau^2 G_2(tau) - tau/(4 pi i)``."""
    tau = _check_tau(tau)
    if which == "T":
        lhs, rhs = eisenstein_G(2, tau + 1), eisenstein_G(2, tau)
    elif which == "S":
        lhs = eisenstein_G(2, -1 / tau)
        rhs = tau * tau * eisenstein_G(2, tau) - tau / (4j * math.pi)
    else:
        raise ValueError(f"which must be 'T' or 'S', got {which!r}")
    return lhs, rhs, abs(lhs - rhs)


def g2_hat_transform_check(which: str, tau: complex) -> tuple[complex, complex, float]:
    tau = _check_tau(tau)
    if which == "T":
        lhs, rhs = g2_hat(tau + 1), g2_hat(tau)
    elif which == "S":
        lhs, rhs = g2_hat(-1 / tau), tau * tau * g2_hat(tau)
    else:
        raise ValueError(f"which must be 'T' or 'S', got {which!r}")
    return lhs, rhs, abs(lhs - rhs)
