"""Level-one characters of the loop group of Spin(2l).

The four virtual level-one representations are labelled like spin structures:

====  ===============  =====================  ==================
tag   combination      theta factor           Fock sector
====  ===============  =====================  ==================
S00   S_+ + S_-        theta_00 / eta         NS, all states
S01   S_+ - S_-        theta_01 / eta         NS, graded by (-1)^F
S10   S^+ + S^-        theta_10 / eta         R, all states
S11   S^+ - S^-        theta_11 / eta         R, graded by chirality
====  ===============  =====================  ==================

``char_level_one(rep, z, tau) = prod_k theta_ij(z_k, tau) / eta(tau)`` equals
``q^m * Tr(q^(L_0) e^(2 pi i z))`` where ``m = modular_anomaly(rep, l)``; hence
the integer Fock dimensions are the coefficients of ``q^(-m) * char_qexpansion``.
"""
from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import InvalidRank, NotInWeylGroup, TruncationTooSmall
from .qseries import QSeries
from .special import eta, theta

TAGS = ("S00", "S01", "S10", "S11")
TAG_INDEX = {"S00": (0, 0), "S01": (0, 1), "S10": (1, 0), "S11": (1, 1)}
SECTORS = ("NS_even", "NS_odd", "R_plus", "R_minus")


@dataclass(frozen=True)
class DRootData:
    """Root data of ``so(2l)`` in the orthonormal ``e_i`` basis."""

    l: int
    level: int = 1

    def __post_init__(self):
        if self.l < 1:
            raise InvalidRank(f"rank must be >= 1, got {self.l}")

    @property
    def dual_coxeter(self) -> int:
        return 2 * self.l - 2

    @property
    def dim(self) -> int:
        return self.l * (2 * self.l - 1)

    @property
    def rho(self) -> tuple[int, ...]:
        return tuple(range(self.l - 1, -1, -1))

    @property
    def central_charge(self) -> Fraction:
        return Fraction(self.level * self.dim, self.level + self.dual_coxeter)

    def roots(self) -> list[tuple[int, ...]]:
        out = []
        for i, j in itertools.combinations(range(self.l), 2):
            for si, sj in itertools.product((1, -1), repeat=2):
                v = [0] * self.l
                v[i], v[j] = si, sj
                out.append(tuple(v))
        return out

    def vector_weights(self) -> list[tuple[int, ...]]:
        out = []
        for i in range(self.l):
            for s in (1, -1):
                v = [0] * self.l
                v[i] = s
                out.append(tuple(v))
        return out

    def spinor_weights(self, chirality: int = 0) -> list[tuple[Fraction, ...]]:
        """Half-spin weights; ``chirality=+1`` keeps an even number of minus signs, ``-1`` odd, ``0`` both."""
        half = Fraction(1, 2)
        out = []
        for signs in itertools.product((1, -1), repeat=self.l):
            odd = sum(s < 0 for s in signs) % 2
            if chirality == 1 and odd or chirality == -1 and not odd:
                continue
            out.append(tuple(s * half for s in signs))
        return out


def _check_tag(rep: str) -> tuple[int, int]:
    if rep not in TAG_INDEX:
        raise ValueError(f"unknown representation tag {rep!r}; choose from {TAGS}")
    return TAG_INDEX[rep]


def _cartan(z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if z.ndim != 1 or z.size == 0:
        raise ValueError("Cartan point must be a non-empty vector")
    return z


# ---------------------------------------------------------------------------
# characters
# ---------------------------------------------------------------------------
def char_level_one(rep: str, z: Sequence[complex], tau: complex) -> complex:
    """``prod_k theta_ij(z_k, tau) / eta(tau)`` for the tag's ``(i, j)``."""
    i, j = _check_tag(rep)
    z = _cartan(z)
    e = eta(tau)
    out = 1.0 + 0j
    for zk in z:
        out *= theta(i, j, complex(zk), tau) / e
    return out


def anomaly_for_weight(weight: Sequence, l: int, level: int = 1) -> Fraction:
    """``m = <w + 2 rho, w> / (2 (k + h)) - c/24`` for a dominant weight ``w``."""
    rd = DRootData(l, level)
    w = [Fraction(x) for x in weight]
    if len(w) != l:
        raise ValueError(f"weight must have {l} coordinates")
    num = sum((wi + 2 * ri) * wi for wi, ri in zip(w, rd.rho))
    return num / (2 * (level + rd.dual_coxeter)) - rd.central_charge / 24


def modular_anomaly(rep: str, l: int) -> Fraction:
    """Anomaly exponent of the family the tag is built on.

    NS tags (``S00``, ``S01``) use the vacuum, R tags (``S10``, ``S11``) a
    half-spin highest weight; the values are ``-l/24`` and ``l/12``.
    """
    _check_tag(rep)
    if l < 1:
        raise InvalidRank(f"rank must be >= 1, got {l}")
    if rep in ("S00", "S01"):
        return anomaly_for_weight([0] * l, l)
    return anomaly_for_weight([Fraction(1, 2)] * l, l)


def _poly_mul_binomial(arr: np.ndarray, c: complex, k: int) -> None:
    """In place ``arr *= (1 + c x^k)`` on a truncated coefficient array."""
    if k < arr.size:
        arr[k:] = arr[k:] + c * arr[:-k].copy()


def _factor_expansion(i: int, j: int, zk: complex, size: int) -> np.ndarray:
    """Coefficients (step 1/2, relative to the prefactor) of one ``theta_ij(zk)/eta`` factor."""
    arr = np.zeros(size, dtype=complex)
    u = np.exp(2j * np.pi * zk)
    sign = -1.0 if j == 1 else 1.0
    if i == 1:
        h = np.exp(1j * np.pi * zk)
        arr[0] = h + sign / h
        for n in range(1, (size + 1) // 2 + 1):
            _poly_mul_binomial(arr, sign * u, 2 * n)
            _poly_mul_binomial(arr, sign / u, 2 * n)
    else:
        arr[0] = 1.0
        for n in range(1, (size + 1) // 2 + 1):
            _poly_mul_binomial(arr, sign * u, 2 * n - 1)
            _poly_mul_binomial(arr, sign / u, 2 * n - 1)
    return arr


def factor_prefactor(rep: str) -> Fraction:
    """Leading q-exponent of one ``theta_ij / eta`` factor."""
    i, _ = _check_tag(rep)
    return (Fraction(1, 8) if i == 1 else Fraction(0)) - Fraction(1, 24)


def char_qexpansion(rep: str, z: Sequence[complex], T) -> QSeries:
    """q-expansion of the theta-product character at a fixed Cartan point.

    ``T`` is the absolute truncation order: the result holds every exponent
    ``< T`` exactly (up to floating point in the ``e^(2 pi i z)`` coefficients).
    """
    i, j = _check_tag(rep)
    T = Fraction(T)
    if T <= 0:
        raise TruncationTooSmall(f"truncation order must be positive, got {T}")
    z = _cartan(z)
    shift = len(z) * factor_prefactor(rep)
    rel = T - shift
    if rel <= 0:
        return QSeries.zero(T)
    size = int(np.ceil(2 * rel))
    total = np.zeros(size, dtype=complex)
    total[0] = 1.0
    for zk in z:
        f = _factor_expansion(i, j, complex(zk), size)
        total = np.convolve(total, f)[:size]
    terms = {shift + Fraction(k, 2): c for k, c in enumerate(total) if shift + Fraction(k, 2) < T}
    return QSeries(terms, T)


# ---------------------------------------------------------------------------
# Fock space oracle
# ---------------------------------------------------------------------------
def _check_sector(sector: str):
    if sector not in SECTORS:
        raise ValueError(f"unknown sector {sector!r}; choose from {SECTORS}")


@lru_cache(maxsize=128)
def _parity_counts(l: int, half_units: int, ns: bool) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Counts of even/odd fermion-number states of 2l real fermions, indexed by 2*energy."""
    even = [0] * half_units
    odd = [0] * half_units
    even[0] = 1
    first, step = (1, 2) if ns else (2, 2)
    for r2 in range(first, half_units, step):
        for _ in range(2 * l):
            ne, no = even[:], odd[:]
            for k in range(r2, half_units):
                ne[k] += odd[k - r2]
                no[k] += even[k - r2]
            even, odd = ne, no
    for v in even + odd:
        if v >= 2**63:
            raise OverflowError("Fock dimension exceeds 64-bit range")
    return tuple(even), tuple(odd)


def fock_energy_dims(sector: str, l: int, T) -> list[tuple[Fraction, int]]:
    """Dimensions of the energy-graded pieces of a free-fermion sector below energy ``T``.

    2l real fermions; NS modes sit at energies ``1/2, 3/2, ...``, R modes at
    ``1, 2, ...`` on top of a ``2^l``-dimensional ground space split evenly into
    the two chiralities.  Energies are relative to the sector's ground state.
    The chirality of an R state is the ground chirality times ``(-1)^F`` of
    the non-zero modes.
    """
    _check_sector(sector)
    if l < 1:
        raise InvalidRank(f"rank must be >= 1, got {l}")
    T = Fraction(T)
    if T <= 0:
        raise TruncationTooSmall(f"truncation order must be positive, got {T}")
    half_units = int(np.ceil(2 * T))
    ns = sector.startswith("NS")
    even, odd = _parity_counts(l, half_units, ns)
    if sector == "NS_even":
        dims = even
    elif sector == "NS_odd":
        dims = odd
    else:
        # S^+ x even + S^- x odd, and vice versa: both give 2^(l-1) * total
        g = 2 ** (l - 1)
        dims = tuple(g * (a + b) for a, b in zip(even, odd))
    step = 1 if ns else 2
    return [(Fraction(k, 2), dims[k]) for k in range(0, half_units, step) if Fraction(k, 2) < T]


def tag_fock_combination(rep: str) -> dict[str, int]:
    """Signed combination of Fock sectors whose graded dimension is the tag's character at z=0."""
    _check_tag(rep)
    return {"S00": {"NS_even": 1, "NS_odd": 1},
            "S01": {"NS_even": 1, "NS_odd": -1},
            "S10": {"R_plus": 1, "R_minus": 1},
            "S11": {"R_plus": 1, "R_minus": -1}}[rep]


def fock_signed_dims(rep: str, l: int, T) -> dict[Fraction, int]:
    out: dict[Fraction, int] = defaultdict(int)
    for sector, sign in tag_fock_combination(rep).items():
        for e, d in fock_energy_dims(sector, l, T):
            out[e] += sign * d
    return dict(out)


def fock_weight_multiplicities(sector: str, l: int, T) -> dict[Fraction, dict[tuple, int]]:
    """Weight multiplicities of each energy level of a Fock sector, by exact enumeration.

    Weights are tuples of :class:`~fractions.Fraction` in the ``e_i`` basis.  The
    l complex fermions ``psi_k^(+-)`` carry weights ``+-e_k``.
    """
    _check_sector(sector)
    T = Fraction(T)
    if T <= 0:
        raise TruncationTooSmall(f"truncation order must be positive, got {T}")
    ns = sector.startswith("NS")
    half_units = int(np.ceil(2 * T))
    # state: (2*energy, weight, parity) -> count
    states = defaultdict(int)
    zero = tuple(Fraction(0) for _ in range(l))
    states[(0, zero, 0)] = 1
    first = 1 if ns else 2
    for r2 in range(first, half_units, 2):
        for k in range(l):
            for s in (1, -1):
                new = defaultdict(int, states)
                for (e, w, p), c in states.items():
                    if e + r2 < half_units:
                        w2 = list(w)
                        w2[k] += s
                        new[(e + r2, tuple(w2), 1 - p)] += c
                states = new
    out: dict[Fraction, dict[tuple, int]] = defaultdict(lambda: defaultdict(int))
    if ns:
        want = 0 if sector == "NS_even" else 1
        for (e, w, p), c in states.items():
            if p == want:
                out[Fraction(e, 2)][w] += c
    else:
        rd = DRootData(l)
        target = 1 if sector == "R_plus" else -1
        for ground_chi in (1, -1):
            for g in rd.spinor_weights(ground_chi):
                for (e, w, p), c in states.items():
                    chi = ground_chi * (-1) ** p
                    if chi == target:
                        out[Fraction(e, 2)][tuple(a + b for a, b in zip(g, w))] += c
    return {e: dict(v) for e, v in sorted(out.items())}


def fock_character(rep: str, z: Sequence[complex], T) -> QSeries:
    """``q^m * sum_n Tr_{H_n} e^(2 pi i z)`` from the Fock weight enumeration (oracle path)."""
    z = _cartan(z)
    l = len(z)
    m = modular_anomaly(rep, l)
    T = Fraction(T)
    terms: dict[Fraction, complex] = defaultdict(complex)
    for sector, sign in tag_fock_combination(rep).items():
        for e, wts in fock_weight_multiplicities(sector, l, T - m).items():
            for w, c in wts.items():
                terms[e + m] += sign * c * np.exp(2j * np.pi * sum(float(a) * b for a, b in zip(w, z)))
    return QSeries(terms, T)


# ---------------------------------------------------------------------------
# Weyl group
# ---------------------------------------------------------------------------
def apply_signed_permutation(w: Sequence[int], z: Sequence[complex]) -> np.ndarray:
    """``(w.z)_k = sign(w_k) * z_(|w_k| - 1)``; ``w`` lists signed 1-based indices."""
    z = _cartan(z)
    w = list(w)
    if sorted(abs(x) for x in w) != list(range(1, len(z) + 1)):
        raise ValueError(f"{w} is not a signed permutation of 1..{len(z)}")
    return np.array([np.sign(x) * z[abs(x) - 1] for x in w], dtype=complex)


def weyl_check(rep: str, z: Sequence[complex], tau: complex, w: Sequence[int], strict: bool = True) -> float:
    """``|chi(w.z) - chi(z)|`` for a signed permutation ``w``.

    ``W(D_l)`` allows only an even number of sign flips; with ``strict`` an odd
    count raises :class:`NotInWeylGroup`, otherwise the difference is returned
    unasserted.
    """
    flips = sum(1 for x in w if x < 0)
    if strict and flips % 2:
        raise NotInWeylGroup(f"{list(w)} has {flips} sign flips; W(D_l) needs an even number")
    wz = apply_signed_permutation(w, z)
    return abs(char_level_one(rep, wz, tau) - char_level_one(rep, z, tau))
