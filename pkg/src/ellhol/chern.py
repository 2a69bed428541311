"""Chern-root series, the Witten genus and Bismut-Chern iterated integrals.

Formal Chern roots ``x_k`` sit where ``2 pi i z_k`` sits in the theta functions:
a weight ``mu`` contributes ``exp(mu . x)``, and the Witten series of one root is
``x / (theta_11 / eta^3)`` expanded in that variable.  With this convention the
series starts ``1 + G_2 x^2 + ...`` and ``exp(-G_2 x^2) * W(x)`` is invariant under
``(x, tau) -> (x/tau, -1/tau)``.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .affine import (_check_tag, factor_prefactor, fock_weight_multiplicities, modular_anomaly,
                     tag_fock_combination)
from .errors import AlgebraMismatch, DimMismatch, TruncationTooSmall, ValidationError
from .grassmann import (ExtAlgebra, GrassMat, GrassmannScalar, from_first_block_column, g_exp, g_str,
                        indices_from_mask, mask_from_indices,
                        left_regular)
from .qseries import QSeries
from .special import eta, qpow
from .transport import LoopConnection, transport_samples


# ---------------------------------------------------------------------------
# truncated multivariate power series
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class FormalRing:
    """Power series in ``r`` variables with every monomial of total degree ``> D`` dropped."""

    r: int
    D: int

    def __post_init__(self):
        if self.r < 1 or self.D < 0:
            raise ValueError("need r >= 1 variables and a degree cap D >= 0")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.D + 1,) * self.r

    def mask(self) -> np.ndarray:
        return np.add.reduce(np.indices(self.shape), axis=0) <= self.D

    def zero(self) -> FormalSeries:
        return FormalSeries(self, np.zeros(self.shape, dtype=complex))

    def const(self, c: complex) -> FormalSeries:
        a = np.zeros(self.shape, dtype=complex)
        a[(0,) * self.r] = c
        return FormalSeries(self, a)

    def one(self) -> FormalSeries:
        return self.const(1.0)

    def var(self, i: int) -> FormalSeries:
        return self.univariate([0, 1], i)

    def univariate(self, coeffs: Sequence[complex], i: int) -> FormalSeries:
        """Series ``sum_k coeffs[k] x_i^k``."""
        a = np.zeros(self.shape, dtype=complex)
        c = np.asarray(coeffs, dtype=complex)[: self.D + 1]
        idx = [0] * self.r
        idx[i] = slice(0, c.size)
        a[tuple(idx)] = c
        return FormalSeries(self, a)

    def exp_linear(self, c: Sequence[complex]) -> FormalSeries:
        """``exp(sum_i c_i x_i)``."""
        out = self.one()
        k = np.arange(self.D + 1)
        fact = np.array([math.factorial(int(j)) for j in k], dtype=float)
        for i, ci in enumerate(c):
            if ci != 0:
                out = out * self.univariate(complex(ci) ** k / fact, i)
        return out


class FormalSeries:
    __slots__ = ("ring", "coeffs")

    def __init__(self, ring: FormalRing, coeffs: np.ndarray):
        self.ring = ring
        self.coeffs = np.where(ring.mask(), coeffs, 0)

    def _check(self, other: FormalSeries):
        if self.ring != other.ring:
            raise ValueError(f"formal rings differ: {self.ring} vs {other.ring}")

    def __add__(self, other):
        if not isinstance(other, FormalSeries):
            return self + self.ring.const(other)
        self._check(other)
        return FormalSeries(self.ring, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __neg__(self):
        return FormalSeries(self.ring, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, FormalSeries):
            return FormalSeries(self.ring, self.coeffs * other)
        self._check(other)
        D = self.ring.D
        out = np.zeros(self.ring.shape, dtype=complex)
        for idx in zip(*np.nonzero(self.coeffs)):
            deg = sum(idx)
            if deg > D:
                continue
            src = tuple(slice(0, D + 1 - i) for i in idx)
            dst = tuple(slice(i, D + 1) for i in idx)
            out[dst] += self.coeffs[idx] * other.coeffs[src]
        return FormalSeries(self.ring, out)

    def __rmul__(self, c):
        return self * c

    def constant_term(self) -> complex:
        return complex(self.coeffs[(0,) * self.ring.r])

    def coefficient(self, exponents: Sequence[int]) -> complex:
        return complex(self.coeffs[tuple(exponents)])

    def inverse(self) -> FormalSeries:
        """``1/s`` for a series with nonzero constant term."""
        c = self.constant_term()
        if c == 0:
            raise ZeroDivisionError("series has zero constant term")
        u = self * (1 / c) - 1.0
        out = self.ring.one()
        term = self.ring.one()
        for _ in range(self.ring.D):
            term = term * (-u)
            out = out + term
        return out * (1 / c)

    def exp(self) -> FormalSeries:
        c = self.constant_term()
        u = self - c
        out = self.ring.one()
        term = self.ring.one()
        for k in range(1, self.ring.D + 1):
            term = term * u * (1.0 / k)
            out = out + term
        return out * np.exp(c)

    def divide_by_monomial(self, exponents: Sequence[int], ring: FormalRing) -> FormalSeries:
        """Exact division by ``prod x_i^e_i`` into a ring of lower cap ``ring``."""
        sl = tuple(slice(e, e + ring.D + 1) for e in exponents)
        chunk = self.coeffs[sl]
        pad = [(0, ring.D + 1 - s) for s in chunk.shape]
        return FormalSeries(ring, np.pad(chunk, pad))

    def max_abs_diff(self, other: FormalSeries) -> float:
        self._check(other)
        return float(np.max(np.abs(self.coeffs - other.coeffs)))

    def substitute_scale(self, s: complex) -> FormalSeries:
        """``f(s x)``: multiply degree-k coefficients by ``s^k``."""
        deg = np.add.reduce(np.indices(self.ring.shape), axis=0)
        return FormalSeries(self.ring, self.coeffs * (complex(s) ** deg))

    def __repr__(self):
        return f"FormalSeries(r={self.ring.r}, D={self.ring.D}, const={self.constant_term():.6g})"


# ---------------------------------------------------------------------------
# Chern characters
# ---------------------------------------------------------------------------
def chern_character(weights: Sequence[tuple[Sequence, int]], ring: FormalRing) -> FormalSeries:
    """``sum_mu m_mu exp(mu . x)``."""
    out = ring.zero()
    for mu, mult in weights:
        if len(mu) != ring.r:
            raise ValueError(f"weight {tuple(mu)} does not have {ring.r} coordinates")
        out = out + ring.exp_linear([complex(float(m)) for m in mu]) * mult
    return out


def _laurent_mul(a: dict, b: dict) -> dict:
    out: dict = defaultdict(int)
    for ka, va in a.items():
        for kb, vb in b.items():
            out[tuple(x + y for x, y in zip(ka, kb))] += va * vb
    return {k: v for k, v in out.items() if v}


def _factor_laurent(i: int, j: int, k: int, l: int, size: int) -> list[dict]:
    """One ``theta_ij(x_k)/eta`` factor: per half-unit of q, an integer Laurent polynomial.

    Keys are exponent vectors of ``e^(x/2)`` (so ``e^(x_k)`` is ``2`` in slot ``k``).
    """
    unit = tuple(0 for _ in range(l))

    def mono(p):
        v = [0] * l
        v[k] = p
        return tuple(v)

    sign = -1 if j == 1 else 1
    series = [dict() for _ in range(size)]
    if i == 1:
        series[0] = {mono(1): 1, mono(-1): sign}
        first = 2
    else:
        series[0] = {unit: 1}
        first = 1
    for r2 in range(first, size, 2):
        for p in (2, -2):
            new = [dict(s) for s in series]
            for e in range(size - r2):
                for key, v in series[e].items():
                    key2 = tuple(a + b for a, b in zip(key, mono(p)))
                    new[e + r2][key2] = new[e + r2].get(key2, 0) + sign * v
            series = [{kk: vv for kk, vv in s.items() if vv} for s in new]
    return series


def q_graded_laurent(rep: str, l: int, T) -> tuple[Fraction, list[dict]]:
    """Theta-product character with exact integer Laurent-polynomial coefficients.

    Returns ``(shift, rows)``: ``rows[k]`` is the coefficient of ``q^(shift + k/2)``.
    """
    i, j = _check_tag(rep)
    T = Fraction(T)
    if T <= 0:
        raise TruncationTooSmall(f"truncation order must be positive, got {T}")
    shift = l * factor_prefactor(rep)
    size = max(int(math.ceil(2 * (T - shift))), 0)
    total = [dict() for _ in range(size)]
    if size:
        total[0] = {tuple(0 for _ in range(l)): 1}
    for k in range(l):
        f = _factor_laurent(i, j, k, l, size)
        new = [dict() for _ in range(size)]
        for a in range(size):
            if not total[a]:
                continue
            for b in range(size - a):
                if f[b]:
                    prod = _laurent_mul(total[a], f[b])
                    for key, v in prod.items():
                        new[a + b][key] = new[a + b].get(key, 0) + v
        total = [{kk: vv for kk, vv in s.items() if vv} for s in new]
    return shift, total


def q_graded_chern(rep: str, ring: FormalRing, T) -> dict[Fraction, FormalSeries]:
    """Theta-product character with ``e^(2 pi i z_k)`` replaced by ``e^(x_k)``.

    Keys are absolute q-exponents below ``T``; the anomaly ``q^m`` is included
    because the theta product carries it.
    """
    shift, rows = q_graded_laurent(rep, ring.r, T)
    cache: dict = {}
    out = {}
    for k, row in enumerate(rows):
        e = shift + Fraction(k, 2)
        if not row or e >= Fraction(T):
            continue
        s = ring.zero()
        for key, v in row.items():
            if key not in cache:
                cache[key] = ring.exp_linear([p / 2 for p in key])
            s = s + cache[key] * v
        out[e] = s
    return out


def q_graded_chern_anomaly_free(rep: str, ring: FormalRing, T) -> dict[Fraction, FormalSeries]:
    """``sum_n Ch(H_n) q^n``: exponents shifted by ``-m``."""
    m = modular_anomaly(rep, ring.r)
    return {e - m: s for e, s in q_graded_chern(rep, ring, Fraction(T) + m).items()}


def evaluate_q(series: dict[Fraction, FormalSeries], tau: complex) -> FormalSeries:
    it = iter(series.items())
    e, s = next(it)
    total = s * qpow(float(e), tau)
    for e, s in it:
        total = total + s * qpow(float(e), tau)
    return total


# ---------------------------------------------------------------------------
# Witten genus and A-hat
# ---------------------------------------------------------------------------
def theta11_taylor(tau: complex, K: int) -> np.ndarray:
    """Coefficients ``a_k`` of ``theta_11 = sum_k a_k x^k`` in the root variable ``x = 2 pi i z``.

    ``a_k = 2 sum_(n>=0) (-1)^n q^((n+1/2)^2 / 2) (n+1/2)^k / k!`` for odd ``k`` and 0 for even
    ``k``: the termwise derivatives of the series form.
    """
    tau = complex(tau)
    y = tau.imag
    M = int(math.ceil(math.sqrt((45 + 2 * K) / (math.pi * y)))) + 2 * K + 8
    nu = np.arange(M) + 0.5
    base = np.exp(1j * math.pi * nu * nu * tau) * np.where(np.arange(M) % 2 == 0, 1.0, -1.0)
    out = np.zeros(K + 1, dtype=complex)
    for k in range(1, K + 1, 2):
        terms = 2 * base * nu ** k / math.factorial(k)
        out[k] = np.sum(terms[::-1])
    return out


def witten_root_series(tau: complex, D: int) -> np.ndarray:
    """Univariate ``x / (theta_11(x) / eta^3)`` to degree ``D``."""
    a = theta11_taylor(tau, D + 1) / eta(tau) ** 3
    b = a[1:]  # theta/(x eta^3)
    ring = FormalRing(1, D)
    inv = ring.univariate(b, 0).inverse()
    return inv.coeffs.copy()


def witten_series(ring: FormalRing, tau: complex) -> FormalSeries:
    """``prod_i x_i / (theta_11(x_i) / eta^3)``."""
    w = witten_root_series(tau, ring.D)
    out = ring.one()
    for i in range(ring.r):
        out = out * ring.univariate(w, i)
    return out


def completed_witten_series(ring: FormalRing, tau: complex, g2: complex | None = None) -> FormalSeries:
    """``exp(-G_2 sum x_i^2) * witten_series``."""
    from .special import eisenstein_G

    g2 = eisenstein_G(2, tau) if g2 is None else g2
    quad = ring.zero()
    for i in range(ring.r):
        quad = quad + ring.univariate([0, 0, -g2], i)
    return quad.exp() * witten_series(ring, tau)


def a_hat_series(ring: FormalRing) -> FormalSeries:
    """``prod_i (x_i/2) / sinh(x_i/2)``."""
    D = ring.D
    s = [0.0] * (D + 1)
    for k in range(0, D + 1, 2):
        s[k] = 0.5 ** k / math.factorial(k + 1)
    uni = FormalRing(1, D).univariate(s, 0).inverse().coeffs
    out = ring.one()
    for i in range(ring.r):
        out = out * ring.univariate(uni, i)
    return out


def localization_identity_check(l: int, tau: complex, D: int, eta_power: int | None = None,
                                T: int | None = None) -> dict:
    """Witten series rebuilt from the q-graded Chern character of ``S^+ - S^-``.

    ``q^m Ch(S^+ - S^-)_q / eta^(2l) = prod theta_11(x_i)/eta^3``; dividing by
    ``prod x_i`` and inverting must give :func:`witten_series`.  ``eta_power``
    overrides ``2l`` (negative control).
    """
    tau = complex(tau)
    eta_power = 2 * l if eta_power is None else eta_power
    if T is None:
        q_abs = math.exp(-2 * math.pi * tau.imag)
        T = max(4, int(math.ceil(40 * math.log(10) / -math.log(q_abs))) + 1)
    big = FormalRing(l, D + l)
    chern = q_graded_chern("S11", big, T)
    lhs = evaluate_q(chern, tau) * (1 / eta(tau) ** eta_power)
    ring = FormalRing(l, D)
    unit = lhs.divide_by_monomial([1] * l, ring)
    rebuilt = unit.inverse()
    target = witten_series(ring, tau)
    return {"l": l, "tau": tau, "D": D, "eta_power": eta_power, "T": T,
            "deviation": rebuilt.max_abs_diff(target),
            "provenance": {"lhs": "theta-product Laurent expansion -> formal exponentials",
                           "rhs": "termwise theta_11 derivatives / eta^3, inverted"}}


# ---------------------------------------------------------------------------
# Bismut-Chern iterated integrals
# ---------------------------------------------------------------------------
@dataclass
class BChInput:
    """Degree-0 loop, even curvature samples and an optional central B-field."""

    conn: LoopConnection
    curvature: list[GrassMat] | None = None
    bfield: GrassMat | list[GrassMat] | None = None
    algebra: ExtAlgebra | None = None

    def __post_init__(self):
        alg = self.algebra
        samples = list(self.curvature or [])
        b = self.bfield
        bl = b if isinstance(b, list) else ([b] if b is not None else [])
        for s in samples + bl:
            if alg is None:
                alg = s.algebra
            if s.algebra != alg:
                raise AlgebraMismatch("all Grassmann samples must share one algebra")
            if s.dim != self.conn.n:
                raise DimMismatch(f"sample of size {s.dim} for a connection of size {self.conn.n}")
        if alg is None:
            alg = ExtAlgebra(0)
        self.algebra = alg
        if samples and len(samples) != self.conn.K:
            raise DimMismatch(f"{len(samples)} curvature samples for {self.conn.K} connection samples")
        if isinstance(b, list) and len(b) != self.conn.K:
            raise DimMismatch(f"{len(b)} B-field samples for {self.conn.K} connection samples")
        for s in bl:
            for M in s.coeffs.values():
                if np.max(np.abs(M - M[0, 0] * np.eye(s.dim))) > 1e-14:
                    raise AlgebraMismatch("B-field coefficients must be scalar multiples of the identity")

    def generator_samples(self) -> list[GrassMat]:
        K, n, alg = self.conn.K, self.conn.n, self.algebra
        out = []
        for k in range(K):
            y = GrassMat.scalar(alg, n, self.conn.samples[k])
            if self.curvature:
                y = y + self.curvature[k]
            if self.bfield is not None:
                y = y + (self.bfield[k] if isinstance(self.bfield, list) else self.bfield)
            out.append(y)
        return out

    def conjugated(self, g: np.ndarray) -> BChInput:
        curv = [c.conjugate_by(g) for c in self.curvature] if self.curvature else None
        return BChInput(self.conn.conjugated(g), curv, self.bfield, self.algebra)

    def to_json(self) -> dict:
        obj = self.conn.to_json()
        obj["generators"] = self.algebra.g
        if self.curvature:
            obj["curvature"] = [_grass_to_json(c) for c in self.curvature]
        if self.bfield is not None:
            b = self.bfield
            obj["bfield"] = [_grass_to_json(x) for x in b] if isinstance(b, list) else _grass_to_json(b)
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> BChInput:
        conn = LoopConnection.from_json(obj)
        try:
            alg = ExtAlgebra(int(obj.get("generators", 0)))
            curv = [_grass_from_json(alg, conn.n, c) for c in obj["curvature"]] if "curvature" in obj else None
            b = obj.get("bfield")
            if isinstance(b, list):
                b = [_grass_from_json(alg, conn.n, x) for x in b]
            elif b is not None:
                b = _grass_from_json(alg, conn.n, b)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed BChInput: {exc}") from exc
        return cls(conn, curv, b, alg)

    @classmethod
    def load(cls, path) -> BChInput:
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def _grass_to_json(a: GrassMat) -> dict:
    # keys are comma-separated generator indices, values row-major [re, im] pairs
    return {",".join(map(str, indices_from_mask(S))): [[float(v.real), float(v.imag)] for v in M.ravel()]
            for S, M in sorted(a.coeffs.items())}


def _grass_from_json(alg: ExtAlgebra, d: int, obj: dict) -> GrassMat:
    coeffs = {}
    for key, vals in obj.items():
        S = mask_from_indices(int(k) for k in key.split(",") if k.strip())
        raw = np.asarray(vals, dtype=float)
        if raw.shape != (d * d, 2):
            raise ValidationError(f"coefficient {key!r} must hold {d * d} [re, im] pairs")
        coeffs[S] = (raw[:, 0] + 1j * raw[:, 1]).reshape(d, d)
    return GrassMat(alg, d, coeffs)


def grassmann_transport(samples: Sequence[GrassMat]) -> GrassMat:
    """``psi(1)`` for ``psi' = Y(t) psi`` in the Grassmann-matrix algebra (regular representation)."""
    alg, d = samples[0].algebra, samples[0].dim
    big = np.array([left_regular(s) for s in samples])
    hol = transport_samples(big)
    return from_first_block_column(alg, hol[:, :d], d)


def bismut_chern(inp: BChInput, grading=None) -> GrassmannScalar:
    """(Super)trace of the transport of ``d/dt - (A + R + B)`` around the loop."""
    return g_str(grassmann_transport(inp.generator_samples()), grading)


def q_graded_bismut_chern(inputs: Sequence[tuple[int, BChInput]], T, shift=0, grading=None) -> dict[int, QSeries]:
    """``sum_n q^(n + shift) BCh(H_n)`` as a map ``subset -> QSeries``."""
    T = Fraction(T)
    shift = Fraction(shift)
    algs = {inp.algebra for _, inp in inputs}
    if len(algs) > 1:
        raise AlgebraMismatch("all energy levels must share one exterior algebra")
    terms: dict[int, dict] = defaultdict(dict)
    for n, inp in inputs:
        e = Fraction(n) + shift
        if e >= T:
            continue
        for S, v in bismut_chern(inp, grading).items():
            terms[S][e] = terms[S].get(e, 0) + v
    return {S: QSeries(t, T) for S, t in terms.items()}


# ---------------------------------------------------------------------------
# restriction to y-constant loops on an energy-truncated module
# ---------------------------------------------------------------------------
def energy_truncated_states(rep: str, l: int, N) -> list[tuple[Fraction, tuple, int]]:
    """``(energy, weight, sign)`` for every state of energy ``<= N`` (signed for virtual tags)."""
    out = []
    for sector, sign in tag_fock_combination(rep).items():
        for e, wts in fock_weight_multiplicities(sector, l, Fraction(N) + Fraction(1, 4)).items():
            if e > N:
                continue
            for w, mult in wts.items():
                out.extend([(e, w, sign)] * mult)
    return out


def ech_restriction_check(rep: str, z: Sequence[complex], tau: complex, R: Sequence[GrassMat], N,
                          K: int = 16) -> dict:
    """Two evaluations of ``sum_(n<=N) q^n Str_(H_n) exp(2 pi i n tau + K + R)``.

    (a) transport of the constant connection ``tau d + K + R`` on the truncated
    module, ``d`` acting by ``2 pi i n``, ``K`` by ``2 pi i mu(z)`` and ``R`` by
    ``sum_j mu_j R_j`` (``R_j`` scalar even Grassmann elements);
    (b) sum of scalar Grassmann exponentials weight by weight.
    """
    z = np.asarray(z, dtype=complex)
    l = z.size
    if Fraction(N) < 0:
        raise TruncationTooSmall("energy cutoff must be non-negative")
    if len(R) != l:
        raise DimMismatch(f"need {l} Cartan components of the curvature, got {len(R)}")
    alg = R[0].algebra
    for r in R:
        if r.dim != 1 or r.algebra != alg:
            raise DimMismatch("curvature components must be scalar Grassmann elements of one algebra")
    tau = complex(tau)
    states = energy_truncated_states(rep, l, N)
    d = len(states)
    # (a) diagonal big generator on the module, transported with the stepper
    diag = np.array([2j * np.pi * (float(e) * tau + sum(float(w[k]) * z[k] for k in range(l)))
                     for e, w, _ in states])
    coeffs: dict[int, np.ndarray] = {0: np.diag(diag)}
    for k in range(l):
        wk = np.array([float(w[k]) for _, w, _ in states])
        for S, M in R[k].coeffs.items():
            coeffs[S] = coeffs.get(S, 0) + np.diag(wk * M[0, 0])
    Y = GrassMat(alg, d, coeffs)
    hol = grassmann_transport([Y] * K)
    grading = np.array([s for _, _, s in states])
    path_a = g_str(hol, grading)
    # (b) weight by weight
    path_b: dict = defaultdict(complex)
    for e, w, s in states:
        x = GrassMat.scalar(alg, 1, 2j * np.pi * (float(e) * tau + sum(float(w[k]) * z[k] for k in range(l))))
        for k in range(l):
            x = x + R[k] * float(w[k])
        for S, M in g_exp(x).coeffs.items():
            path_b[S] += s * M[0, 0]
    keys = set(path_a) | set(path_b)
    dev = max((abs(path_a.get(S, 0) - path_b.get(S, 0)) for S in keys), default=0.0)
    return {"rep": rep, "N": str(Fraction(N)), "dim": d, "path_a": dict(path_a), "path_b": dict(path_b),
            "deviation": dev,
            "provenance": {"a": "Magnus transport in the regular representation", "b": "per-weight g_exp sum"}}


def ech_cutoff_sequence(rep: str, z, tau, R, Ns: Sequence) -> list[dict]:
    """Totals at successive energy cutoffs and the size of each increment."""
    out = []
    prev = None
    for N in Ns:
        rep_ = ech_restriction_check(rep, z, tau, R, N)
        total = rep_["path_b"]
        inc = None
        if prev is not None:
            keys = set(total) | set(prev)
            inc = max(abs(total.get(S, 0) - prev.get(S, 0)) for S in keys)
        out.append({"N": str(Fraction(N)), "total": total, "increment": inc, "deviation": rep_["deviation"]})
        prev = total
    return out
