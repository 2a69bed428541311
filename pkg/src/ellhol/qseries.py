"""Truncated Laurent series in the nome ``q = exp(2*pi*i*tau)``.

Exponents are exact rationals (:class:`fractions.Fraction`), coefficients are
Python complex numbers.  A series carries a truncation order ``trunc``: every
term with exponent ``>= trunc`` is *unknown*, not zero.  ``trunc=None`` marks an
exact (finite) series such as a monomial ``q**(1/8)``.

Arithmetic only ever returns the window that is provably correct::

    >>> a = QSeries({0: 1, 1: 1}, trunc=2)          # 1 + q + O(q^2)
    >>> b = QSeries({1: 1, 2: 1}, trunc=3)          # q + q^2 + O(q^3)
    >>> (a + b).terms
    {Fraction(0, 1): (1+0j), Fraction(1, 1): (2+0j)}
"""
from __future__ import annotations

import cmath
import math
from fractions import Fraction
from typing import Iterable, Mapping, Union

Rational = Union[int, Fraction]

_INT64 = 2**63


def _as_fraction(r) -> Fraction:
    if isinstance(r, Fraction):
        f = r
    elif isinstance(r, int):
        f = Fraction(r)
    elif isinstance(r, str):
        f = Fraction(r)
    else:
        raise TypeError(f"exponent must be an exact rational, got {type(r).__name__}")
    if abs(f.numerator) >= _INT64 or f.denominator >= _INT64:
        raise OverflowError(f"exponent {f} does not fit in 64-bit numerator/denominator")
    return f


class QSeries:
    """Finite map ``exponent -> coefficient`` plus a truncation order."""

    __slots__ = ("_terms", "_trunc")

    def __init__(self, terms: Mapping | None = None, trunc: Rational | None = None):
        t = None if trunc is None else _as_fraction(trunc)
        canon: dict[Fraction, complex] = {}
        for e, c in (terms or {}).items():
            e = _as_fraction(e)
            if t is not None and e >= t:
                continue
            c = complex(c)
            if c == 0:
                continue
            canon[e] = canon.get(e, 0j) + c
            if canon[e] == 0:
                del canon[e]
        self._terms = dict(sorted(canon.items()))
        self._trunc = t

    # -- constructors ----------------------------------------------------
    @classmethod
    def monomial(cls, exponent: Rational, coeff: complex = 1.0, trunc: Rational | None = None) -> QSeries:
        return cls({exponent: coeff}, trunc)

    @classmethod
    def zero(cls, trunc: Rational | None = None) -> QSeries:
        return cls({}, trunc)

    @classmethod
    def from_coefficients(cls, coeffs: Iterable[complex], step: Rational = 1, start: Rational = 0,
                          trunc: Rational | None = None) -> QSeries:
        """Series ``sum_k coeffs[k] q^(start + k*step)``."""
        step, start = _as_fraction(step), _as_fraction(start)
        return cls({start + k * step: c for k, c in enumerate(coeffs)}, trunc)

    # -- accessors -------------------------------------------------------
    @property
    def terms(self) -> dict[Fraction, complex]:
        return dict(self._terms)

    @property
    def trunc(self) -> Fraction | None:
        return self._trunc

    def items(self):
        return self._terms.items()

    def coefficient(self, exponent: Rational) -> complex:
        e = _as_fraction(exponent)
        if self._trunc is not None and e >= self._trunc:
            raise ValueError(f"coefficient of q^{e} is beyond the truncation order {self._trunc}")
        return self._terms.get(e, 0j)

    def valuation(self) -> Fraction | None:
        """Smallest stored exponent; for a zero series the truncation order (None if exact)."""
        if self._terms:
            return next(iter(self._terms))
        return self._trunc

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def __repr__(self) -> str:
        body = " + ".join(f"({c:.6g})q^{e}" for e, c in self._terms.items()) or "0"
        tail = "" if self._trunc is None else f" + O(q^{self._trunc})"
        return f"QSeries({body}{tail})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, QSeries):
            return NotImplemented
        return self._trunc == other._trunc and self._terms == other._terms

    __hash__ = None

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, QSeries):
            other = QSeries({0: other})
        return qs_add(self, other)

    __radd__ = __add__

    def __neg__(self) -> QSeries:
        return QSeries({e: -c for e, c in self._terms.items()}, self._trunc)

    def __sub__(self, other):
        if not isinstance(other, QSeries):
            other = QSeries({0: other})
        return qs_add(self, -other)

    def __mul__(self, other):
        if isinstance(other, QSeries):
            return qs_mul(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, c: complex) -> QSeries:
        return QSeries({e: c * v for e, v in self._terms.items()}, self._trunc)

    def shift(self, r: Rational) -> QSeries:
        """Exact multiplication by ``q**r``."""
        r = _as_fraction(r)
        t = None if self._trunc is None else self._trunc + r
        return QSeries({e + r: c for e, c in self._terms.items()}, t)

    def truncate(self, trunc: Rational) -> QSeries:
        t = _as_fraction(trunc)
        if self._trunc is not None:
            t = min(t, self._trunc)
        return QSeries(self._terms, t)

    def __pow__(self, k: int) -> QSeries:
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        out = QSeries({0: 1})
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __call__(self, p: QPoint | complex) -> complex:
        if not isinstance(p, QPoint):
            p = QPoint(p)
        return qs_eval(self, p)

    # -- serialization ---------------------------------------------------
    def to_json(self) -> dict:
        return {
            "terms": [
                {"num": e.numerator, "den": e.denominator, "re": c.real, "im": c.imag}
                for e, c in self._terms.items()
            ],
            "trunc_num": None if self._trunc is None else self._trunc.numerator,
            "trunc_den": None if self._trunc is None else self._trunc.denominator,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> QSeries:
        trunc = None
        if obj.get("trunc_num") is not None:
            trunc = Fraction(int(obj["trunc_num"]), int(obj["trunc_den"]))
        terms = {Fraction(int(t["num"]), int(t["den"])): complex(t["re"], t["im"]) for t in obj["terms"]}
        return cls(terms, trunc)


def _min_trunc(*ts):
    ts = [t for t in ts if t is not None]
    return min(ts) if ts else None


def qs_add(a: QSeries, b: QSeries) -> QSeries:
    """Termwise sum; the result is known only up to the smaller truncation order."""
    trunc = _min_trunc(a.trunc, b.trunc)
    out = dict(a._terms)
    for e, c in b._terms.items():
        out[e] = out.get(e, 0j) + c
    return QSeries(out, trunc)


def qs_mul(a: QSeries, b: QSeries) -> QSeries:
    """Cauchy product.

    The valid window ends at ``min(a.trunc + val(b), b.trunc + val(a))``; terms at
    or beyond it depend on unknown coefficients and are dropped.
    """
    cands = []
    va, vb = a.valuation(), b.valuation()
    if a.trunc is not None and vb is not None:
        cands.append(a.trunc + vb)
    if b.trunc is not None and va is not None:
        cands.append(b.trunc + va)
    trunc = min(cands) if cands else None
    out: dict[Fraction, complex] = {}
    for ea, ca in a._terms.items():
        for eb, cb in b._terms.items():
            e = ea + eb
            if trunc is not None and e >= trunc:
                continue
            out[e] = out.get(e, 0j) + ca * cb
    return QSeries(out, trunc)


class QPoint:
    """A point of the upper half-plane together with its nome.

    Fractional powers ``q**r`` are evaluated as ``exp(2*pi*i*r*tau)``.  For a point
    built with :meth:`from_q`, ``tau`` is taken from the principal logarithm of
    ``q`` (``arg q`` in ``(-pi, pi]``), so the two descriptions agree.
    """

    __slots__ = ("tau",)

    def __init__(self, tau: complex):
        tau = complex(tau)
        if not tau.imag > 0:
            raise ValueError(f"tau must lie in the upper half-plane, got {tau}")
        self.tau = tau

    @classmethod
    def from_q(cls, q: complex) -> QPoint:
        q = complex(q)
        if not 0 < abs(q) < 1:
            raise ValueError(f"need 0 < |q| < 1, got |q| = {abs(q)}")
        return cls(cmath.log(q) / (2j * math.pi))

    @property
    def q(self) -> complex:
        return cmath.exp(2j * math.pi * self.tau)

    def qpow(self, r: Rational) -> complex:
        return cmath.exp(2j * math.pi * float(r) * self.tau)

    def __repr__(self) -> str:
        return f"QPoint(tau={self.tau})"


def qs_eval(s: QSeries, p: QPoint) -> complex:
    """Evaluate the stored (finite) part of ``s`` at ``p``."""
    total = 0j
    for e, c in s._terms.items():
        total += c * p.qpow(e)
    return total
