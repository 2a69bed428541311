"""Exterior algebra on ``g`` generators with ``d x d`` complex matrix coefficients.

Basis monomials ``e_S`` are indexed by subsets ``S`` of ``{0..g-1}`` stored as
bitmasks; ``e_S`` means the product of the generators of ``S`` in increasing
order.  Then ``e_S e_T = sign(S, T) e_(S u T)`` for disjoint ``S, T``, where the
sign counts pairs ``s in S, t in T`` with ``s > t``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.linalg import expm

from .errors import AlgebraMismatch, DimMismatch

MAX_GENERATORS = 16
MAX_REGULAR_SIZE = 4096


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def subset_sign(S: int, T: int) -> int:
    """``(-1)^(#{(s, t) : s in S, t in T, s > t})``; assumes ``S & T == 0``."""
    inv = 0
    t = T
    while t:
        low = t & -t
        inv += popcount(S & ~((low << 1) - 1))
        t ^= low
    return -1 if inv & 1 else 1


def mask_from_indices(idx) -> int:
    m = 0
    for i in idx:
        if m >> i & 1:
            raise ValueError(f"repeated generator {i}")
        m |= 1 << i
    return m


def indices_from_mask(mask: int) -> tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


@dataclass(frozen=True)
class ExtAlgebra:
    g: int

    def __post_init__(self):
        if not 0 <= self.g <= MAX_GENERATORS:
            raise ValueError(f"generator count must be in [0, {MAX_GENERATORS}], got {self.g}")

    @property
    def size(self) -> int:
        return 1 << self.g

    def basis(self) -> list[int]:
        """Masks ordered by the lexicographic order of their sorted index tuples."""
        return sorted(range(self.size), key=indices_from_mask)


class GrassMat:
    """Element ``sum_S e_S (x) M_S`` with ``M_S`` a ``d x d`` complex matrix."""

    __slots__ = ("algebra", "dim", "coeffs")

    def __init__(self, algebra: ExtAlgebra, dim: int, coeffs: Mapping[int, np.ndarray] | None = None):
        self.algebra = algebra
        self.dim = int(dim)
        self.coeffs: dict[int, np.ndarray] = {}
        for S, M in (coeffs or {}).items():
            if isinstance(S, (tuple, list)):
                S = mask_from_indices(S)
            if S >= algebra.size or S < 0:
                raise ValueError(f"subset mask {S} outside algebra with {algebra.g} generators")
            M = np.array(M, dtype=complex)
            if M.ndim == 0:
                M = M * np.eye(self.dim)
            if M.shape != (self.dim, self.dim):
                raise DimMismatch(f"coefficient of shape {M.shape}, expected {(self.dim, self.dim)}")
            if np.any(M):
                self.coeffs[S] = self.coeffs.get(S, 0) + M

    # -- constructors ----------------------------------------------------
    @classmethod
    def scalar(cls, algebra: ExtAlgebra, dim: int, M) -> GrassMat:
        return cls(algebra, dim, {0: M})

    @classmethod
    def identity(cls, algebra: ExtAlgebra, dim: int) -> GrassMat:
        return cls(algebra, dim, {0: np.eye(dim)})

    @classmethod
    def zero(cls, algebra: ExtAlgebra, dim: int) -> GrassMat:
        return cls(algebra, dim)

    @classmethod
    def generator(cls, algebra: ExtAlgebra, dim: int, i: int, M=1.0) -> GrassMat:
        return cls(algebra, dim, {1 << i: M})

    # -- structure -------------------------------------------------------
    def parity(self) -> int | None:
        """0 for even, 1 for odd, None for inhomogeneous elements (zero counts as even)."""
        ps = {popcount(S) & 1 for S in self.coeffs}
        if not ps:
            return 0
        return ps.pop() if len(ps) == 1 else None

    def degree_part(self, k: int) -> GrassMat:
        return GrassMat(self.algebra, self.dim, {S: M for S, M in self.coeffs.items() if popcount(S) == k})

    def body(self) -> np.ndarray:
        return self.coeffs.get(0, np.zeros((self.dim, self.dim), dtype=complex))

    def coefficient(self, S) -> np.ndarray:
        if isinstance(S, (tuple, list)):
            S = mask_from_indices(S)
        return self.coeffs.get(S, np.zeros((self.dim, self.dim), dtype=complex))

    def _check(self, other: GrassMat):
        if self.algebra != other.algebra:
            raise AlgebraMismatch(f"algebras differ: {self.algebra} vs {other.algebra}")
        if self.dim != other.dim:
            raise DimMismatch(f"matrix sizes differ: {self.dim} vs {other.dim}")

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other: GrassMat) -> GrassMat:
        self._check(other)
        out = dict(self.coeffs)
        for S, M in other.coeffs.items():
            out[S] = out.get(S, 0) + M
        return GrassMat(self.algebra, self.dim, out)

    def __neg__(self) -> GrassMat:
        return GrassMat(self.algebra, self.dim, {S: -M for S, M in self.coeffs.items()})

    def __sub__(self, other: GrassMat) -> GrassMat:
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, GrassMat):
            return g_mul(self, other)
        return GrassMat(self.algebra, self.dim, {S: other * M for S, M in self.coeffs.items()})

    def __rmul__(self, c):
        return self * c

    def conjugate_by(self, g: np.ndarray) -> GrassMat:
        """Coefficientwise ``g M_S g^(-1)`` for a constant invertible matrix ``g``."""
        gi = np.linalg.inv(g)
        return GrassMat(self.algebra, self.dim, {S: g @ M @ gi for S, M in self.coeffs.items()})

    def allclose(self, other: GrassMat, atol: float = 1e-12) -> bool:
        return max_abs_diff(self, other) <= atol

    def to_dense(self) -> np.ndarray:
        """Stack of coefficients, shape ``(2^g, d, d)``, indexed by mask."""
        out = np.zeros((self.algebra.size, self.dim, self.dim), dtype=complex)
        for S, M in self.coeffs.items():
            out[S] = M
        return out

    @classmethod
    def from_dense(cls, algebra: ExtAlgebra, arr: np.ndarray) -> GrassMat:
        return cls(algebra, arr.shape[1], {S: arr[S] for S in range(arr.shape[0]) if np.any(arr[S])})

    def __repr__(self) -> str:
        return f"GrassMat(g={self.algebra.g}, d={self.dim}, terms={sorted(self.coeffs)})"


def max_abs_diff(a: GrassMat, b: GrassMat) -> float:
    a._check(b)
    keys = set(a.coeffs) | set(b.coeffs)
    if not keys:
        return 0.0
    return max(float(np.max(np.abs(a.coefficient(S) - b.coefficient(S)))) for S in keys)


def g_mul(a: GrassMat, b: GrassMat) -> GrassMat:
    """Product with the exterior sign rule and matrix multiplication of coefficients."""
    a._check(b)
    out: dict[int, np.ndarray] = {}
    for S, M in a.coeffs.items():
        for T, N in b.coeffs.items():
            if S & T:
                continue
            U = S | T
            term = subset_sign(S, T) * (M @ N)
            out[U] = out[U] + term if U in out else term
    return GrassMat(a.algebra, a.dim, out)


# ---------------------------------------------------------------------------
# regular representation and exponential
# ---------------------------------------------------------------------------
def left_regular(a: GrassMat) -> np.ndarray:
    """Matrix of ``b -> a b`` on ``C^(2^g) (x) C^d``; block ``(S u U, U)`` is ``sign(S, U) M_S``."""
    n, d = a.algebra.size, a.dim
    big = np.zeros((n * d, n * d), dtype=complex)
    for S, M in a.coeffs.items():
        for U in range(n):
            if S & U:
                continue
            r = (S | U) * d
            c = U * d
            big[r:r + d, c:c + d] += subset_sign(S, U) * M
    return big


def from_first_block_column(algebra: ExtAlgebra, col: np.ndarray, d: int) -> GrassMat:
    """Element whose coefficient ``M_S`` is block row ``S`` of ``col`` (shape ``(2^g d, d)``)."""
    arr = col.reshape(algebra.size, d, d)
    return GrassMat.from_dense(algebra, arr)


def _exp_series(a: GrassMat) -> GrassMat:
    # scaling and squaring on a native Taylor series
    norm = sum(float(np.linalg.norm(M, 1)) for M in a.coeffs.values())
    s = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0.5 else 0
    x = a * (0.5 ** s)
    term = GrassMat.identity(a.algebra, a.dim)
    total = term
    for k in range(1, 60):
        term = g_mul(term, x) * (1.0 / k)
        total = total + term
        if not term.coeffs or max(float(np.max(np.abs(M))) for M in term.coeffs.values()) < 1e-18:
            break
    for _ in range(s):
        total = g_mul(total, total)
    return total


def g_exp(a: GrassMat) -> GrassMat:
    """Exponential of an element with arbitrary body and nilpotent soul.

    Uses the regular representation and :func:`scipy.linalg.expm` when
    ``2^g * d <= 4096``; otherwise a scaled native Taylor series.
    """
    n, d = a.algebra.size, a.dim
    if n * d > MAX_REGULAR_SIZE:
        return _exp_series(a)
    if not a.coeffs:
        return GrassMat.identity(a.algebra, d)
    E = expm(left_regular(a))
    return from_first_block_column(a.algebra, E[:, :d], d)


def g_exp_taylor(a: GrassMat, order: int | None = None) -> GrassMat:
    """Plain Taylor series ``sum_k a^k / k!`` in the native product (reference path)."""
    order = order if order is not None else 40
    term = GrassMat.identity(a.algebra, a.dim)
    total = term
    for k in range(1, order + 1):
        term = g_mul(term, a) * (1.0 / k)
        total = total + term
    return total


# ---------------------------------------------------------------------------
# (super)traces
# ---------------------------------------------------------------------------
GrassmannScalar = dict  # mask -> complex


def _grading_diag(grading, d: int) -> np.ndarray:
    if grading is None:
        return np.ones(d)
    G = np.asarray(grading)
    if G.ndim == 2:
        if G.shape != (d, d):
            raise DimMismatch(f"grading of shape {G.shape}, expected {(d, d)}")
        if np.any(np.abs(G - np.diag(np.diag(G))) > 0):
            raise ValueError("grading must be diagonal")
        G = np.diag(G)
    if G.shape != (d,):
        raise DimMismatch(f"grading of length {G.shape}, expected {d}")
    if not np.all(np.isin(G, (1, -1))):
        raise ValueError("grading entries must be +1 or -1")
    return G.astype(float)


def g_str(a: GrassMat, grading=None) -> GrassmannScalar:
    """Coefficientwise ``tr(grading . M_S)``; ``grading=None`` gives the plain trace."""
    G = _grading_diag(grading, a.dim)
    out = {}
    for S, M in a.coeffs.items():
        v = complex(np.sum(G * np.diag(M)))
        if v != 0:
            out[S] = v
    return out


def scalar_max_diff(x: GrassmannScalar, y: GrassmannScalar) -> float:
    keys = set(x) | set(y)
    return max((abs(x.get(k, 0) - y.get(k, 0)) for k in keys), default=0.0)


def koszul_sign(a: GrassMat, b: GrassMat) -> int:
    pa, pb = a.parity(), b.parity()
    if pa is None or pb is None:
        raise ValueError("Koszul sign needs homogeneous elements")
    return -1 if (pa and pb) else 1
