"""Torus computations: elliptic holonomy at Cartan data, zeta determinants, pushdown Pfaffians.

Spin structures carry the labels of :class:`~ellhol.special.SpinStructure`:
``(1, 1)`` is odd.  Structure ``(i, j)`` twists the ``dbar`` operator by the
2-torsion point ``((1-j) + (1-i) tau) / 2``; its determinant line restricted to
the Cartan direction ``z`` is ``theta[a + 1/2; b + 1/2](z) / eta`` with
``(a, b) = ((1-i)/2, (1-j)/2)``, whose modulus is ``|theta_ij(z) / eta|``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import exp1

from .affine import TAG_INDEX, _cartan, char_level_one, modular_anomaly
from .errors import ValidationError, ZeroMode
from .special import SpinStructure, eta, qpow, theta, theta_char, theta_sum

PREFACTOR_CONVENTIONS = ("literal", "unitary")


# ---------------------------------------------------------------------------
# elliptic holonomy at constant Cartan data
# ---------------------------------------------------------------------------
@dataclass
class EllipticHolonomyValue:
    value: complex
    cartan: np.ndarray
    phase_log: complex = 0j
    prefactor: complex = 1.0
    character: complex = 0j
    metadata: dict = field(default_factory=dict)


def cartan_prefactor(z: Sequence[complex], tau: complex, convention: str = "literal") -> complex:
    """Prefactor of the constant-Cartan holonomy.

    ``literal``: ``exp(pi i sum z (z - conj z) / (2 Im tau))``.
    ``unitary``: ``exp(pi sum z (z - conj z) / (2 Im tau))``, whose modulus
    ``exp(-pi |Im z|^2 / Im tau)`` is the Hermitian metric factor that makes
    ``|prefactor * chi|`` invariant under lattice translations of ``z``.
    """
    z = _cartan(z)
    tau = complex(tau)
    s = complex(np.sum(z * (z - np.conj(z))))
    if convention == "literal":
        return complex(np.exp(1j * math.pi * s / (2 * tau.imag)))
    if convention == "unitary":
        return complex(np.exp(math.pi * s / (2 * tau.imag)))
    raise ValueError(f"convention must be one of {PREFACTOR_CONVENTIONS}")


def elliptic_holonomy_const(rep: str, z: Sequence[complex], tau: complex,
                            convention: str = "literal") -> EllipticHolonomyValue:
    """Prefactor times level-one character at a constant Cartan point (no ``q^m``)."""
    z = _cartan(z)
    pre = cartan_prefactor(z, tau, convention)
    chi = char_level_one(rep, z, tau)
    return EllipticHolonomyValue(pre * chi, z, 0j, pre, chi, {"convention": convention})


def section_norm(rep: str, z: Sequence[complex], tau: complex) -> float:
    """``|unitary prefactor * chi|``: the Hermitian norm of the holonomy section."""
    return abs(elliptic_holonomy_const(rep, z, tau, "unitary").value)


# ---------------------------------------------------------------------------
# abelian torus fields
# ---------------------------------------------------------------------------
@dataclass
class TorusField:
    """Cartan-valued ``(0,1)`` coefficient ``a(x, y)`` on the grid ``x, y = k/N``.

    ``grid`` has shape ``(l, N, N)`` with axis 1 the ``x`` index and axis 2 the ``y``
    index; the torus coordinate is ``z = x + tau y``.
    """

    l: int
    N: int
    tau: complex
    grid: np.ndarray

    def __post_init__(self):
        self.tau = complex(self.tau)
        self.grid = np.asarray(self.grid, dtype=complex)
        if self.N < 16 or self.N & (self.N - 1):
            raise ValidationError(f"N must be a power of two >= 16, got {self.N}")
        if self.grid.shape != (self.l, self.N, self.N):
            raise ValidationError(f"grid must have shape {(self.l, self.N, self.N)}, got {self.grid.shape}")
        if not np.all(np.isfinite(self.grid)):
            raise ValidationError("grid samples must be finite")
        if not self.tau.imag > 0:
            raise ValidationError("tau must lie in the upper half-plane")

    @classmethod
    def from_function(cls, f, l: int, N: int, tau: complex) -> TorusField:
        """``f(x, y)`` returns an array of shape ``(l,) + x.shape``."""
        x, y = np.meshgrid(np.arange(N) / N, np.arange(N) / N, indexing="ij")
        return cls(l, N, tau, np.asarray(f(x, y), dtype=complex).reshape(l, N, N))

    def to_json(self) -> dict:
        return {"l": self.l, "N": self.N, "tau": [self.tau.real, self.tau.imag],
                "grid": [[[float(v.real), float(v.imag)] for v in comp.ravel()] for comp in self.grid]}

    @classmethod
    def from_json(cls, obj: dict) -> TorusField:
        try:
            l, N = int(obj["l"]), int(obj["N"])
            tau = complex(obj["tau"][0], obj["tau"][1])
            raw = np.asarray(obj["grid"], dtype=float)
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ValidationError(f"malformed TorusField: {exc}") from exc
        if raw.shape != (l, N * N, 2):
            raise ValidationError(f"grid must hold {l} components of {N * N} [re, im] pairs")
        return cls(l, N, tau, (raw[..., 0] + 1j * raw[..., 1]).reshape(l, N, N))

    @classmethod
    def load(cls, path) -> TorusField:
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def _frequencies(N: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.fft.fftfreq(N, 1.0 / N)
    return np.meshgrid(k, k, indexing="ij")


def dbar_symbol(N: int, tau: complex) -> np.ndarray:
    """Symbol of ``d/dzbar = (tau d/dx - d/dy) / (2i Im tau)`` on ``exp(2 pi i (j x + k y))``."""
    j, k = _frequencies(N)
    return math.pi * (tau * j - k) / tau.imag


def del_symbol(N: int, tau: complex) -> np.ndarray:
    """Symbol of ``d/dz = (d/dy - conj(tau) d/dx) / (2i Im tau)``."""
    j, k = _frequencies(N)
    return -math.pi * (np.conj(tau) * j - k) / tau.imag


def spectral_apply(grid: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    return np.fft.ifft2(np.fft.fft2(grid, axes=(-2, -1)) * symbol, axes=(-2, -1))


def reduce_abelian(field: TorusField) -> tuple[np.ndarray, np.ndarray, float]:
    """Split ``a = z0 + dbar f`` with ``z0`` constant and ``f`` of mean zero (FFT solve)."""
    sym = dbar_symbol(field.N, field.tau)
    ahat = np.fft.fft2(field.grid, axes=(-2, -1))
    z0 = ahat[:, 0, 0] / field.N ** 2
    inv = np.zeros_like(sym)
    nz = sym != 0
    inv[nz] = 1.0 / sym[nz]
    fhat = ahat * inv
    fhat[:, 0, 0] = 0
    f = np.fft.ifft2(fhat, axes=(-2, -1))
    recon = z0[:, None, None] + spectral_apply(f, sym)
    residual = float(np.max(np.abs(recon - field.grid)))
    return z0, f, residual


def abelian_cocycle(field: TorusField, f: np.ndarray) -> complex:
    """``-(1/4 pi) int <A ^ df>`` for ``A = a dzbar``, ``g = exp(f)``.

    With ``dzbar ^ dz = 2i Im(tau) dx ^ dy`` this is
    ``-(1/4 pi) 2i Im(tau) int sum_c a_c (d f_c / dz) dx dy``.
    """
    df = spectral_apply(f, del_symbol(field.N, field.tau))
    integral = np.sum(field.grid * df) / field.N ** 2
    return complex(-(1 / (4 * math.pi)) * 2j * field.tau.imag * integral)


def elliptic_holonomy_field(rep: str, field: TorusField, convention: str = "literal") -> EllipticHolonomyValue:
    """Reduce an abelian field to its constant part and add the gauged cocycle phase.

    The WZW term of ``exp(f)`` vanishes for single-valued ``f``, so the phase is
    the cocycle quadrature alone.
    """
    z0, f, residual = reduce_abelian(field)
    const = elliptic_holonomy_const(rep, z0, field.tau, convention)
    phase = abelian_cocycle(field, f)
    meta = dict(const.metadata, reduction_residual=residual, N=field.N)
    return EllipticHolonomyValue(const.value * np.exp(phase), z0, phase, const.prefactor, const.character, meta)


# ---------------------------------------------------------------------------
# zeta determinants on the torus
# ---------------------------------------------------------------------------
def spin_shift(spin: SpinStructure, tau: complex) -> complex:
    """2-torsion twist of the spin structure: ``((1-j) + (1-i) tau) / 2``, the zero of ``theta_ij``."""
    a, b = spin.twist
    return (b + a * complex(tau)) / 2


def _as_spin(spin) -> SpinStructure:
    if isinstance(spin, SpinStructure):
        return spin
    if isinstance(spin, str):
        return SpinStructure.parse(spin)
    return SpinStructure(*spin)


def zeta_det_torus(z: complex, tau: complex, spin, metric_factor: bool = True) -> float:
    """Closed form of ``det_zeta(dbar* dbar)`` for the twisted line: ``|theta_ij(z)/eta|^2``.

    With ``metric_factor`` the Quillen factor ``exp(-2 pi (Im z)^2 / Im tau)`` is
    included; it equals 1 for real ``z`` and makes the value doubly periodic in
    ``z`` like the spectral side.
    """
    s = _as_spin(spin)
    tau = complex(tau)
    z = complex(z)
    val = abs(theta(s.i, s.j, z, tau) / eta(tau)) ** 2
    if metric_factor:
        val *= math.exp(-2 * math.pi * z.imag ** 2 / tau.imag)
    return float(val)


def _lattice(tau: complex) -> np.ndarray:
    """Unit-covolume basis (columns) of ``Z + tau Z``."""
    s = math.sqrt(tau.imag)
    return np.array([[1.0, tau.real], [0.0, tau.imag]]) / s


def _lattice_points(B: np.ndarray, centre: np.ndarray, radius: float) -> np.ndarray:
    """All lattice vectors ``B m`` with ``|B m + centre| <= radius``."""
    coords = np.linalg.solve(B, -centre)
    # bound on the integer box from the smallest singular value
    smin = np.linalg.svd(B, compute_uv=False).min()
    M = int(math.ceil(radius / smin)) + 1
    r0 = np.round(coords).astype(int)
    rng = np.arange(-M, M + 1)
    mm, nn = np.meshgrid(rng + r0[0], rng + r0[1], indexing="ij")
    pts = B @ np.vstack([mm.ravel(), nn.ravel()])
    d = pts + centre[:, None]
    keep = np.einsum("ij,ij->j", d, d) <= radius ** 2
    return pts[:, keep]


def epstein_log_det(w: complex, tau: complex, cutoff: float = 1.0) -> float:
    """``-Z'(0)`` for ``Z(s) = sum |lambda + w|^(-2s)`` over the unit-covolume lattice.

    Ewald split at ``t = 1``: ``Z'(0) = sum E1(pi |lambda + w|^2) - 1 +
    sum_(mu != 0) cos(2 pi <mu, w>) exp(-pi |mu|^2) / (pi |mu|^2)`` with ``mu`` in
    the dual lattice.  ``cutoff`` scales both truncation radii.
    """
    tau = complex(tau)
    B = _lattice(tau)
    wv = np.array([w.real, w.imag]) / math.sqrt(tau.imag)
    R = cutoff * math.sqrt(45.0 / math.pi)  # E1(pi R^2) ~ e^-45
    pts = _lattice_points(B, wv, R)
    d2 = np.einsum("ij,ij->j", pts + wv[:, None], pts + wv[:, None])
    if np.any(d2 < 1e-24):
        raise ZeroMode(f"twisted operator has a zero mode at w = {w}")
    direct = float(np.sum(exp1(math.pi * d2)))
    Bd = np.linalg.inv(B).T
    mus = _lattice_points(Bd, np.zeros(2), R)
    mu2 = np.einsum("ij,ij->j", mus, mus)
    nz = mu2 > 1e-24
    mus, mu2 = mus[:, nz], mu2[nz]
    recip = float(np.sum(np.cos(2 * math.pi * (mus.T @ wv)) * np.exp(-math.pi * mu2) / (math.pi * mu2)))
    return -(direct - 1.0 + recip)


def epstein_zeta_det(z: complex, tau: complex, spin, calibration: float = 1.0, cutoff: float = 1.0) -> float:
    """Spectral ``det_zeta`` of the twisted ``dbar* dbar`` times a calibration constant."""
    s = _as_spin(spin)
    w = complex(z) + spin_shift(s, tau)
    return calibration * math.exp(epstein_log_det(w, tau, cutoff))


DEFAULT_CALIBRATION_POINT = 0.11 + 0.07j


def calibrate_epstein(tau: complex, spin, z_ref: complex = DEFAULT_CALIBRATION_POINT) -> float:
    """Constant ``C`` with ``C * spectral = closed form`` at ``z_ref``."""
    return zeta_det_torus(z_ref, tau, spin) / epstein_zeta_det(z_ref, tau, spin)


def zeta_duality_check(points: Sequence[complex], tau: complex, spin,
                       z_ref: complex = DEFAULT_CALIBRATION_POINT) -> dict:
    """Spectral versus closed-form determinant on a point set after one-point calibration."""
    C = calibrate_epstein(tau, spin, z_ref)
    rows = []
    for z in points:
        closed = zeta_det_torus(z, tau, spin)
        spec = epstein_zeta_det(z, tau, spin, C)
        rows.append({"z": complex(z), "closed_form": closed, "spectral": spec,
                     "relerr": abs(spec - closed) / abs(closed)})
    return {"tau": complex(tau), "spin": str(_as_spin(spin).i) + str(_as_spin(spin).j),
            "calibration": {"z_ref": complex(z_ref), "constant": C},
            "rows": rows, "max_relerr": max(r["relerr"] for r in rows)}


# ---------------------------------------------------------------------------
# pushdown determinants and the elliptic Atiyah-Witten identity
# ---------------------------------------------------------------------------
def pushdown_determinant(weights: Sequence[tuple[Sequence[float], int]], z: Sequence[complex],
                         tau: complex, char: tuple[float, float]) -> complex:
    """``prod_mu (theta[a + 1/2; b + 1/2](mu(z), tau) / eta(tau))^mult``."""
    z = _cartan(z)
    a, b = char
    e = eta(tau)
    out = 1.0 + 0j
    for mu, mult in weights:
        mu = np.asarray(mu, dtype=float)
        if mu.shape != z.shape:
            raise ValueError(f"weight {mu} does not match Cartan rank {z.size}")
        out *= (theta_char(a + 0.5, b + 0.5, complex(mu @ z), tau) / e) ** int(mult)
    return out


def pfaffian_characteristic(pf_index: tuple[int, int]) -> tuple[float, float]:
    """Twist ``(a, b) = (p/2, r/2)`` of the Pfaffian labelled ``pf_(p, r)``."""
    p, r = pf_index
    return p / 2, r / 2


def paired_pfaffian_index(rep: str, pairing: str = "flip") -> tuple[int, int]:
    """Index of the Pfaffian matched with ``S_ij``: ``(1-i, 1-j)``; ``pairing="same"`` is the negative control."""
    i, j = TAG_INDEX[rep]
    if pairing == "flip":
        return 1 - i, 1 - j
    if pairing == "same":
        return i, j
    raise ValueError("pairing must be 'flip' or 'same'")


def elliptic_aw_check(rep: str, zs: Sequence[Sequence[complex]], tau: complex, pairing: str = "flip",
                      zero_tol: float = 1e-300) -> dict:
    """Character versus pushdown Pfaffian over a set of Cartan points.

    ``char_side`` is the theta-product character, which already carries the
    anomaly: it equals ``q^m`` times the graded trace.  The Pfaffian side is the
    pushdown of the weights ``e_k`` with the paired characteristic.  The identity
    predicts a z-independent modulus of their ratio.
    """
    pf = paired_pfaffian_index(rep, pairing)
    char = pfaffian_characteristic(pf)
    rows = []
    for z in zs:
        z = _cartan(z)
        l = z.size
        weights = [(np.eye(l)[k], 1) for k in range(l)]
        cs = char_level_one(rep, z, tau)
        ps = pushdown_determinant(weights, z, tau, char)
        if abs(cs) <= zero_tol and abs(ps) <= zero_tol:
            rows.append({"z": z.tolist(), "char_side": cs, "pfaffian_side": ps, "ratio": None, "status": "both-zero"})
            continue
        rows.append({"z": z.tolist(), "char_side": cs, "pfaffian_side": ps, "ratio": cs / ps, "status": "ok"})
    mods = np.array([abs(r["ratio"]) for r in rows if r["ratio"] is not None])
    err = float(np.max(np.abs(mods - mods.mean()))) if mods.size else 0.0
    phases = [float(np.angle(r["ratio"])) for r in rows if r["ratio"] is not None]
    return {"rep": rep, "tau": complex(tau), "pfaffian_index": pf, "characteristic": char,
            "anomaly": str(modular_anomaly(rep, len(_cartan(zs[0])))),
            "rows": rows, "mean_modulus": float(mods.mean()) if mods.size else None,
            "unimodular_err": err, "phases": phases}


# ---------------------------------------------------------------------------
# q -> 0 degeneration
# ---------------------------------------------------------------------------
def degeneration_check(z: complex, taus: Sequence[complex]) -> list[tuple[complex, float]]:
    """``|q^(-1/12) theta_11(z)/eta - 2i sin(pi z)| / |2i sin(pi z)|`` along ``taus``.

    ``theta_11`` is taken from its series form.  At ``z = 0`` both sides vanish
    and the error is reported as exactly 0.
    """
    z = complex(z)
    target = 2j * np.sin(np.pi * z)
    out = []
    for tau in taus:
        tau = complex(tau)
        q = np.exp(2j * np.pi * tau)
        lhs = theta_sum(1, 1, z, tau) / eta(tau) / qpow(1 / 12, tau)
        if target == 0:
            rel = 0.0 if lhs == 0 else float("inf")
        else:
            rel = abs(lhs - target) / abs(target)
        out.append((complex(q), float(rel)))
    return out
