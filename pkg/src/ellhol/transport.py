"""Parallel transport around the circle, Floquet reduction and the circle Pfaffian.

The transport equation is ``psi'(t) = A(t) psi(t)``, ``psi(0) = I`` on ``[0, 1]``,
with ``A`` sampled at ``t_k = k/K``.  Under a periodic gauge transformation
``psi -> g psi`` the connection changes to ``g A g^-1 + g' g^-1`` and the
monodromy to ``g(0) hol g(0)^-1``.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import expm, schur

from .errors import DefectiveMonodromy, NotSpecialOrthogonal, ValidationError

ALGEBRAS = ("so", "u", "gl")
MIN_SAMPLES = 16
MEMBERSHIP_TOL = 1e-12

# commutator-free 4th-order Magnus: Gauss nodes and weights
_C1 = 0.5 - math.sqrt(3) / 6
_C2 = 0.5 + math.sqrt(3) / 6
_A1 = (3 - 2 * math.sqrt(3)) / 12
_A2 = (3 + 2 * math.sqrt(3)) / 12


def _lagrange_weights(s: float) -> np.ndarray:
    """Cubic Lagrange weights on nodes -1, 0, 1, 2 evaluated at ``s``."""
    return np.array([
        -s * (s - 1) * (s - 2) / 6,
        (s + 1) * (s - 1) * (s - 2) / 2,
        -(s + 1) * s * (s - 2) / 2,
        (s + 1) * s * (s - 1) / 6,
    ])


def check_membership(samples: np.ndarray, algebra: str, tol: float = MEMBERSHIP_TOL) -> float:
    """Largest violation of the algebra's defining relation; raises ValidationError above ``tol``."""
    if algebra not in ALGEBRAS:
        raise ValidationError(f"unknown algebra {algebra!r}; choose from {ALGEBRAS}")
    if not np.all(np.isfinite(samples)):
        raise ValidationError("connection samples must be finite")
    if algebra == "gl":
        return 0.0
    adj = np.swapaxes(samples, 1, 2)
    if algebra == "so":
        err = max(float(np.max(np.abs(samples + adj), initial=0.0)), float(np.max(np.abs(samples.imag), initial=0.0)))
    else:
        err = float(np.max(np.abs(samples + adj.conj()), initial=0.0))
    if err >= tol:
        raise ValidationError(f"samples are not in {algebra}(n): violation {err:.3e}")
    return err


@dataclass
class LoopConnection:
    """Connection on the unit circle sampled on a uniform grid of ``K`` points."""

    n: int
    algebra: str
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.ndim != 3 or self.samples.shape[1:] != (self.n, self.n):
            raise ValidationError(f"samples must have shape (K, {self.n}, {self.n}), got {self.samples.shape}")
        if self.samples.shape[0] < MIN_SAMPLES:
            raise ValidationError(f"need at least {MIN_SAMPLES} samples, got {self.samples.shape[0]}")
        check_membership(self.samples, self.algebra)

    @property
    def K(self) -> int:
        return self.samples.shape[0]

    @classmethod
    def from_function(cls, f: Callable[[float], np.ndarray], K: int, algebra: str = "gl") -> LoopConnection:
        s = np.array([f(k / K) for k in range(K)], dtype=complex)
        return cls(s.shape[1], algebra, s)

    @classmethod
    def constant(cls, A: np.ndarray, K: int = MIN_SAMPLES, algebra: str = "gl") -> LoopConnection:
        A = np.asarray(A, dtype=complex)
        return cls(A.shape[0], algebra, np.broadcast_to(A, (K,) + A.shape).copy())

    def scaled(self, s: float) -> LoopConnection:
        return LoopConnection(self.n, self.algebra, s * self.samples)

    def conjugated(self, g: np.ndarray) -> LoopConnection:
        gi = np.linalg.inv(g)
        return LoopConnection(self.n, self.algebra, g @ self.samples @ gi)

    def to_json(self) -> dict:
        flat = self.samples.reshape(self.K, -1)
        return {"n": self.n, "algebra": self.algebra,
                "samples": [[[float(v.real), float(v.imag)] for v in row] for row in flat]}

    @classmethod
    def from_json(cls, obj: dict) -> LoopConnection:
        try:
            n = int(obj["n"])
            raw = np.asarray(obj["samples"], dtype=float)
            algebra = obj["algebra"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed LoopConnection: {exc}") from exc
        if raw.shape[-1] != 2:
            raise ValidationError("matrix entries must be [re, im] pairs")
        vals = raw[..., 0] + 1j * raw[..., 1]
        try:
            vals = vals.reshape(vals.shape[0], n, n)
        except ValueError as exc:
            raise ValidationError(f"samples do not hold {n}x{n} matrices") from exc
        return cls(n, algebra, vals)

    @classmethod
    def load(cls, path) -> LoopConnection:
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass
class Monodromy:
    hol: np.ndarray
    algebra: str = "gl"
    steps: int = 0
    order: int = 4
    spin_lift: np.ndarray | None = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# the stepper
# ---------------------------------------------------------------------------
def gauss_node_values(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values of the periodic cubic interpolant at both Gauss nodes of every step."""
    nb = [np.roll(samples, -o, axis=0) for o in (-1, 0, 1, 2)]
    out = []
    for c in (_C1, _C2):
        w = _lagrange_weights(c)
        out.append(w[0] * nb[0] + w[1] * nb[1] + w[2] * nb[2] + w[3] * nb[3])
    return out[0], out[1]


def step_propagators(samples: np.ndarray) -> np.ndarray:
    """One-step propagators ``exp(h(a1 A1 + a2 A2)) exp(h(a2 A1 + a1 A2))``, shape ``(K, n, n)``."""
    K = samples.shape[0]
    h = 1.0 / K
    A1, A2 = gauss_node_values(samples)
    first = expm(h * (_A2 * A1 + _A1 * A2))
    second = expm(h * (_A1 * A1 + _A2 * A2))
    return second @ first


def transport_samples(samples: np.ndarray) -> np.ndarray:
    """Monodromy ``psi(1)`` of ``psi' = A psi`` for a sample stack of shape ``(K, n, n)``."""
    samples = np.asarray(samples, dtype=complex)
    steps = step_propagators(samples)
    psi = np.eye(samples.shape[1], dtype=complex)
    for P in steps:
        psi = P @ psi
    return psi


def parallel_transport(conn: LoopConnection, spin: bool = False) -> Monodromy:
    """Monodromy by 4th-order commutator-free Magnus stepping.

    With ``spin=True`` (``so(2n)`` only) the spinor representation of the
    connection is transported as well, which fixes the lift of the holonomy
    to ``Spin(2n)``.
    """
    hol = transport_samples(conn.samples)
    if conn.algebra == "so":
        hol = hol.real.astype(complex) if np.max(np.abs(hol.imag)) < 1e-13 else hol
    lift = None
    if spin:
        if conn.algebra != "so" or conn.n % 2:
            raise ValidationError("spin lift needs an so(2n) connection")
        lift = transport_samples(spin_rep(conn.samples.real))
    return Monodromy(hol, conn.algebra, conn.K, 4, lift)


# ---------------------------------------------------------------------------
# Floquet reduction
# ---------------------------------------------------------------------------
def floquet_reduce(conn_or_mono, cond_max: float = 1e8) -> tuple[np.ndarray, float]:
    """Principal logarithm ``K0`` of the monodromy and ``||exp(K0) - hol||``.

    Eigenvalue logs have imaginary part in ``(-pi, pi]``.  Raises
    :class:`DefectiveMonodromy` when the eigenvector matrix is ill conditioned.
    """
    mono = conn_or_mono if isinstance(conn_or_mono, Monodromy) else parallel_transport(conn_or_mono)
    hol = mono.hol
    lam, V = np.linalg.eig(hol)
    c = np.linalg.cond(V)
    if not np.isfinite(c) or c > cond_max:
        raise DefectiveMonodromy(f"monodromy is (nearly) defective: eigenvector condition number {c:.3e}")
    logs = np.log(lam.astype(complex))
    # principal branch: arg in (-pi, pi]
    logs = np.where(np.isclose(logs.imag, -np.pi, atol=1e-14), logs.real + 1j * np.pi, logs)
    K0 = V @ np.diag(logs) @ np.linalg.inv(V)
    if np.isrealobj(hol) or np.max(np.abs(hol.imag)) == 0:
        if np.max(np.abs(K0.imag)) < 1e-10:
            K0 = K0.real.astype(complex)
    residual = float(np.linalg.norm(expm(K0) - hol))
    return K0, residual


# ---------------------------------------------------------------------------
# spin representation
# ---------------------------------------------------------------------------
_PX = np.array([[0, 1], [1, 0]], dtype=complex)
_PY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PZ = np.array([[1, 0], [0, -1]], dtype=complex)


def gamma_matrices(n: int) -> list[np.ndarray]:
    """Hermitian generators of Cl(2n) on ``C^(2^n)``: ``g_a g_b + g_b g_a = 2 delta_ab``."""
    out = []
    for k in range(n):
        for P in (_PX, _PY):
            factors = [_PZ] * k + [P] + [np.eye(2)] * (n - k - 1)
            M = factors[0]
            for F in factors[1:]:
                M = np.kron(M, F)
            out.append(M)
    return out


def chirality(n: int) -> np.ndarray:
    """``Gamma = i^n g_1 ... g_2n``; with this choice a rotation by theta has supertrace ``2i sin(theta/2)``."""
    gs = gamma_matrices(n)
    G = np.eye(2 ** n, dtype=complex)
    for g in gs:
        G = G @ g
    return (1j ** n) * G


def spin_rep(A: np.ndarray) -> np.ndarray:
    """``rho(A) = (1/4) sum_ab A_ab g_a g_b`` for ``A`` in so(2n), vectorized over leading axes."""
    A = np.asarray(A)
    m = A.shape[-1]
    if m % 2:
        raise ValidationError("spin representation needs even dimension")
    gs = np.array(gamma_matrices(m // 2))
    pairs = np.einsum("aij,bjk->abik", gs, gs)
    return 0.25 * np.einsum("...ab,abik->...ik", A, pairs)


# ---------------------------------------------------------------------------
# oriented rotation angles
# ---------------------------------------------------------------------------
def check_special_orthogonal(hol: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    hol = np.asarray(hol)
    if np.max(np.abs(np.imag(hol))) > tol:
        raise NotSpecialOrthogonal("monodromy is not real")
    R = np.real(hol)
    n = R.shape[0]
    if R.shape != (n, n) or n % 2:
        raise NotSpecialOrthogonal(f"need an even-dimensional square matrix, got {R.shape}")
    if np.linalg.norm(R.T @ R - np.eye(n)) > tol:
        raise NotSpecialOrthogonal("monodromy is not orthogonal")
    if abs(np.linalg.det(R) - 1) > tol:
        raise NotSpecialOrthogonal("monodromy has determinant -1")
    return R


def oriented_angles(hol: np.ndarray) -> np.ndarray:
    """Rotation angles in ``(-pi, pi]`` of an element of SO(2n), oriented consistently.

    The angle vector is defined up to permutations and an even number of sign
    flips; this is what a maximal-torus element of SO(2n) determines.
    """
    R = check_special_orthogonal(hol)
    T, Q = schur(R, output="real")
    n2 = R.shape[0]
    angles, reals = [], []
    k = 0
    while k < n2:
        if k + 1 < n2 and abs(T[k + 1, k]) > 1e-14:
            angles.append(math.atan2(T[k + 1, k], T[k, k]))
            k += 2
        else:
            reals.append(T[k, k])
            k += 1
    plus = sum(1 for r in reals if r > 0)
    minus = len(reals) - plus
    angles += [0.0] * (plus // 2) + [math.pi] * (minus // 2)
    if plus % 2:  # one +1 and one -1 left over: det would be -1
        raise NotSpecialOrthogonal("unpaired real eigenvalues")
    if np.linalg.det(Q) < 0 and angles:
        # flip one genuine 2x2 block (0 and pi are orientation-free)
        angles[0] = -angles[0] if abs(angles[0]) < math.pi else angles[0]
    out = np.array(angles)
    out = np.where(out <= -math.pi, out + 2 * math.pi, out)
    return out


def supertrace_from_angles(theta: np.ndarray) -> complex:
    return complex(np.prod(2j * np.sin(np.asarray(theta) / 2)))


def spin_supertrace(m: Monodromy | np.ndarray) -> complex:
    """Supertrace of the holonomy on the spinor module.

    Uses the transported spin lift when the monodromy carries one, otherwise the
    principal oriented angles (each in ``(-pi, pi]``): ``prod 2i sin(theta_j / 2)``.
    """
    if isinstance(m, Monodromy):
        hol, lift = m.hol, m.spin_lift
    else:
        hol, lift = np.asarray(m), None
    R = check_special_orthogonal(hol)
    if lift is not None:
        return complex(np.trace(chirality(R.shape[0] // 2) @ lift))
    return supertrace_from_angles(oriented_angles(R))


def _weyl_d_candidates(n: int):
    for perm in itertools.permutations(range(n)):
        for signs in itertools.product((1, -1), repeat=n):
            if sum(s < 0 for s in signs) % 2 == 0:
                yield perm, np.array(signs)


def _match_lift(prev: np.ndarray, principal: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Representative of ``principal`` modulo W(D_n) and 2 pi Z^n closest to ``prev``.

    Returns the representative, its distance to ``prev`` and the distance of the
    nearest representative that differs from it (the ambiguity margin).
    """
    best, best_jump, runner_up = None, np.inf, np.inf
    for perm, signs in _weyl_d_candidates(len(prev)):
        cand = signs * principal[list(perm)]
        cand = cand + 2 * np.pi * np.round((prev - cand) / (2 * np.pi))
        jump = float(np.max(np.abs(cand - prev)))
        if best is not None and np.max(np.abs(cand - best)) < 1e-9:
            continue
        if jump < best_jump:
            best, best_jump, runner_up = cand, jump, best_jump
        elif jump < runner_up:
            runner_up = jump
    return best, best_jump, runner_up


def continuous_angle_lift(conn: LoopConnection, n_s: int = 8, max_jump: float = 0.25,
                          max_depth: int = 30) -> tuple[np.ndarray, list[float]]:
    """Angles of ``hol(s * conn)`` lifted continuously from ``s = 0`` to ``s = 1``.

    Starts from ``n_s`` equally spaced values of ``s``.  Each new point is matched
    against the linear extrapolation of the last two lifted points, which tells a
    smooth crossing of 0 or pi apart from a reflected branch.  An interval is
    bisected when the angles move by more than ``max_jump`` or when another
    branch lies within three times the extrapolation error.
    """
    n = conn.n // 2
    prev = np.zeros(n)
    hist: list[tuple[float, np.ndarray]] = []
    svals = [0.0]
    grid = list(np.linspace(0, 1, n_s + 1)[1:])
    s_prev = 0.0
    depth = 0
    while grid:
        s = grid[0]
        principal = oriented_angles(parallel_transport(conn.scaled(s)).hol)
        if hist:
            s0, p0 = hist[-1]
            pred = prev + (prev - p0) * (s - s_prev) / (s_prev - s0)
        else:
            pred = prev
        cand, err, margin = _match_lift(pred, principal)
        jump = float(np.max(np.abs(cand - prev)))
        ambiguous = s_prev > 0 and margin < 3 * err
        if (jump > max_jump or ambiguous) and depth < max_depth:
            grid.insert(0, 0.5 * (s_prev + s))
            depth += 1
            continue
        grid.pop(0)
        hist = [(s_prev, prev)]
        prev, s_prev = cand, s
        svals.append(s)
        depth = 0
    return prev, svals


def zeta_pfaffian_circle(conn: LoopConnection, n_s: int = 8) -> complex:
    """Zeta-regularized Pfaffian of ``d/dt - A`` on the circle for an so(2n) loop.

    Per rotation number ``a`` (monodromy angle ``2 pi a``) the regularized product
    ``prod_m (a + m)`` is normalized to ``2i sin(pi a)``.  The angles come from the
    Floquet data of the monodromy and are lifted by continuity along
    ``s -> s * conn`` starting at the zero connection.
    """
    if conn.algebra != "so" or conn.n % 2:
        raise ValidationError("circle Pfaffian needs an so(2n) connection")
    theta, _ = continuous_angle_lift(conn, n_s)
    return supertrace_from_angles(theta)


def aw_check(conn: LoopConnection, n_s: int = 8) -> dict:
    """Both sides of the circle Atiyah-Witten identity ``pf_zeta = Tr_s hol_S``."""
    mono = parallel_transport(conn, spin=True)
    lhs = spin_supertrace(mono)
    theta, svals = continuous_angle_lift(conn, n_s)
    rhs = supertrace_from_angles(theta)
    R = np.real(mono.hol)
    det = float(np.real(np.linalg.det(np.eye(conn.n) - R)))
    K0, resid = floquet_reduce(mono)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "absdiff": abs(lhs - rhs),
        "norm_sq": abs(lhs) ** 2,
        "det_I_minus_hol": det,
        "norm_identity_relerr": abs(abs(lhs) ** 2 - det) / max(abs(det), 1e-300) if det else abs(lhs) ** 2,
        "angle_data": {
            "rotation_numbers": (theta / (2 * np.pi)).tolist(),
            "principal_rotation_numbers": (oriented_angles(R) / (2 * np.pi)).tolist(),
            "continuation_s": svals,
            "floquet_residual": resid,
        },
        "provenance": {"lhs": "spinor transport, chirality trace",
                       "rhs": "Floquet angles continued along s*A, 2i sin(pi a) per angle"},
    }


# ---------------------------------------------------------------------------
# synthetic loops and gauge transformations
# ---------------------------------------------------------------------------
def random_algebra_element(n: int, rng: np.random.Generator, algebra: str = "so") -> np.ndarray:
    X = rng.normal(size=(n, n))
    if algebra == "so":
        return (X - X.T) / 2
    Y = X + 1j * rng.normal(size=(n, n))
    if algebra == "u":
        return (Y - Y.conj().T) / 2
    return Y


def random_smooth_loop(n: int, K: int, rng: np.random.Generator, algebra: str = "so",
                       scale: float = 1.0, modes: int = 3) -> LoopConnection:
    """Band-limited loop ``C_0 + sum_k C_k cos 2 pi k t + D_k sin 2 pi k t``."""
    C = [random_algebra_element(n, rng, algebra) * scale]
    for k in range(1, modes + 1):
        C.append(random_algebra_element(n, rng, algebra) * scale / (k + 1))
        C.append(random_algebra_element(n, rng, algebra) * scale / (k + 1))
    t = np.arange(K) / K
    samples = np.broadcast_to(C[0], (K, n, n)).astype(complex)
    for k in range(1, modes + 1):
        samples = samples + np.cos(2 * np.pi * k * t)[:, None, None] * C[2 * k - 1]
        samples = samples + np.sin(2 * np.pi * k * t)[:, None, None] * C[2 * k]
    return LoopConnection(n, algebra, samples)


@dataclass
class GaugeTransform:
    """Contractible periodic gauge transformation ``g(t) = exp(f1(t) X1) exp(f2(t) X2)``.

    ``f_i`` are trigonometric polynomials, so ``g`` and ``g' g^-1`` are exact at every sample.
    """

    X1: np.ndarray
    X2: np.ndarray
    c1: np.ndarray  # (modes, 2) cos/sin coefficients
    c2: np.ndarray

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, algebra: str = "so", modes: int = 2,
               scale: float = 0.15) -> GaugeTransform:
        return cls(random_algebra_element(n, rng, algebra), random_algebra_element(n, rng, algebra),
                   rng.normal(size=(modes, 2)) * scale, rng.normal(size=(modes, 2)) * scale)

    @staticmethod
    def _f(c, t):
        k = np.arange(1, c.shape[0] + 1)[:, None]
        ph = 2 * np.pi * k * t[None, :]
        val = (c[:, :1] * np.cos(ph) + c[:, 1:] * np.sin(ph)).sum(0)
        der = (2 * np.pi * k * (-c[:, :1] * np.sin(ph) + c[:, 1:] * np.cos(ph))).sum(0)
        return val, der

    def at(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``g(t)`` and ``g'(t) g(t)^-1`` on an array of times."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        f1, d1 = self._f(self.c1, t)
        f2, d2 = self._f(self.c2, t)
        E1 = expm(f1[:, None, None] * self.X1)
        E2 = expm(f2[:, None, None] * self.X2)
        g = E1 @ E2
        E1i = np.linalg.inv(E1)
        dg = d1[:, None, None] * self.X1 + d2[:, None, None] * (E1 @ self.X2 @ E1i)
        return g, dg

    def apply(self, conn: LoopConnection) -> LoopConnection:
        t = np.arange(conn.K) / conn.K
        g, dg = self.at(t)
        new = g @ conn.samples @ np.linalg.inv(g) + dg
        if conn.algebra == "so":
            new = new.real.astype(complex)
            new = (new - np.swapaxes(new, 1, 2)) / 2
        return LoopConnection(conn.n, conn.algebra, new)


def cartan_block(angles) -> np.ndarray:
    """Block-diagonal so(2n) element rotating plane ``j`` with speed ``angles[j]``."""
    angles = np.asarray(angles, dtype=float)
    n = len(angles)
    A = np.zeros((2 * n, 2 * n))
    for j, a in enumerate(angles):
        A[2 * j + 1, 2 * j] = a
        A[2 * j, 2 * j + 1] = -a
    return A
