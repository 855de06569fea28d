"""Special-relativistic kinematics kernel.

Conventions
-----------
* Metric signature (+, -, -, -), index order (t, x, y, z).
* ``pure_boost(v)`` maps rest-frame coordinates to a frame in which the object
  moves with velocity ``+v``: ``m[0, 0] = gamma`` and ``m[0, i] = gamma v_i / c``.
* Three-vectors are plain ``numpy`` arrays of shape ``(3,)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DecompositionError,
    InvalidParameterError,
    NumericDegradationError,
    SuperluminalError,
)

ETA = np.diag([1.0, -1.0, -1.0, -1.0])

# |v|/c must stay strictly below this to keep gamma finite.
MAX_BETA = 1.0 - 1e-12
LORENTZ_TOL = 1e-10
DECOMPOSE_TOL = 1e-8
NEAR_PI = 1e-6
SMALL_ANGLE = 1e-12


@dataclass(frozen=True)
class UnitSystem:
    """Speed of light and reduced Planck constant; both default to 1."""

    c: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("c", "hbar"):
            val = getattr(self, name)
            if not np.isfinite(val) or val <= 0:
                raise InvalidParameterError(f"{name} must be positive and finite, got {val!r}")


NATURAL = UnitSystem()


def vec3(x, name="vector") -> np.ndarray:
    """Coerce ``x`` to a finite float array of shape (3,)."""
    a = np.asarray(x, dtype=float)
    if a.shape != (3,):
        raise InvalidParameterError(f"{name} must have 3 components, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidParameterError(f"{name} has non-finite components: {a}")
    return a


def _check_mass(m):
    if not np.isfinite(m) or m <= 0:
        raise InvalidParameterError(f"mass must be positive, got {m!r}")


def _check_speed(v, u):
    beta = np.linalg.norm(v) / u.c
    if not beta < MAX_BETA:
        raise SuperluminalError(f"|v|/c = {beta!r} is not below 1")
    return beta


def gamma(v, u: UnitSystem = NATURAL) -> float:
    v = vec3(v, "velocity")
    _check_speed(v, u)
    return 1.0 / np.sqrt(1.0 - (v @ v) / u.c**2)


@dataclass(frozen=True)
class FourVector:
    t: float
    spatial: np.ndarray

    def minkowski_norm2(self) -> float:
        return self.t * self.t - float(self.spatial @ self.spatial)

    def as_array(self) -> np.ndarray:
        return np.concatenate(([self.t], self.spatial))


def four_momentum(P, m, u: UnitSystem = NATURAL) -> FourVector:
    """(E/c, P); its Minkowski norm is (m c)^2."""
    P = vec3(P, "momentum")
    return FourVector(energy(P, m, u) / u.c, P)


def energy(P, m, u: UnitSystem = NATURAL) -> float:
    """Total energy ``sqrt(m^2 c^4 + |P|^2 c^2)``; ``sqrt(m^2 + P^2)`` in natural units."""
    P = vec3(P, "momentum")
    _check_mass(m)
    c = u.c
    return float(np.sqrt((m * c * c) ** 2 + (P @ P) * c * c))


def velocity_from_momentum(P, m, u: UnitSystem = NATURAL) -> np.ndarray:
    P = vec3(P, "momentum")
    return P * u.c**2 / energy(P, m, u)


def momentum_from_velocity(v, m, u: UnitSystem = NATURAL) -> np.ndarray:
    v = vec3(v, "velocity")
    _check_mass(m)
    return m * gamma(v, u) * v


@dataclass(frozen=True)
class AxisAngle:
    """Rotation by ``angle`` in [0, pi] about unit ``axis``.

    The axis is the zero vector when the angle is below ``SMALL_ANGLE``.
    """

    axis: np.ndarray
    angle: float

    def matrix(self) -> np.ndarray:
        """3x3 rotation matrix (Rodrigues formula)."""
        k = np.asarray(self.axis, dtype=float)
        K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
        s, c = np.sin(self.angle), np.cos(self.angle)
        return np.eye(3) + s * K + (1.0 - c) * (K @ K)

    @property
    def vector(self) -> np.ndarray:
        return self.angle * np.asarray(self.axis)


class LorentzTransform:
    """Proper orthochronous Lorentz transformation stored as a 4x4 matrix.

    The constructor checks ``m^T eta m = eta``, ``det m = 1`` and ``m[0,0] >= 1``
    to within ``tol`` and raises :class:`InvalidParameterError` otherwise.
    Matrices are never re-orthogonalised.
    """

    __slots__ = ("m",)

    def __init__(self, m, *, tol: float = LORENTZ_TOL):
        m = np.array(m, dtype=float)
        if m.shape != (4, 4) or not np.all(np.isfinite(m)):
            raise InvalidParameterError("Lorentz transform must be a finite 4x4 matrix")
        m.setflags(write=False)
        self.m = m
        res = self.invariant_residual()
        if res > tol:
            raise InvalidParameterError(f"not a proper orthochronous Lorentz matrix (residual {res:.3e})")

    @classmethod
    def identity(cls) -> "LorentzTransform":
        return cls(np.eye(4))

    @classmethod
    def rotation(cls, r: AxisAngle) -> "LorentzTransform":
        m = np.eye(4)
        m[1:, 1:] = r.matrix()
        return cls(m)

    def metric_residual(self) -> float:
        return float(np.max(np.abs(self.m.T @ ETA @ self.m - ETA)))

    def det_residual(self) -> float:
        return float(abs(np.linalg.det(self.m) - 1.0))

    def invariant_residual(self) -> float:
        # orthochronous: m00 >= 1; a violation shows up as a residual
        return max(self.metric_residual(), self.det_residual(), max(0.0, 1.0 - self.m[0, 0]))

    def is_pure_boost(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.m - self.m.T)) <= tol)

    def inverse(self) -> "LorentzTransform":
        # eta m^T eta is the exact group inverse
        return LorentzTransform(ETA @ self.m.T @ ETA)

    def __matmul__(self, other: "LorentzTransform") -> "LorentzTransform":
        return compose(self, other)

    def __repr__(self):
        return f"LorentzTransform({self.m.tolist()!r})"


def pure_boost(v, u: UnitSystem = NATURAL) -> LorentzTransform:
    v = vec3(v, "velocity")
    _check_speed(v, u)
    beta = v / u.c
    b2 = float(beta @ beta)
    g = 1.0 / np.sqrt(1.0 - b2)
    m = np.eye(4)
    m[0, 0] = g
    m[0, 1:] = g * beta
    m[1:, 0] = g * beta
    if b2 > 0.0:
        m[1:, 1:] += (g - 1.0) / b2 * np.outer(beta, beta)
    return LorentzTransform(m)


def compose(a: LorentzTransform, b: LorentzTransform) -> LorentzTransform:
    """Matrix product ``a . b`` (apply ``b`` first)."""
    prod = a.m @ b.m
    try:
        return LorentzTransform(prod, tol=LORENTZ_TOL)
    except InvalidParameterError as exc:
        raise NumericDegradationError(f"composition left the Lorentz group: {exc}") from exc


def axis_angle_from_matrix(r: np.ndarray) -> AxisAngle:
    """Axis-angle form of a 3x3 rotation matrix.

    The angle comes from ``atan2(|antisymmetric part|, (trace - 1)/2)`` so that
    it stays accurate for tiny rotations; within ``NEAR_PI`` of pi the axis is
    taken from the symmetric part instead.
    """
    anti = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    s = 0.5 * np.linalg.norm(anti)
    c = 0.5 * (np.trace(r) - 1.0)
    angle = float(np.arctan2(s, c))
    if angle <= SMALL_ANGLE:
        return AxisAngle(np.zeros(3), angle)
    if abs(angle - np.pi) < NEAR_PI:
        sym = 0.5 * (r + r.T)
        w, vecs = np.linalg.eigh(sym)
        axis = vecs[:, int(np.argmin(np.abs(w - 1.0)))]
        # axis sign is arbitrary at exactly pi; otherwise follow the antisymmetric part
        if axis @ anti < 0:
            axis = -axis
        return AxisAngle(axis / np.linalg.norm(axis), angle)
    return AxisAngle(anti / (2.0 * s), angle)


def decompose_boost_rotation(L: LorentzTransform, u: UnitSystem = NATURAL):
    """Factor ``L = pure_boost(v) . R`` with ``R`` a spatial rotation.

    Returns
    -------
    v : ndarray
        Boost velocity, ``v_i = c L[i,0] / L[0,0]``.
    r : AxisAngle
        Rotation part.
    """
    m = L.m
    v = u.c * m[1:, 0] / m[0, 0]
    R = pure_boost(v, u).inverse().m @ m
    resid = max(np.max(np.abs(R[0, :] - [1, 0, 0, 0])), np.max(np.abs(R[1:, 0])))
    if resid > DECOMPOSE_TOL:
        raise DecompositionError(f"time block residual {resid:.3e} after removing boost")
    return v, axis_angle_from_matrix(R[1:, 1:])


def wigner_rotation(v1, v2, u: UnitSystem = NATURAL) -> AxisAngle:
    """Rotation part of ``pure_boost(v2) . pure_boost(v1)``."""
    L = compose(pure_boost(v2, u), pure_boost(v1, u))
    return decompose_boost_rotation(L, u)[1]


def thomas_rate(v, a, u: UnitSystem = NATURAL) -> np.ndarray:
    """Thomas precession angular velocity ``gamma^2/(gamma+1) (a x v)/c^2``."""
    v = vec3(v, "velocity")
    a = vec3(a, "acceleration")
    g = gamma(v, u)
    return g * g / (g + 1.0) * np.cross(a, v) / u.c**2


def thomas_step_angle(v, a, dt, u: UnitSystem = NATURAL) -> float:
    """Wigner angle between the rest frames at ``v`` and ``v + a dt``.

    Computed from ``pure_boost(v + a dt) . pure_boost(-v)``; tends to
    ``|thomas_rate(v, a)| dt`` as ``dt -> 0``.
    """
    v = vec3(v, "velocity")
    a = vec3(a, "acceleration")
    return wigner_rotation(-v, v + a * dt, u).angle
