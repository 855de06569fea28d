"""Classical spinning particle: Moller shift, hidden momentum, trajectories.

All lengths/times/masses follow the :class:`~spinlab.relkin.UnitSystem`
passed in; the Coulomb field uses Gaussian units (``E = e r_hat / r^2``).
Spin is held constant along a trajectory (no torque model).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DomainViolationError,
    InvalidParameterError,
    SingularFieldError,
    SuperluminalError,
)
from .relkin import (
    MAX_BETA,
    NATURAL,
    UnitSystem,
    _check_mass,
    _check_speed,
    gamma,
    momentum_from_velocity,
    energy,
    vec3,
    velocity_from_momentum,
)

# guards 0/0 in relative deviations (free particle: both sides vanish)
DEVIATION_FLOOR = 1e-300
LOW_SPEED_LIMIT = 0.05


@dataclass(frozen=True)
class ClassicalSpinParticle:
    m: float
    q: np.ndarray
    P: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        _check_mass(self.m)
        object.__setattr__(self, "q", vec3(self.q, "position"))
        object.__setattr__(self, "P", vec3(self.P, "momentum"))
        object.__setattr__(self, "S", vec3(self.S, "spin"))


@dataclass(frozen=True)
class ConstantForce:
    F: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "F", vec3(self.F, "force"))

    def __call__(self, q, t):
        return self.F


@dataclass(frozen=True)
class CoulombForce:
    """Force ``test_charge * E`` from a fixed point charge."""

    source_charge: float
    source_position: np.ndarray
    test_charge: float

    def __post_init__(self):
        object.__setattr__(self, "source_position", vec3(self.source_position, "source_position"))
        if not (np.isfinite(self.source_charge) and np.isfinite(self.test_charge)):
            raise InvalidParameterError("charges must be finite")

    def __call__(self, q, t):
        return self.test_charge * coulomb_field(self.source_charge, self.source_position, q)


ForceSpec = ConstantForce | CoulombForce


@dataclass
class Trajectory:
    """Uniformly sampled kinematic history.

    Each of ``q, P, v, dr, dP`` has shape ``(n_rows, 3)``; ``dr`` is the Moller
    shift and ``dP`` the hidden momentum ``S x F / (m c^2)`` at each row.
    """

    dt: float
    t: np.ndarray
    q: np.ndarray
    P: np.ndarray
    v: np.ndarray
    dr: np.ndarray
    dP: np.ndarray
    S: np.ndarray = field(default_factory=lambda: np.zeros(3))
    m: float = 1.0

    COLUMNS = ("t", "qx", "qy", "qz", "Px", "Py", "Pz", "vx", "vy", "vz",
               "drx", "dry", "drz", "dPx", "dPy", "dPz")

    def __len__(self):
        return len(self.t)

    @property
    def hidden_velocity(self):
        """Hidden momentum per unit rest mass."""
        return self.dP / self.m

    def rows(self):
        data = np.column_stack([self.t, self.q, self.P, self.v, self.dr, self.dP])
        return [dict(zip(self.COLUMNS, map(float, r))) for r in data]


@dataclass(frozen=True)
class EMScenario:
    """Magnetic moment ``M`` in a field given explicitly (``E``) or by a point charge.

    ``separation`` is the moment's position relative to the charge ``e``.
    """

    M: np.ndarray
    E: np.ndarray | None = None
    e: float | None = None
    separation: np.ndarray | None = None
    k1: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "M", vec3(self.M, "moment"))
        if (self.E is None) == (self.e is None):
            raise InvalidParameterError("give exactly one of an explicit E or a point charge e")
        if self.E is not None:
            object.__setattr__(self, "E", vec3(self.E, "E"))
        else:
            if self.separation is None:
                raise InvalidParameterError("point-charge source needs a separation")
            object.__setattr__(self, "separation", vec3(self.separation, "separation"))
        if not np.isfinite(self.k1):
            raise InvalidParameterError("k1 must be finite")

    def field(self) -> np.ndarray:
        if self.E is not None:
            return self.E
        return coulomb_field(self.e, np.zeros(3), self.separation)


def moller_shift(S, v, m, u: UnitSystem = NATURAL) -> np.ndarray:
    """Centre-of-mass offset ``(S x v)/(m c^2)`` of a spinning body moving at ``v``."""
    S = vec3(S, "spin")
    v = vec3(v, "velocity")
    _check_mass(m)
    _check_speed(v, u)
    return np.cross(S, v) / (m * u.c**2)


def hidden_momentum_accel(S, a, u: UnitSystem = NATURAL) -> np.ndarray:
    S = vec3(S, "spin")
    a = vec3(a, "acceleration")
    return np.cross(S, a) / u.c**2


def hidden_momentum_force(S, F, m, u: UnitSystem = NATURAL) -> np.ndarray:
    """Hidden momentum ``(S x F)/(m c^2)`` under an external force.

    Evaluated as ``hidden_momentum_accel(S, F/m)`` so the two forms agree bit
    for bit when the acceleration is passed as ``F/m``.
    """
    _check_mass(m)
    return hidden_momentum_accel(S, vec3(F, "force") / m, u)


def hidden_momentum_em(scn: EMScenario, u: UnitSystem = NATURAL) -> np.ndarray:
    """``k1 (M x E)/c^2``; ``k1 = -1`` gives the ``(E x M)/c^2`` ordering."""
    return scn.k1 * np.cross(scn.M, scn.field()) / u.c**2


def coulomb_field(e, r_source, r_eval) -> np.ndarray:
    d = vec3(r_eval, "r_eval") - vec3(r_source, "r_source")
    r = np.linalg.norm(d)
    if r == 0.0:
        raise SingularFieldError("field evaluated at the source charge")
    return e * d / r**3


def shift_scale_ratio(v, m, u: UnitSystem = NATURAL) -> float:
    """Ratio of the spin-1/2 position-shift prefactor ``2/(P0 v^2)`` to ``1/(m c^2)``.

    ``P0`` is the relativistic mass ``gamma m``; the closed form is
    ``2 c^2 / (gamma v^2)``.
    """
    v = vec3(v, "velocity")
    _check_mass(m)
    v2 = float(v @ v)
    if v2 == 0.0:
        raise DomainViolationError("ratio diverges at v = 0")
    P = momentum_from_velocity(v, m, u)
    P0 = energy(P, m, u) / u.c**2
    return (2.0 / (P0 * v2)) / (1.0 / (m * u.c**2))


def _rk4_step(q, P, t, dt, force, m, u):
    def rhs(q, P, t):
        return velocity_from_momentum(P, m, u), force(q, t)

    k1q, k1p = rhs(q, P, t)
    k2q, k2p = rhs(q + 0.5 * dt * k1q, P + 0.5 * dt * k1p, t + 0.5 * dt)
    k3q, k3p = rhs(q + 0.5 * dt * k2q, P + 0.5 * dt * k2p, t + 0.5 * dt)
    k4q, k4p = rhs(q + dt * k3q, P + dt * k3p, t + dt)
    q1 = q + dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
    P1 = P + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    return q1, P1


def integrate(p0: ClassicalSpinParticle, force: ForceSpec, dt: float, n: int,
              u: UnitSystem = NATURAL) -> Trajectory:
    """Fixed-step RK4 integration of ``dP/dt = F(q, t)``, ``dq/dt = v(P)``.

    Returns ``n + 1`` rows at ``t_k = k dt``.
    """
    if not (np.isfinite(dt) and dt > 0):
        raise InvalidParameterError(f"dt must be positive, got {dt!r}")
    if int(n) != n or n < 2:
        raise InvalidParameterError(f"need at least 2 steps, got {n!r}")
    n = int(n)
    m, S = p0.m, p0.S
    t = dt * np.arange(n + 1)
    qs = np.empty((n + 1, 3))
    Ps = np.empty((n + 1, 3))
    qs[0], Ps[0] = p0.q, p0.P
    for k in range(n):
        qs[k + 1], Ps[k + 1] = _rk4_step(qs[k], Ps[k], t[k], dt, force, m, u)

    vs = np.array([velocity_from_momentum(P, m, u) for P in Ps])
    beta = np.linalg.norm(vs, axis=1) / u.c
    if np.any(beta >= MAX_BETA):
        k = int(np.argmax(beta >= MAX_BETA))
        raise SuperluminalError(f"|v| reached c at step {k} (t = {t[k]!r})")
    dr = np.cross(S, vs) / (m * u.c**2)
    dP = np.array([hidden_momentum_force(S, force(q, tk), m, u) for q, tk in zip(qs, t)])
    return Trajectory(dt=dt, t=t, q=qs, P=Ps, v=vs, dr=dr, dP=dP, S=S.copy(), m=m)


def hidden_momentum_residuals(tr: Trajectory, m: float, u: UnitSystem = NATURAL):
    """Per-row relative deviation between ``m d(dr)/dt`` and the hidden momentum.

    The time derivative is a central difference, so only interior rows appear.
    """
    if len(tr) < 3:
        raise InvalidParameterError("need at least 3 trajectory rows")
    _check_mass(m)
    vmax = float(np.max(np.linalg.norm(tr.v, axis=1)))
    if vmax > LOW_SPEED_LIMIT * u.c:
        raise DomainViolationError(
            f"max |v| = {vmax:.4g} exceeds {LOW_SPEED_LIMIT} c; O(v^2/c^2) terms would dominate")
    deriv = m * (tr.dr[2:] - tr.dr[:-2]) / (2.0 * tr.dt)
    ref = tr.dP[1:-1]
    num = np.linalg.norm(deriv - ref, axis=1)
    den = np.maximum(np.linalg.norm(ref, axis=1), DEVIATION_FLOOR)
    return num / den


def verify_hidden_momentum(tr: Trajectory, m: float, u: UnitSystem = NATURAL) -> float:
    """Max relative deviation of ``m d(dr)/dt`` from ``S x F/(m c^2)`` over interior rows."""
    return float(np.max(hidden_momentum_residuals(tr, m, u)))


def circular_orbit(m, speed, source_charge, test_charge, S, source_position=(0.0, 0.0, 0.0),
                   u: UnitSystem = NATURAL):
    """Initial data for a circular Coulomb orbit in the x-y plane.

    The particle starts displaced along +x from the source, moving along +y.
    Requires an attractive pair (``source_charge * test_charge < 0``).
    """
    src = vec3(source_position, "source_position")
    k = -source_charge * test_charge
    if k <= 0:
        raise InvalidParameterError("circular orbit needs opposite charges")
    v = np.array([0.0, speed, 0.0])
    g = gamma(v, u)
    # gamma m v^2 / r = k / r^2
    r = k / (g * m * speed**2)
    particle = ClassicalSpinParticle(m=m, q=src + [r, 0.0, 0.0], P=momentum_from_velocity(v, m, u), S=S)
    return particle, CoulombForce(source_charge, src, test_charge)
