"""Momentum-space spin-1/2 wavepackets.

A packet is a two-component amplitude (spin up/down along z) sampled on a
cell-centred cubic momentum grid. Position acts as ``i hbar grad_P`` (second
order central differences, one-sided at the faces), every other operator is
multiplicative, and integrals are midpoint sums. The spin-corrected position

    Q = q + hbar (P x sigma) / P^2

is singular at ``P = 0``; packets must either keep negligible weight near the
origin or vanish there like ``|P|`` (the s-wave factory).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .errors import (
    InvalidParameterError,
    OriginOverlapError,
    QuadratureError,
    SymmetryError,
    TruncationError,
)
from .relkin import NATURAL, UnitSystem, _check_mass, vec3

NORM_TOL = 1e-10
BOUNDARY_TOL = 1e-10
ORIGIN_TOL = 1e-10
IMAG_TOL = 1e-8
ORIGIN_RADIUS_CELLS = 3


@dataclass(frozen=True)
class MomentumGrid:
    """Cell-centred grid with ``n`` nodes per axis spanning ``[lo, hi]``."""

    n: int
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8:
            raise InvalidParameterError(f"grid needs n >= 8 nodes per axis, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        lo, hi = vec3(self.lo, "lo"), vec3(self.hi, "hi")
        if np.any(hi <= lo):
            raise InvalidParameterError(f"grid bounds must satisfy hi > lo, got lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if all(np.any(ax == 0.0) for ax in self.axes):
            raise InvalidParameterError("grid contains the node P = 0; shift the bounds")

    @classmethod
    def cube(cls, n, half_width, center=(0.0, 0.0, 0.0)):
        c = vec3(center, "center")
        return cls(n, c - half_width, c + half_width)

    @property
    def h(self) -> np.ndarray:
        return (self.hi - self.lo) / self.n

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def axes(self):
        h = (self.hi - self.lo) / self.n
        return [self.lo[i] + (np.arange(self.n) + 0.5) * h[i] for i in range(3)]

    @cached_property
    def mesh(self) -> np.ndarray:
        """Node momenta, shape ``(3, n, n, n)``."""
        return np.stack(np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def p2(self) -> np.ndarray:
        P = self.mesh
        return P[0] ** 2 + P[1] ** 2 + P[2] ** 2

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros((self.n,) * 3, dtype=bool)
        mask[[0, -1], :, :] = True
        mask[:, [0, -1], :] = True
        mask[:, :, [0, -1]] = True
        return mask

    def is_symmetric(self) -> bool:
        return bool(np.all(self.lo == -self.hi))


@dataclass(frozen=True)
class SpinorWavepacket:
    """Two-component amplitude ``amp[s, i, j, k]`` on ``grid``.

    ``origin_regular`` marks packets whose amplitude vanishes like ``|P|`` at
    the origin, for which ``1/P^2`` weights stay integrable even though the
    packet has weight near ``P = 0``.
    """

    grid: MomentumGrid
    amp: np.ndarray
    origin_regular: bool = False

    def __post_init__(self):
        amp = np.asarray(self.amp, dtype=complex)
        if amp.shape != (2,) + (self.grid.n,) * 3:
            raise InvalidParameterError(f"amplitude shape {amp.shape} does not match grid")
        amp.setflags(write=False)
        object.__setattr__(self, "amp", amp)

    @property
    def density(self) -> np.ndarray:
        a = self.amp
        return a[0].real ** 2 + a[0].imag ** 2 + a[1].real ** 2 + a[1].imag ** 2

    @property
    def norm(self) -> float:
        return float(np.sum(self.density) * self.grid.cell_volume)

    def spin_density(self) -> np.ndarray:
        """Local ``psi^dagger sigma psi``, shape ``(3, n, n, n)``."""
        up, dn = self.amp
        cross = np.conj(up) * dn
        return np.stack([2.0 * cross.real, 2.0 * cross.imag,
                         np.abs(up) ** 2 - np.abs(dn) ** 2])

    def boundary_mass(self) -> float:
        return float(np.sum(self.density[self.grid.boundary_mask()]) * self.grid.cell_volume)

    def origin_mass(self) -> float:
        r = ORIGIN_RADIUS_CELLS * float(np.max(self.grid.h))
        near = self.grid.p2 <= r * r
        return float(np.sum(self.density[near]) * self.grid.cell_volume)

    def validate(self, *, need_origin=True):
        norm = self.norm
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidParameterError(f"packet norm {norm!r} differs from 1")
        bm = self.boundary_mass()
        if bm > BOUNDARY_TOL:
            raise TruncationError(f"boundary shell carries mass {bm:.3e}; enlarge the grid")
        if need_origin:
            check_origin(self)
        return self

    def with_amp(self, amp) -> "SpinorWavepacket":
        return replace(self, amp=amp)


def check_origin(psi: SpinorWavepacket):
    if psi.origin_regular:
        return
    om = psi.origin_mass()
    if om > ORIGIN_TOL:
        raise OriginOverlapError(
            f"mass {om:.3e} within {ORIGIN_RADIUS_CELLS} cells of P = 0; 1/P^2 is singular there")


def _normalized_spinor(chi) -> np.ndarray:
    chi = np.asarray(chi, dtype=complex)
    if chi.shape != (2,) or not np.all(np.isfinite(chi)):
        raise InvalidParameterError("spinor must have two finite components")
    nrm = np.linalg.norm(chi)
    if nrm == 0.0:
        raise InvalidParameterError("spinor must be nonzero")
    return chi / nrm


def _product_packet(grid, f, chi, origin_regular=False):
    chi = _normalized_spinor(chi)
    amp = chi[:, None, None, None] * f[None]
    nrm = np.sqrt(np.sum(np.abs(amp) ** 2) * grid.cell_volume)
    return SpinorWavepacket(grid, amp / nrm, origin_regular=origin_regular)


def make_gaussian_packet(grid: MomentumGrid, center, sigmaP: float, chi) -> SpinorWavepacket:
    """Product state ``N exp(-|P - center|^2 / (4 sigmaP^2)) chi``.

    The probability density has standard deviation ``sigmaP`` per axis.
    """
    center = vec3(center, "center")
    if not (np.isfinite(sigmaP) and sigmaP > 0):
        raise InvalidParameterError(f"sigmaP must be positive, got {sigmaP!r}")
    if np.linalg.norm(center) < 4.0 * sigmaP:
        raise OriginOverlapError(
            f"|center| = {np.linalg.norm(center):.4g} is below 4 sigmaP = {4 * sigmaP:.4g}")
    if np.any(grid.lo > center - 6 * sigmaP) or np.any(grid.hi < center + 6 * sigmaP):
        raise TruncationError("grid does not cover center +- 6 sigmaP on every axis")
    d = grid.mesh - center[:, None, None, None]
    f = np.exp(-(d[0] ** 2 + d[1] ** 2 + d[2] ** 2) / (4.0 * sigmaP**2))
    return _product_packet(grid, f, chi).validate()


def make_swave_packet(grid: MomentumGrid, radialWidth: float, chi) -> SpinorWavepacket:
    """Isotropic product state ``N |P| exp(-P^2 / (4 w^2)) chi``.

    The ``|P|`` factor keeps ``<1/P^2>`` finite, so the spin-corrected
    operators are well defined although the packet is centred on the origin.
    """
    if not grid.is_symmetric():
        raise SymmetryError("s-wave packet needs a grid symmetric about P = 0")
    if not (np.isfinite(radialWidth) and radialWidth > 0):
        raise InvalidParameterError(f"radialWidth must be positive, got {radialWidth!r}")
    p2 = grid.p2
    f = np.sqrt(p2) * np.exp(-p2 / (4.0 * radialWidth**2))
    return _product_packet(grid, f, chi, origin_regular=True).validate()


def apply_translation(psi: SpinorWavepacket, x0, u: UnitSystem = NATURAL) -> SpinorWavepacket:
    """Multiply by ``exp(-i P.x0 / hbar)``, shifting ``<q>`` by ``x0``."""
    x0 = vec3(x0, "x0")
    phase = np.exp(-1j * np.tensordot(x0, psi.grid.mesh, axes=1) / u.hbar)
    return psi.with_amp(psi.amp * phase[None])


def _integrate(psi, density):
    return np.sum(density, axis=(-3, -2, -1)) * psi.grid.cell_volume


def _position_terms(psi: SpinorWavepacket):
    """``G_j = sum_s conj(psi_s) d_j psi_s`` for j = x, y, z."""
    h = psi.grid.h
    out = []
    for j in range(3):
        d = np.gradient(psi.amp, h[j], axis=j + 1, edge_order=2)
        out.append(np.sum(np.conj(psi.amp) * d, axis=0))
    return out


def _q_with_residual(psi, u):
    G = _position_terms(psi)
    raw = np.array([1j * u.hbar * np.sum(g) * psi.grid.cell_volume for g in G])
    return raw.real, float(np.max(np.abs(raw.imag)))


def _check_imag(resid):
    if resid > IMAG_TOL:
        raise QuadratureError(f"position expectation has imaginary part {resid:.3e}")


def expect_position_q(psi: SpinorWavepacket, u: UnitSystem = NATURAL) -> np.ndarray:
    """Canonical position ``<i hbar grad_P>``."""
    q, resid = _q_with_residual(psi, u)
    _check_imag(resid)
    return q


def spin_shift(psi: SpinorWavepacket, u: UnitSystem = NATURAL) -> np.ndarray:
    """``hbar <(P x sigma) / P^2>``, the difference ``<Q> - <q>``."""
    check_origin(psi)
    P, p2 = psi.grid.mesh, psi.grid.p2
    s = psi.spin_density()
    return u.hbar * _integrate(psi, np.cross(P, s, axis=0) / p2)


def expect_position_Q(psi: SpinorWavepacket, u: UnitSystem = NATURAL) -> np.ndarray:
    return expect_position_q(psi, u) + spin_shift(psi, u)


def expect_momentum(psi: SpinorWavepacket) -> np.ndarray:
    return _integrate(psi, psi.grid.mesh * psi.density)


def expect_sigma(psi: SpinorWavepacket) -> np.ndarray:
    return _integrate(psi, psi.spin_density())


def expect_velocity(psi: SpinorWavepacket, m: float, u: UnitSystem = NATURAL) -> np.ndarray:
    """``<P c^2 / P0(P)>``."""
    return _integrate(psi, psi.grid.mesh * (u.c**2 / _energy_mesh(psi.grid, m, u)) * psi.density)


def _energy_mesh(grid, m, u):
    _check_mass(m)
    c = u.c
    return np.sqrt((m * c * c) ** 2 + grid.p2 * c * c)


@dataclass
class ExpectationReport:
    """Position-type expectation values of one packet.

    ``classical_delta_q`` is ``2 <(P x S)/P^2>`` with the global spin
    ``S = (hbar/2) <sigma>``; ``classical_deviation`` is its max-abs distance
    from ``delta_q``. It is quadrature noise for product states only.
    """

    q: np.ndarray
    Q: np.ndarray
    delta_q: np.ndarray
    P: np.ndarray
    v: np.ndarray
    sigma: np.ndarray
    imag_residual: float
    classical_delta_q: np.ndarray
    classical_deviation: float


def delta_q_report(psi: SpinorWavepacket, u: UnitSystem = NATURAL, m: float = 1.0) -> ExpectationReport:
    q, resid = _q_with_residual(psi, u)
    _check_imag(resid)
    dq = spin_shift(psi, u)
    sigma = expect_sigma(psi)
    S = 0.5 * u.hbar * sigma
    P, p2 = psi.grid.mesh, psi.grid.p2
    classical = 2.0 * _integrate(psi, np.cross(P, S[:, None, None, None], axis=0) * (psi.density / p2))
    Q = q + dq
    return ExpectationReport(
        q=q, Q=Q, delta_q=Q - q,
        P=expect_momentum(psi), v=expect_velocity(psi, m, u), sigma=sigma,
        imag_residual=resid, classical_delta_q=classical,
        classical_deviation=float(np.max(np.abs(classical - dq))),
    )


def evolve_free(psi: SpinorWavepacket, t: float, m: float, u: UnitSystem = NATURAL) -> SpinorWavepacket:
    """Free positive-energy evolution ``amp -> exp(-i P0 t / hbar) amp``."""
    E = _energy_mesh(psi.grid, m, u)
    if t == 0:
        return psi
    return psi.with_amp(psi.amp * np.exp(-1j * E * (t / u.hbar))[None])


@dataclass
class PacketTrajectory:
    """``<q>(t)`` and ``<Q>(t)`` with a least-squares line through ``<q>``.

    ``linear_residual`` is the max-abs deviation of ``<q>`` from the fit and
    ``shift_variation`` the max-abs change of ``<Q> - <q>`` over the window.
    """

    t: np.ndarray
    q: np.ndarray
    Q: np.ndarray
    slope: np.ndarray
    intercept: np.ndarray
    linear_residual: float
    shift_variation: float

    COLUMNS = ("t", "qx", "qy", "qz", "Qx", "Qy", "Qz")

    def rows(self):
        data = np.column_stack([self.t, self.q, self.Q])
        return [dict(zip(self.COLUMNS, map(float, r))) for r in data]


def trajectory_expectation(psi: SpinorWavepacket, times, m: float, u: UnitSystem = NATURAL) -> PacketTrajectory:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise InvalidParameterError("times must be a nonempty 1-d sequence")
    if np.any(np.diff(times) <= 0):
        raise InvalidParameterError("times must be strictly ascending")
    qs, Qs = [], []
    for t in times:
        phi = evolve_free(psi, t, m, u)
        q = expect_position_q(phi, u)
        qs.append(q)
        Qs.append(q + spin_shift(phi, u))
    qs, Qs = np.array(qs), np.array(Qs)
    if times.size >= 2:
        A = np.column_stack([times, np.ones_like(times)])
        coef, *_ = np.linalg.lstsq(A, qs, rcond=None)
        slope, intercept = coef[0], coef[1]
    else:
        slope, intercept = np.zeros(3), qs[0]
    fit = times[:, None] * slope + intercept
    shifts = Qs - qs
    return PacketTrajectory(
        t=times, q=qs, Q=Qs, slope=slope, intercept=intercept,
        linear_residual=float(np.max(np.abs(qs - fit))),
        shift_variation=float(np.max(np.abs(shifts - shifts[0]))),
    )


@dataclass
class AngMomReport:
    """Orbital/spin split of ``J`` for the canonical and spin-corrected positions (units of hbar)."""

    Lq: np.ndarray
    LQ: np.ndarray
    spin_half_sigma: np.ndarray
    sigma_prime: np.ndarray
    J_from_q: np.ndarray
    J_from_Q: np.ndarray
    imag_residual: float = field(default=0.0)

    def as_row(self) -> dict:
        row = {}
        for prefix, vec in [("Lq", self.Lq), ("LQ", self.LQ), ("Shalf", self.spin_half_sigma),
                            ("Sprime", self.sigma_prime), ("Jq", self.J_from_q), ("JQ", self.J_from_Q)]:
            for axis, val in zip("xyz", vec):
                row[prefix + axis] = float(val)
        return row


def angular_decomposition(psi: SpinorWavepacket, u: UnitSystem = NATURAL) -> AngMomReport:
    """``L = q x P`` and ``L_Q = Q x P``, with the new spin defined as ``J - L_Q``."""
    check_origin(psi)
    P, p2 = psi.grid.mesh, psi.grid.p2
    G = _position_terms(psi)
    # (q x P)_i = eps_ijk q_j P_k; q_j and P_k commute for j != k
    vol = psi.grid.cell_volume
    raw = 1j * u.hbar * np.array([
        np.sum(G[1] * P[2] - G[2] * P[1]),
        np.sum(G[2] * P[0] - G[0] * P[2]),
        np.sum(G[0] * P[1] - G[1] * P[0]),
    ]) * vol
    resid = float(np.max(np.abs(raw.imag)))
    _check_imag(resid)
    Lq = raw.real
    s = psi.spin_density()
    # ((P x sigma) x P) / P^2 = sigma - P (P . sigma) / P^2
    extra = s - P * (np.sum(P * s, axis=0) / p2)
    LQ = Lq + u.hbar * _integrate(psi, extra)
    half = 0.5 * u.hbar * expect_sigma(psi)
    Jq = Lq + half
    sigma_prime = Jq - LQ
    return AngMomReport(Lq=Lq, LQ=LQ, spin_half_sigma=half, sigma_prime=sigma_prime,
                        J_from_q=Jq, J_from_Q=LQ + sigma_prime, imag_residual=resid)
