import numpy as np
import pytest
from scipy import integrate

from conftest import CENTER, SIGMA, free_trajectory, gauss_hermite_mean, gaussian_packet, swave_packet
from spinlab import qpacket as qp
from spinlab.errors import (
    InvalidParameterError,
    OriginOverlapError,
    QuadratureError,
    SymmetryError,
    TruncationError,
)
from spinlab.relkin import UnitSystem

SQ2 = 1 / np.sqrt(2)


# -- independent oracles -------------------------------------------------------

def oracle_spin_shift(center, sigma, spin_dir):
    """<(P x s)/P^2> for a product state with unit spin direction ``spin_dir``."""
    s = np.asarray(spin_dir, dtype=float)[:, None, None, None]
    return gauss_hermite_mean(lambda P: np.cross(P, s, axis=0) / np.sum(P**2, axis=0), np.asarray(center), sigma)


def oracle_swave_LQz(width):
    """<1 - cos^2 theta> for the |P| exp(-P^2/4w^2) profile, in spherical coordinates."""
    rho = lambda r: r**2 * np.exp(-r**2 / (2 * width**2)) * r**2
    num = integrate.dblquad(lambda mu, r: rho(r) * (1 - mu**2), 0, 12 * width, -1, 1, epsabs=1e-14)[0]
    den = integrate.dblquad(lambda mu, r: rho(r), 0, 12 * width, -1, 1, epsabs=1e-14)[0]
    return num / den


def test_oracle_swave_is_two_thirds():
    # the analytic identity (P x s) x P = s P^2 - P (s.P) with isotropic averaging gives 2/3
    assert oracle_swave_LQz(0.2) == pytest.approx(2 / 3, rel=1e-10)


def test_oracle_narrow_limit():
    # second-order expansion of <P_x / P^2> about the packet centre: 1/p - sigma^2/p^3
    got = oracle_spin_shift(CENTER, SIGMA, (0, 0, 1))[1]
    p = CENTER[0]
    assert got == pytest.approx(-(1 / p - SIGMA**2 / p**3), rel=1e-4)


# -- grid and factories ----------------------------------------------------------

def test_grid_geometry():
    g = qp.MomentumGrid(8, (-1, -1, -1), (1, 1, 1))
    np.testing.assert_allclose(g.h, 0.25)
    np.testing.assert_allclose(g.axes[0], -1 + 0.125 + 0.25 * np.arange(8))
    assert not np.any(g.p2 == 0)


@pytest.mark.parametrize("args", [
    (4, (-1, -1, -1), (1, 1, 1)),
    (8, (1, -1, -1), (-1, 1, 1)),
    (9, (-1, -1, -1), (1, 1, 1)),  # node at the origin
])
def test_grid_rejects(args):
    with pytest.raises(InvalidParameterError):
        qp.MomentumGrid(*args)


def test_gaussian_packet_basics(spin_up):
    assert spin_up.norm == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(qp.expect_sigma(spin_up), (0, 0, 1), atol=1e-12)
    np.testing.assert_allclose(qp.expect_momentum(spin_up), CENTER, atol=1e-10)
    assert spin_up.boundary_mass() <= 1e-10
    assert spin_up.origin_mass() <= 1e-10


@pytest.mark.parametrize("chi, sigma", [
    ((1, 1), (1, 0, 0)),
    ((1, 1j), (0, 1, 0)),
    ((0, 2), (0, 0, -1)),
])
def test_gaussian_packet_spin_states(chi, sigma):
    np.testing.assert_allclose(qp.expect_sigma(gaussian_packet(32, chi=chi)), sigma, atol=1e-12)


def test_gaussian_packet_errors():
    grid = qp.MomentumGrid.cube(32, 0.4, (0.1, 0, 0))
    with pytest.raises(OriginOverlapError):
        qp.make_gaussian_packet(grid, (0.1, 0, 0), 0.05, (1, 0))
    small = qp.MomentumGrid.cube(32, 3 * SIGMA, CENTER)
    with pytest.raises(TruncationError):
        qp.make_gaussian_packet(small, CENTER, SIGMA, (1, 0))
    grid = qp.MomentumGrid.cube(32, 8 * SIGMA, CENTER)
    with pytest.raises(InvalidParameterError):
        qp.make_gaussian_packet(grid, CENTER, SIGMA, (0, 0))


def test_origin_validation_catches_hand_built_packet():
    grid = qp.MomentumGrid.cube(32, 1.0)
    f = np.exp(-grid.p2 / (4 * 0.1**2))
    amp = np.stack([f, 0 * f])
    psi = qp.SpinorWavepacket(grid, amp / np.sqrt(np.sum(f**2) * grid.cell_volume))
    with pytest.raises(OriginOverlapError):
        qp.expect_position_Q(psi)
    with pytest.raises(OriginOverlapError):
        qp.angular_decomposition(psi)


# -- canonical position ------------------------------------------------------------

def test_q_of_unphased_packet_is_zero(spin_up):
    np.testing.assert_allclose(qp.expect_position_q(spin_up), 0, atol=1e-14)


def test_q_translation_phase():
    x0 = np.array([1.0, 2.0, 3.0])
    q = qp.expect_position_q(qp.apply_translation(gaussian_packet(64), x0))
    np.testing.assert_allclose(q, x0, rtol=1e-2)


def test_q_translation_second_order():
    x0 = np.array([1.0, 2.0, 3.0])
    errs = [np.linalg.norm(qp.expect_position_q(qp.apply_translation(gaussian_packet(n), x0)) - x0)
            for n in (32, 64)]
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_q_translation_respects_hbar():
    u = UnitSystem(hbar=0.5)
    x0 = np.array([0.5, 0, 0])
    q = qp.expect_position_q(qp.apply_translation(gaussian_packet(64), x0, u), u)
    np.testing.assert_allclose(q, x0, rtol=1e-2, atol=1e-12)


def test_imaginary_residual_detected():
    grid = qp.MomentumGrid(16, (0.5, -0.5, -0.5), (1.5, 0.5, 0.5))
    ramp = grid.mesh[0] - 0.5
    amp = np.stack([ramp, 0 * ramp]) / np.sqrt(np.sum(ramp**2) * grid.cell_volume)
    with pytest.raises(QuadratureError):
        qp.expect_position_q(qp.SpinorWavepacket(grid, amp))


# -- spin-corrected position ----------------------------------------------------------

def test_spin_shift_matches_oracle(spin_up):
    got = qp.spin_shift(spin_up)
    np.testing.assert_allclose(got, oracle_spin_shift(CENTER, SIGMA, (0, 0, 1)), atol=1e-9)


def test_spin_shift_narrow_limit(spin_up):
    got = qp.spin_shift(spin_up)
    expected = np.cross(CENTER, (0, 0, 1)) / np.dot(CENTER, CENTER)
    np.testing.assert_allclose(got, expected, rtol=2e-2, atol=1e-12)
    assert got[1] == pytest.approx(-4 / 3, rel=2e-2)


def test_spin_shift_width_refinement():
    expected = -1 / CENTER[0]
    errs = []
    for sigma in (SIGMA, SIGMA / 2):
        psi = gaussian_packet(48, sigma=sigma)
        errs.append(abs(qp.spin_shift(psi)[1] - expected))
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_helicity_state_has_no_longitudinal_shift():
    psi = gaussian_packet(48, chi=(SQ2, SQ2))
    dq = qp.expect_position_Q(psi) - qp.expect_position_q(psi)
    assert abs(dq[0]) <= 1e-10


def test_shift_independent_of_translation_phase(spin_up):
    moved = qp.apply_translation(spin_up, (1.0, -2.0, 0.5))
    np.testing.assert_allclose(qp.spin_shift(moved), qp.spin_shift(spin_up), atol=1e-12)


def test_Q_minus_q_is_spin_shift(spin_up):
    moved = qp.apply_translation(spin_up, (0.3, 0.1, 0.0))
    diff = qp.expect_position_Q(moved) - qp.expect_position_q(moved)
    np.testing.assert_allclose(diff, qp.spin_shift(moved), atol=1e-14)


# -- report ----------------------------------------------------------------------

def test_report_product_state(spin_up):
    rep = qp.delta_q_report(spin_up)
    assert rep.classical_deviation <= 1e-12
    np.testing.assert_array_equal(rep.delta_q, rep.Q - rep.q)
    assert rep.imag_residual <= 1e-8
    np.testing.assert_allclose(rep.sigma, (0, 0, 1), atol=1e-12)


def test_report_velocity(spin_up):
    rep = qp.delta_q_report(spin_up)
    oracle = gauss_hermite_mean(lambda P: P / np.sqrt(1 + np.sum(P**2, axis=0)), np.asarray(CENTER), SIGMA)
    np.testing.assert_allclose(rep.v, oracle, atol=1e-9)
    # O(sigma^2) away from the centre value 0.6
    assert rep.v[0] == pytest.approx(0.6, abs=5 * SIGMA**2)


def test_report_entangled_state_exposes_deviation():
    grid = qp.MomentumGrid.cube(32, 8 * SIGMA, CENTER)
    base = qp.make_gaussian_packet(grid, CENTER, SIGMA, (1, 0))
    # spin direction tied to P_y: not a product state
    theta = (grid.mesh[1] / SIGMA) * 0.8
    f = base.amp[0]
    amp = np.stack([f * np.cos(theta), f * np.sin(theta)])
    rep = qp.delta_q_report(qp.SpinorWavepacket(grid, amp))
    assert rep.classical_deviation > 1e-3


# -- free evolution ----------------------------------------------------------------------

def test_evolve_zero_time_identity(spin_up):
    assert qp.evolve_free(spin_up, 0.0, 1.0) is spin_up


def test_evolve_preserves_multiplicative_expectations(spin_up):
    later = qp.evolve_free(spin_up, 7.5, 1.0)
    assert later.norm == pytest.approx(spin_up.norm, abs=1e-14)
    np.testing.assert_allclose(qp.expect_momentum(later), qp.expect_momentum(spin_up), atol=1e-12)
    np.testing.assert_allclose(qp.expect_sigma(later), qp.expect_sigma(spin_up), atol=1e-12)
    np.testing.assert_allclose(qp.spin_shift(later), qp.spin_shift(spin_up), atol=1e-12)
    a0, a1 = qp.angular_decomposition(spin_up), qp.angular_decomposition(later)
    np.testing.assert_allclose(a1.LQ - a1.Lq, a0.LQ - a0.Lq, atol=1e-12)


def test_trajectory_shift_constant():
    tr, _ = free_trajectory(64)
    assert tr.shift_variation <= 1e-6
    assert len(tr.rows()) == 11
    assert tuple(tr.rows()[0]) == ("t", "qx", "qy", "qz", "Qx", "Qy", "Qz")


def test_trajectory_slope_converges_to_velocity():
    (t32, r32), (t64, r64) = free_trajectory(32), free_trajectory(64)
    e32 = np.linalg.norm(t32.slope - r32.v) / np.linalg.norm(r32.v)
    e64 = np.linalg.norm(t64.slope - r64.v) / np.linalg.norm(r64.v)
    assert 3.5 <= e32 / e64 <= 4.5
    # Richardson extrapolation of the O(h^2) stencil error
    extrap = (4 * t64.slope - t32.slope) / 3
    assert np.linalg.norm(extrap - r64.v) / np.linalg.norm(r64.v) <= 1e-3


def test_trajectory_input_errors(spin_up):
    with pytest.raises(InvalidParameterError):
        qp.trajectory_expectation(spin_up, [], 1.0)
    with pytest.raises(InvalidParameterError):
        qp.trajectory_expectation(spin_up, [1.0, 0.5], 1.0)


# -- s-wave and angular momentum ----------------------------------------------------------

def test_swave_basics():
    psi = swave_packet()
    np.testing.assert_allclose(qp.expect_momentum(psi), 0, atol=1e-10)
    np.testing.assert_allclose(qp.expect_sigma(psi), (0, 0, 1), atol=1e-12)
    np.testing.assert_allclose(qp.angular_decomposition(psi).Lq, 0, atol=1e-8)


def test_swave_needs_symmetric_grid():
    with pytest.raises(SymmetryError):
        qp.make_swave_packet(qp.MomentumGrid(32, (-1, -1, -1), (1.2, 1, 1)), 0.1, (1, 0))


def test_swave_LQz_two_thirds():
    rep = qp.angular_decomposition(swave_packet())
    assert rep.LQ[2] == pytest.approx(oracle_swave_LQz(0.2), rel=1e-3)
    np.testing.assert_allclose(rep.spin_half_sigma, (0, 0, 0.5), atol=1e-12)
    np.testing.assert_allclose(rep.sigma_prime, (0, 0, 0.5 - 2 / 3), atol=1e-10)


@pytest.mark.parametrize("make", [
    lambda: swave_packet(),
    lambda: swave_packet(32, chi=(SQ2, 1j * SQ2)),
    lambda: gaussian_packet(32, center=(0.0, 0.0, 0.75)),
    lambda: gaussian_packet(32, chi=(0.6, 0.8j)),
    lambda: qp.apply_translation(gaussian_packet(32, center=(0.3, 0.5, -0.4), chi=(1, 1)), (1.0, -1.0, 2.0)),
])
def test_J_identity(make):
    rep = qp.angular_decomposition(make())
    np.testing.assert_allclose(rep.J_from_q, rep.J_from_Q, atol=1e-10)
    np.testing.assert_array_equal(rep.J_from_q, rep.Lq + rep.spin_half_sigma)


def test_longitudinal_spin_LQ_transverse():
    center, sigma = (0.0, 0.0, 0.75), SIGMA
    rep = qp.angular_decomposition(gaussian_packet(64, center=center))
    # LQ_z = hbar <P_perp^2 / P^2>, the transverse-spread correction
    oracle = gauss_hermite_mean(lambda P: (P[0]**2 + P[1]**2) / np.sum(P**2, axis=0), np.asarray(center), sigma)
    assert rep.LQ[2] == pytest.approx(oracle, rel=1e-6)
    assert abs(rep.LQ[2]) <= 3 * (sigma / 0.75) ** 2
    np.testing.assert_allclose(rep.LQ[:2], 0, atol=1e-12)


def test_orbital_angular_momentum_of_shifted_packet():
    # <q x P> = x0 x <P> for a translated product packet, up to the O(h^2) stencil error
    x0 = np.array([0.0, 1.0, 0.0])
    psi = qp.apply_translation(gaussian_packet(64), x0)
    rep = qp.angular_decomposition(psi)
    np.testing.assert_allclose(rep.Lq, np.cross(x0, CENTER), rtol=2e-2, atol=1e-12)


def test_quadrature_deterministic(spin_up):
    a = qp.delta_q_report(spin_up)
    b = qp.delta_q_report(spin_up)
    assert a.delta_q.tobytes() == b.delta_q.tobytes()
    assert a.v.tobytes() == b.v.tobytes()
