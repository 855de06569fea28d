from functools import lru_cache

import numpy as np
import pytest

from spinlab import qpacket as qp

CENTER = (0.75, 0.0, 0.0)
SIGMA = 0.0375


@lru_cache(maxsize=None)
def gaussian_packet(n=64, center=CENTER, sigma=SIGMA, chi=(1, 0), half_width_sigmas=8.0):
    grid = qp.MomentumGrid.cube(n, half_width_sigmas * sigma, center)
    return qp.make_gaussian_packet(grid, center, sigma, chi)


@lru_cache(maxsize=None)
def swave_packet(n=64, width=0.2, chi=(1, 0)):
    return qp.make_swave_packet(qp.MomentumGrid.cube(n, 8 * width), width, chi)


@lru_cache(maxsize=None)
def free_trajectory(n):
    psi = gaussian_packet(n)
    return qp.trajectory_expectation(psi, np.linspace(0.0, 10.0, 11), 1.0), qp.delta_q_report(psi)


def gauss_hermite_mean(func, center, sigma, k=48):
    """E[func(P)] for P ~ N(center, sigma^2 I) by tensor Gauss-Hermite quadrature."""
    x, w = np.polynomial.hermite_e.hermegauss(k)
    w = w / w.sum()
    X, Y, Z = np.meshgrid(*(center[i] + sigma * x for i in range(3)), indexing="ij")
    W = w[:, None, None] * w[None, :, None] * w[None, None, :]
    vals = func(np.stack([X, Y, Z]))
    return np.sum(vals * W, axis=(-3, -2, -1))


@pytest.fixture
def spin_up():
    return gaussian_packet()


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when == "call" and "test_acceptance.py::test_criterion_" in rep.nodeid:
                name = rep.nodeid.split("::")[-1][len("test_criterion_"):]
                lines.append((name, outcome.upper()[:4], rep))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, rep in sorted(lines):
        num, _, label = name.partition("_")
        detail = dict(rep.user_properties).get("detail", "")
        terminalreporter.write_line(f"criterion {int(num):2d} {outcome}  {label:28s} {detail}")
