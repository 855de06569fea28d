"""Scenario dispatch: turns a validated :class:`ScenarioConfig` into table rows and checks."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .. import qpacket, relkin, spinpart
from ..errors import SpinLabError
from .config import ScenarioConfig
from .tables import PACKET_COLUMNS, TRAJECTORY_COLUMNS, write_table

METRIC_TOL = 1e-10
RECONSTRUCT_TOL = 1e-10
ORTHO_TOL = 1e-12


@dataclass
class Check:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)

    def as_dict(self):
        return {"name": self.name, "value": self.value, "tolerance": self.tolerance, "passed": self.passed}


@dataclass
class RunReport:
    scenario: str
    wall_time: float
    rows_emitted: int
    checks: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    columns: tuple = ()
    rows: list = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self):
        return {"scenario": self.scenario, "wall_time": self.wall_time, "rows": self.rows_emitted,
                "ok": self.ok, "checks": [c.as_dict() for c in self.checks], "metrics": self.metrics}


class ScenarioError(SpinLabError):
    """A module error raised while running a scenario, tagged with the scenario name."""


def _vec_metric(prefix, v):
    return {f"{prefix}{a}": float(x) for a, x in zip("xyz", v)}


def _cos(a, b):
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    return 0.0 if na == 0 or nb == 0 else abs(float(a @ b)) / (na * nb)


def _boost_compose(p, u):
    L = relkin.LorentzTransform.identity()
    rows, metric, recon = [], 0.0, 0.0
    for k, v in enumerate(p["velocities"], start=1):
        L = relkin.compose(relkin.pure_boost(v, u), L)
        w, r = relkin.decompose_boost_rotation(L, u)
        back = relkin.pure_boost(w, u).m @ relkin.LorentzTransform.rotation(r).m
        metric = max(metric, L.metric_residual(), L.det_residual())
        recon = max(recon, float(np.max(np.abs(back - L.m))))
        rows.append({"k": k, "vx": w[0], "vy": w[1], "vz": w[2],
                     "axis_x": r.axis[0], "axis_y": r.axis[1], "axis_z": r.axis[2], "angle": r.angle})
    checks = [Check("lorentz_invariants", metric, METRIC_TOL),
              Check("boost_rotation_reconstruction", recon, RECONSTRUCT_TOL)]
    return tuple(rows[0]), rows, checks, {}


def _thomas(p, u):
    v, a = p["velocity"], p["acceleration"]
    w = relkin.thomas_rate(v, a, u)
    wn = float(np.linalg.norm(w))
    rows, discs = [], []
    for i in range(p["levels"]):
        dt = p["dt"] / 2**i
        ang = relkin.thomas_step_angle(v, a, dt, u)
        disc = abs(ang - wn * dt) / (wn * dt)
        discs.append(disc)
        rows.append({"dt": dt, "wx": w[0], "wy": w[1], "wz": w[2],
                     "omega_dt": wn * dt, "wigner_angle": ang, "rel_discrepancy": disc})
    ratios = [discs[i] / discs[i + 1] for i in range(len(discs) - 1) if discs[i + 1] > 0]
    return tuple(rows[0]), rows, [Check("thomas_vs_wigner", discs[0], p["tolerance"])], {"halving_ratios": ratios}


def _moller(p, u):
    dr = spinpart.moller_shift(p["spin"], p["velocity"], p["mass"], u)
    rows = [{"drx": dr[0], "dry": dr[1], "drz": dr[2]}]
    ortho = max(_cos(dr, p["spin"]), _cos(dr, p["velocity"]))
    return tuple(rows[0]), rows, [Check("orthogonality", ortho, ORTHO_TOL)], {}


def _shift_ratio(p, u):
    rows, worst = [], 0.0
    for s in p["speeds"]:
        v = np.array([s, 0.0, 0.0])
        g = relkin.gamma(v, u)
        ratio = spinpart.shift_scale_ratio(v, p["mass"], u)
        closed = 2.0 * u.c**2 / (g * s * s)
        worst = max(worst, abs(ratio - closed) / closed)
        rows.append({"speed": s, "gamma": g, "ratio": ratio, "closed_form": closed})
    return tuple(rows[0]), rows, [Check("closed_form", worst, 1e-12)], {}


def _trajectory(p, u):
    tr = spinpart.integrate(p["particle"], p["force"], p["dt"], p["steps"], u)
    dev = spinpart.verify_hidden_momentum(tr, p["mass"], u)
    metrics = {"max_speed": float(np.max(np.linalg.norm(tr.v, axis=1))), **_vec_metric("final_P", tr.P[-1])}
    return TRAJECTORY_COLUMNS, tr.rows(), [Check("hidden_momentum_deviation", dev, p["tolerance"])], metrics


def _em(p, u):
    rows, ortho = [], 0.0
    for scn in p["scenarios"]:
        E = scn.field()
        dP = spinpart.hidden_momentum_em(scn, u)
        ortho = max(ortho, _cos(dP, scn.M), _cos(dP, E))
        rows.append({"k1": scn.k1, "Ex": E[0], "Ey": E[1], "Ez": E[2],
                     "dPx": dP[0], "dPy": dP[1], "dPz": dP[2]})
    return tuple(rows[0]), rows, [Check("orthogonality", ortho, ORTHO_TOL)], {}


def _free_packet(p, u):
    psi = p["packet"]
    if np.any(p["x0"]):
        psi = qpacket.apply_translation(psi, p["x0"], u)
    rep = qpacket.delta_q_report(psi, u, p["mass"])
    tr = qpacket.trajectory_expectation(psi, p["times"], p["mass"], u)
    slope_err = float(np.linalg.norm(tr.slope - rep.v) / np.linalg.norm(rep.v))
    checks = [
        Check("slope_vs_velocity", slope_err, p["slope_tolerance"]),
        Check("shift_constancy", tr.shift_variation, p["shift_tolerance"]),
        Check("imag_residual", rep.imag_residual, qpacket.IMAG_TOL),
        Check("classical_form_deviation", rep.classical_deviation, 1e-12),
    ]
    metrics = {**_vec_metric("slope", tr.slope), **_vec_metric("v", rep.v),
               **_vec_metric("delta_q", rep.delta_q), "linear_residual": tr.linear_residual}
    return PACKET_COLUMNS, tr.rows(), checks, metrics


def _angular(p, u):
    rep = qpacket.angular_decomposition(p["packet"], u)
    row = rep.as_row()
    gap = float(np.max(np.abs(rep.J_from_q - rep.J_from_Q)))
    return tuple(row), [row], [Check("J_identity", gap, 1e-10)], {}


_RUNNERS = {
    "boost-compose": _boost_compose,
    "thomas": _thomas,
    "moller": _moller,
    "hidden-momentum-trajectory": _trajectory,
    "em-dipole": _em,
    "free-packet": _free_packet,
    "angular-decomposition": _angular,
    "shift-ratio": _shift_ratio,
}


def run_scenario(cfg: ScenarioConfig, out=None, fmt=None, *, write=True) -> RunReport:
    """Run ``cfg`` and (optionally) write its table.

    ``out``/``fmt`` override the config's output block. Module errors are
    re-raised as :class:`ScenarioError` carrying the scenario name.
    """
    t0 = time.perf_counter()
    try:
        columns, rows, checks, metrics = _RUNNERS[cfg.scenario](cfg.params, cfg.units)
    except SpinLabError as exc:
        raise ScenarioError(f"{cfg.scenario}: {type(exc).__name__}: {exc}") from exc
    report = RunReport(cfg.scenario, time.perf_counter() - t0, len(rows), checks, metrics, columns, rows)
    if write:
        write_table(rows, fmt or cfg.output_format, out if out is not None else cfg.output_path, columns)
    return report
