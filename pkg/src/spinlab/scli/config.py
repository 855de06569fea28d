"""JSON scenario configuration: parsing and parse-time validation.

Every scenario shares the optional keys ``units`` (``{"c": .., "hbar": ..}``)
and ``output`` (``{"path": .., "format": "csv" | "json"}``); the remaining
keys depend on the scenario tag. See ``docs/config.md`` for the schema.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, SpinLabError
from ..relkin import UnitSystem
from .. import qpacket, spinpart

SCENARIOS = {
    "boost-compose": "compose a chain of pure boosts and split off the Wigner rotation",
    "thomas": "Thomas precession rate against the Wigner angle of successive boosts",
    "moller": "Moller centre-of-mass shift S x v / (m c^2)",
    "hidden-momentum-trajectory": "RK4 trajectory with Moller shift and hidden-momentum diagnostics",
    "em-dipole": "hidden momentum k1 (M x E)/c^2 of a magnetic moment",
    "free-packet": "free spin-1/2 wavepacket: <q>(t), <Q>(t) and the fitted velocity",
    "angular-decomposition": "orbital/spin split of J for the canonical and corrected positions",
    "shift-ratio": "ratio of the spin-1/2 position-shift prefactor to 1/(m c^2)",
}
FORMATS = ("csv", "json")


@dataclass
class ScenarioConfig:
    scenario: str
    units: UnitSystem
    params: dict
    output_path: str | None = None
    output_format: str = "csv"
    raw: dict = field(default_factory=dict, repr=False)


class _Fields:
    """Typed access to one JSON object, with key paths in every error."""

    def __init__(self, obj, path=""):
        if not isinstance(obj, dict):
            raise ConfigError("expected an object", path or "<root>")
        self.obj = obj
        self.path = path
        self.used = set()

    def _key(self, key):
        return f"{self.path}.{key}" if self.path else key

    def has(self, key):
        return key in self.obj

    def raw(self, key, default=...):
        self.used.add(key)
        if key not in self.obj:
            if default is ...:
                raise ConfigError("missing required field", self._key(key))
            return default
        return self.obj[key]

    def number(self, key, default=..., *, positive=False, nonneg=False):
        val = self.raw(key, default)
        if val is default and default is not ...:
            return val
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not np.isfinite(val):
            raise ConfigError(f"expected a finite number, got {val!r}", self._key(key))
        if positive and val <= 0:
            raise ConfigError(f"must be positive, got {val!r}", self._key(key))
        if nonneg and val < 0:
            raise ConfigError(f"must be non-negative, got {val!r}", self._key(key))
        return float(val)

    def integer(self, key, default=..., *, minimum=None):
        val = self.raw(key, default)
        if val is default and default is not ...:
            return val
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(f"expected an integer, got {val!r}", self._key(key))
        if minimum is not None and val < minimum:
            raise ConfigError(f"must be >= {minimum}, got {val!r}", self._key(key))
        return val

    def vector(self, key, default=...):
        val = self.raw(key, default)
        if val is default and default is not ...:
            return None if val is None else np.asarray(val, dtype=float)
        return _as_vector(val, self._key(key))

    def string(self, key, default=..., choices=None):
        val = self.raw(key, default)
        if not isinstance(val, str):
            raise ConfigError(f"expected a string, got {val!r}", self._key(key))
        if choices is not None and val not in choices:
            raise ConfigError(f"must be one of {', '.join(choices)}; got {val!r}", self._key(key))
        return val

    def sub(self, key, default=...):
        val = self.raw(key, default)
        if val is None:
            return None
        return _Fields(val, self._key(key))

    def finish(self):
        extra = sorted(set(self.obj) - self.used)
        if extra:
            raise ConfigError(f"unknown field(s): {', '.join(extra)}", self.path or "<root>")


def _as_vector(val, path):
    if (not isinstance(val, list) or len(val) != 3
            or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in val)):
        raise ConfigError(f"expected a list of 3 numbers, got {val!r}", path)
    arr = np.asarray(val, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ConfigError("components must be finite", path)
    return arr


def _check_speed(v, u, path):
    beta = float(np.linalg.norm(v)) / u.c
    if not beta < 1.0 - 1e-12:
        raise ConfigError(f"superluminal velocity: |v|/c = {beta:.6g} is not below 1", path)


def _spinor(f: _Fields, key="spinor"):
    val = f.raw(key, [1, 0])
    path = f._key(key)
    if not isinstance(val, list) or len(val) != 2:
        raise ConfigError("spinor must be a list of two entries (number or [re, im])", path)
    comps = []
    for i, c in enumerate(val):
        if isinstance(c, list) and len(c) == 2 and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in c):
            comps.append(complex(c[0], c[1]))
        elif isinstance(c, (int, float)) and not isinstance(c, bool):
            comps.append(complex(c))
        else:
            raise ConfigError(f"bad spinor component {c!r}", f"{path}[{i}]")
    chi = np.asarray(comps)
    if not np.all(np.isfinite(chi)) or np.linalg.norm(chi) == 0:
        raise ConfigError("spinor must be finite and nonzero", path)
    return chi


def _grid(f: _Fields, center, default_half_width, default_n=64):
    g = f.sub("grid", {})
    n = g.integer("n", default_n, minimum=8)
    if g.has("lo") or g.has("hi"):
        lo, hi = g.vector("lo"), g.vector("hi")
        if np.any(hi <= lo):
            raise ConfigError("grid bounds need hi > lo on every axis", g._key("hi"))
    else:
        hw = g.number("half_width", default_half_width, positive=True)
        lo, hi = center - hw, center + hw
    g.finish()
    try:
        return qpacket.MomentumGrid(n, lo, hi)
    except SpinLabError as exc:
        raise ConfigError(str(exc), f.path + ".grid" if f.path else "grid") from exc


def _times(f: _Fields):
    val = f.raw("times", {"start": 0.0, "stop": 10.0, "num": 11})
    path = f._key("times")
    if isinstance(val, dict):
        t = _Fields(val, path)
        start = t.number("start", 0.0)
        stop = t.number("stop")
        num = t.integer("num", minimum=1)
        t.finish()
        times = np.linspace(start, stop, num)
    elif isinstance(val, list) and val and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in val):
        times = np.asarray(val, dtype=float)
    else:
        raise ConfigError("times must be a nonempty list of numbers or {start, stop, num}", path)
    if np.any(np.diff(times) <= 0):
        raise ConfigError("times must be strictly ascending", path)
    return times


def _build(factory, path):
    try:
        return factory()
    except SpinLabError as exc:
        raise ConfigError(f"{type(exc).__name__}: {exc}", path) from exc


def _p_boost_compose(f, u):
    vals = f.raw("velocities")
    if not isinstance(vals, list) or not vals:
        raise ConfigError("expected a nonempty list of velocities", "velocities")
    vs = []
    for i, v in enumerate(vals):
        vec = _as_vector(v, f"velocities[{i}]")
        _check_speed(vec, u, f"velocities[{i}]")
        vs.append(vec)
    return {"velocities": vs}


def _p_thomas(f, u):
    v = f.vector("velocity")
    _check_speed(v, u, "velocity")
    a = f.vector("acceleration")
    dt = f.number("dt", 1e-4, positive=True)
    levels = f.integer("levels", 3, minimum=2)
    tol = f.number("tolerance", 1e-2, positive=True)
    if np.linalg.norm(np.cross(a, v)) == 0:
        raise ConfigError("acceleration parallel to velocity gives no precession to compare", "acceleration")
    vmax = float(np.linalg.norm(v + a * dt))
    if not vmax < u.c * (1 - 1e-12):
        raise ConfigError("v + a dt is superluminal", "dt")
    return {"velocity": v, "acceleration": a, "dt": dt, "levels": levels, "tolerance": tol}


def _mass(f):
    return f.number("mass", 1.0, positive=True)


def _p_moller(f, u):
    v = f.vector("velocity")
    _check_speed(v, u, "velocity")
    return {"spin": f.vector("spin"), "velocity": v, "mass": _mass(f)}


def _p_shift_ratio(f, u):
    speeds = f.raw("speeds")
    if (not isinstance(speeds, list) or not speeds
            or any(isinstance(s, bool) or not isinstance(s, (int, float)) for s in speeds)):
        raise ConfigError("expected a nonempty list of speeds", "speeds")
    for i, s in enumerate(speeds):
        if not 0 < s < u.c * (1 - 1e-12):
            raise ConfigError(f"speed must satisfy 0 < |v| < c, got {s!r}", f"speeds[{i}]")
    return {"speeds": [float(s) for s in speeds], "mass": _mass(f)}


def _p_trajectory(f, u):
    m = _mass(f)
    S = f.vector("spin")
    ff = f.sub("force")
    kind = ff.string("type", choices=("constant", "coulomb"))
    p = {"mass": m, "spin": S, "dt": f.number("dt", positive=True),
         "steps": f.integer("steps", minimum=2),
         "tolerance": f.number("tolerance", 1e-4, positive=True)}
    if kind == "constant":
        force = spinpart.ConstantForce(ff.vector("F"))
    else:
        try:
            force = spinpart.CoulombForce(ff.number("source_charge"), ff.vector("source_position", [0.0, 0.0, 0.0]),
                                          ff.number("test_charge"))
        except SpinLabError as exc:
            raise ConfigError(str(exc), "force") from exc
    ff.finish()
    if f.has("circular_speed"):
        if kind != "coulomb":
            raise ConfigError("circular_speed needs a coulomb force", "circular_speed")
        if f.has("position") or f.has("momentum"):
            raise ConfigError("give either circular_speed or position/momentum", "circular_speed")
        speed = f.number("circular_speed", positive=True)
        _check_speed(np.array([speed, 0, 0]), u, "circular_speed")
        try:
            particle, force = spinpart.circular_orbit(m, speed, force.source_charge, force.test_charge, S,
                                                      force.source_position, u)
        except SpinLabError as exc:
            raise ConfigError(str(exc), "circular_speed") from exc
    else:
        q = f.vector("position", [0.0, 0.0, 0.0])
        P = f.vector("momentum", [0.0, 0.0, 0.0])
        particle = spinpart.ClassicalSpinParticle(m=m, q=q, P=P, S=S)
        if kind == "coulomb" and np.array_equal(q, force.source_position):
            raise ConfigError("particle starts on the source charge (singular field)", "position")
    p["particle"] = particle
    p["force"] = force
    return p


def _p_em(f, u):
    M = f.vector("moment")
    has_E, has_q = f.has("E"), f.has("charge")
    if has_E == has_q:
        raise ConfigError("give exactly one of E or charge", "E")
    k1 = f.number("k1", None)
    if has_E:
        src = {"E": f.vector("E")}
    else:
        c = f.sub("charge")
        src = {"e": c.number("e"), "separation": c.vector("separation")}
        c.finish()
        if not np.any(src["separation"]):
            raise ConfigError("zero separation: field is singular at the charge", "charge.separation")
    k1s = [1.0, -1.0] if k1 is None else [k1]
    return {"scenarios": [spinpart.EMScenario(M=M, k1=k, **src) for k in k1s]}


def _p_free_packet(f, u):
    m = _mass(f)
    center = f.vector("center")
    sigma = f.number("sigmaP", positive=True)
    if np.linalg.norm(center) < 4 * sigma:
        raise ConfigError(
            f"origin overlap: |center| = {np.linalg.norm(center):.4g} is below 4 sigmaP = {4 * sigma:.4g}", "center")
    chi = _spinor(f)
    grid = _grid(f, center, 8.0 * sigma)
    if np.any(grid.lo > center - 6 * sigma) or np.any(grid.hi < center + 6 * sigma):
        raise ConfigError("grid does not cover center +- 6 sigmaP", "grid")
    packet = _build(lambda: qpacket.make_gaussian_packet(grid, center, sigma, chi), "grid")
    return {"mass": m, "center": center, "sigmaP": sigma, "spinor": chi, "grid": grid, "packet": packet,
            "x0": f.vector("x0", [0.0, 0.0, 0.0]), "times": _times(f),
            "slope_tolerance": f.number("slope_tolerance", 1e-2, positive=True),
            "shift_tolerance": f.number("shift_tolerance", 1e-6, positive=True)}


def _p_angular(f, u):
    pk = f.sub("packet")
    kind = pk.string("kind", choices=("swave", "gaussian"))
    chi = _spinor(f)
    if kind == "swave":
        w = pk.number("radialWidth", positive=True)
        pk.finish()
        grid = _grid(f, np.zeros(3), 8.0 * w)
        if not grid.is_symmetric():
            raise ConfigError("s-wave packet needs a grid symmetric about P = 0", "grid")
        packet = _build(lambda: qpacket.make_swave_packet(grid, w, chi), "grid")
        return {"kind": kind, "radialWidth": w, "spinor": chi, "grid": grid, "packet": packet}
    center = pk.vector("center")
    sigma = pk.number("sigmaP", positive=True)
    pk.finish()
    if np.linalg.norm(center) < 4 * sigma:
        raise ConfigError("origin overlap: |center| is below 4 sigmaP", "packet.center")
    grid = _grid(f, center, 8.0 * sigma)
    packet = _build(lambda: qpacket.make_gaussian_packet(grid, center, sigma, chi), "packet")
    return {"kind": kind, "center": center, "sigmaP": sigma, "spinor": chi, "grid": grid, "packet": packet}


_PARSERS = {
    "boost-compose": _p_boost_compose,
    "thomas": _p_thomas,
    "moller": _p_moller,
    "hidden-momentum-trajectory": _p_trajectory,
    "em-dipole": _p_em,
    "free-packet": _p_free_packet,
    "angular-decomposition": _p_angular,
    "shift-ratio": _p_shift_ratio,
}


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a JSON scenario description.

    Raises
    ------
    ConfigError
        With the offending key path (or JSON line/column) in the message.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from exc
    f = _Fields(obj)
    scenario = f.string("scenario", choices=tuple(SCENARIOS))
    uf = f.sub("units", {})
    try:
        units = UnitSystem(c=uf.number("c", 1.0, positive=True), hbar=uf.number("hbar", 1.0, positive=True))
    except SpinLabError as exc:
        raise ConfigError(str(exc), "units") from exc
    uf.finish()
    of = f.sub("output", {})
    path = of.raw("path", None)
    if path is not None and not isinstance(path, str):
        raise ConfigError("expected a string", "output.path")
    fmt = of.string("format", "csv", choices=FORMATS)
    of.finish()
    try:
        params = _PARSERS[scenario](f, units)
    except ConfigError:
        raise
    except SpinLabError as exc:
        raise ConfigError(str(exc)) from exc
    f.finish()
    return ScenarioConfig(scenario, units, params, path, fmt, raw=obj)


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
