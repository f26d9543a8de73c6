"""Command-line front end: simulate, verify, regularize.

Scenario configs are JSON (schema in the README).  Outputs are CSV
files with a mandatory header and a documented column order, plus a
JSON summary; all floats are serialized with 17 significant digits so
that values round-trip bit-for-bit.  Identical config and seed produce
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

from . import conserved as cq
from . import dynamics as dyn
from . import gnomonic as gn
from . import ligon_schaaf as ls
from . import moser as ms
from .errors import (
    ConfigError,
    DegenerateOrbit,
    KeplerSphereError,
    PositiveEnergy,
)
from .geometry import (
    SpherePhasePoint,
    Tolerances,
    fixture_c1,
    project_to_TS3,
    sample_phase_point,
    state_from_elements,
)
from .suites import run_suite

CSV_COLUMNS = (
    "t", "tau", "s",
    "q0", "q1", "q2", "q3",
    "v0", "v1", "v2", "v3",
    "Q1", "Q2", "Q3",
    "V1", "V2", "V3",
    "H", "E",
    "mu1", "mu2", "mu3",
    "A1", "A2", "A3",
    "eps",
    "c1_residual", "c2_residual",
)

_CHART_FLOOR = 1e-12


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# Scenario configuration


@dataclass
class Scenario:
    params: dyn.KeplerParams
    initial: SpherePhasePoint
    integrator: dyn.IntegratorConfig
    store_every: int = 1
    continuation_periods: float = 5.0
    continuation_samples: int = 512


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _as_float(obj, field: str) -> float:
    _require(isinstance(obj, (int, float)) and not isinstance(obj, bool),
             f"field '{field}' must be a number")
    return float(obj)


def _as_vec(obj, field: str, length: int) -> np.ndarray:
    _require(isinstance(obj, (list, tuple)) and len(obj) == length,
             f"field '{field}' must be a list of {length} numbers")
    return np.array([_as_float(x, field) for x in obj], dtype=float)


def _initial_state(init: dict, gamma: float) -> SpherePhasePoint:
    sources = [k for k in ("fixture", "q", "elements", "sample") if k in init]
    _require(len(sources) == 1,
             "field 'initial' must specify exactly one of 'fixture', "
             f"'q'+'v', 'elements', 'sample' (got {sources or 'none'})")
    src = sources[0]
    if src == "fixture":
        _require(init["fixture"] == "C1",
                 "field 'initial.fixture' only supports \"C1\"")
        _require(set(init) == {"fixture"},
                 "field 'initial' has extra keys next to 'fixture'")
        return fixture_c1()
    if src == "q":
        _require(set(init) == {"q", "v"},
                 "field 'initial' with 'q' requires exactly 'q' and 'v'")
        q = _as_vec(init["q"], "initial.q", 4)
        v = _as_vec(init["v"], "initial.v", 4)
        try:
            return project_to_TS3(q, v)
        except ValueError as exc:
            raise ConfigError(f"field 'initial.q': {exc}") from exc
    if src == "elements":
        el = init["elements"]
        _require(isinstance(el, dict), "field 'initial.elements' must be an object")
        known = {"colatitude", "eccentricity", "orientation", "at_aphelion"}
        extra = set(el) - known
        _require(not extra, f"field 'initial.elements' has unknown keys {sorted(extra)}")
        _require("colatitude" in el and "eccentricity" in el,
                 "field 'initial.elements' requires 'colatitude' and 'eccentricity'")
        colat = _as_float(el["colatitude"], "initial.elements.colatitude")
        _require(0.0 < colat < np.pi / 2,
                 "field 'initial.elements.colatitude' must lie in (0, pi/2)")
        ecc = _as_float(el["eccentricity"], "initial.elements.eccentricity")
        _require(ecc >= 0.0, "field 'initial.elements.eccentricity' must be >= 0")
        at_aph = el.get("at_aphelion", False)
        _require(isinstance(at_aph, bool),
                 "field 'initial.elements.at_aphelion' must be a boolean")
        _require(not (at_aph and ecc >= 1.0),
                 "field 'initial.elements.at_aphelion' requires eccentricity < 1")
        orient = None
        if "orientation" in el:
            angles = _as_vec(el["orientation"], "initial.elements.orientation", 3)
            orient = Rotation.from_euler("ZYZ", angles).as_matrix()
        return state_from_elements(colat, ecc, gamma, orientation=orient,
                                   at_aphelion=at_aph)
    # src == "sample"
    sm = init["sample"]
    _require(isinstance(sm, dict), "field 'initial.sample' must be an object")
    extra = set(sm) - {"seed", "energy_window"}
    _require(not extra, f"field 'initial.sample' has unknown keys {sorted(extra)}")
    _require("seed" in sm and isinstance(sm["seed"], int)
             and not isinstance(sm["seed"], bool),
             "field 'initial.sample.seed' must be an integer")
    window = (-1.0, -0.1)
    if "energy_window" in sm:
        wv = _as_vec(sm["energy_window"], "initial.sample.energy_window", 2)
        _require(wv[0] < wv[1],
                 "field 'initial.sample.energy_window' must be increasing")
        window = (float(wv[0]), float(wv[1]))
    return sample_phase_point(sm["seed"], window, gamma)


def load_scenario(path: str | Path) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config '{path}': {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config '{path}' is not valid JSON: {exc}") from exc
    _require(isinstance(cfg, dict), "config root must be a JSON object")
    known = {"gamma", "initial", "integrator", "output", "continuation"}
    extra = set(cfg) - known
    _require(not extra, f"config has unknown top-level keys {sorted(extra)}")

    gamma = _as_float(cfg.get("gamma", 1.0), "gamma")
    params = dyn.KeplerParams(gamma)

    _require("initial" in cfg and isinstance(cfg["initial"], dict),
             "field 'initial' (object) is required")
    initial = _initial_state(cfg["initial"], gamma)

    integ = cfg.get("integrator", {})
    _require(isinstance(integ, dict), "field 'integrator' must be an object")
    allowed = {"method", "dt", "t_end", "reproject_every", "collision_guard"}
    extra = set(integ) - allowed
    _require(not extra, f"field 'integrator' has unknown keys {sorted(extra)}")
    try:
        integrator = dyn.IntegratorConfig(**integ)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field 'integrator': {exc}") from exc

    store_every = 1
    out_sel = cfg.get("output", {})
    _require(isinstance(out_sel, dict), "field 'output' must be an object")
    extra = set(out_sel) - {"store_every"}
    _require(not extra, f"field 'output' has unknown keys {sorted(extra)}")
    if "store_every" in out_sel:
        se = out_sel["store_every"]
        _require(isinstance(se, int) and not isinstance(se, bool) and se >= 1,
                 "field 'output.store_every' must be an integer >= 1")
        store_every = se

    cont = cfg.get("continuation", {})
    _require(isinstance(cont, dict), "field 'continuation' must be an object")
    extra = set(cont) - {"delaunay_periods", "samples"}
    _require(not extra, f"field 'continuation' has unknown keys {sorted(extra)}")
    periods = _as_float(cont.get("delaunay_periods", 5.0),
                        "continuation.delaunay_periods")
    _require(periods > 0, "field 'continuation.delaunay_periods' must be > 0")
    nsamp = cont.get("samples", 512)
    _require(isinstance(nsamp, int) and not isinstance(nsamp, bool) and nsamp >= 2,
             "field 'continuation.samples' must be an integer >= 2")

    return Scenario(params=params, initial=initial, integrator=integrator,
                    store_every=store_every, continuation_periods=periods,
                    continuation_samples=nsamp)


# ---------------------------------------------------------------------------
# Trajectory record


@dataclass
class TrajectoryRecord:
    """Tabular per-sample view of a trajectory, in the CSV column order."""

    data: np.ndarray  # (n, len(CSV_COLUMNS))

    @classmethod
    def from_trajectory(cls, traj: dyn.Trajectory, params: dyn.KeplerParams,
                        store_every: int = 1) -> "TrajectoryRecord":
        bare = dyn.Trajectory(t=traj.t, q=traj.q, v=traj.v)
        tau = ls.tau_clock(bare).tau
        s = ms.arclength_clock(bare, params).s
        for clock, label in ((traj.t, "t"), (tau, "tau"), (s, "s")):
            if not np.all(np.diff(clock) > 0):
                raise KeplerSphereError(f"clock '{label}' is not strictly increasing")
        con = cq.conserved_arrays(traj.q, traj.v, params.gamma)
        n = len(traj.t)
        q0 = traj.q[:, 0]
        chart_ok = q0 > _CHART_FLOOR
        with np.errstate(divide="ignore", invalid="ignore"):
            Q = np.where(chart_ok[:, None], traj.q[:, 1:] / q0[:, None], np.nan)
        V = np.where(chart_ok[:, None], con["pi"], np.nan)
        c1 = np.sum(traj.q * traj.q, axis=1) - 1.0
        c2 = np.sum(traj.q * traj.v, axis=1)
        data = np.column_stack([
            traj.t, tau, s,
            traj.q, traj.v,
            Q, V,
            con["H"], con["E"],
            con["mu"], con["A"],
            con["eps"],
            c1, c2,
        ])
        assert data.shape == (n, len(CSV_COLUMNS))
        idx = list(range(0, n, store_every))
        if idx[-1] != n - 1:
            idx.append(n - 1)
        return cls(data=data[idx])

    def write(self, path: Path):
        lines = [",".join(CSV_COLUMNS)]
        for row in self.data:
            lines.append(",".join(_fmt(x) for x in row))
        path.write_text("\n".join(lines) + "\n")

    @classmethod
    def read(cls, path: Path) -> "TrajectoryRecord":
        lines = path.read_text().splitlines()
        if not lines or tuple(lines[0].split(",")) != CSV_COLUMNS:
            raise KeplerSphereError(f"'{path}' is not a trajectory CSV")
        data = np.array([[float(x) for x in line.split(",")]
                         for line in lines[1:]], dtype=float)
        return cls(data=data)


def _write_csv(path: Path, columns: tuple[str, ...], rows: np.ndarray):
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# simulate


def _drift_summary(record: TrajectoryRecord) -> dict:
    def drift(cols: np.ndarray) -> float:
        arr = np.atleast_2d(cols.T).T
        scale = max(1.0, float(np.max(np.abs(arr[0]))))
        return float(np.max(np.abs(arr - arr[0]))) / scale

    d = record.data
    col = {name: i for i, name in enumerate(CSV_COLUMNS)}
    return {
        "H": drift(d[:, col["H"]]),
        "E": drift(d[:, col["E"]]),
        "mu": drift(d[:, col["mu1"]:col["mu3"] + 1]),
        "A": drift(d[:, col["A1"]:col["A3"] + 1]),
    }


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tol = Tolerances().scaled(args.tol_scale)

    try:
        traj = dyn.integrate(scenario.initial, scenario.params, scenario.integrator)
    except dyn.StepFailure as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return 1

    record = TrajectoryRecord.from_trajectory(traj, scenario.params,
                                              scenario.store_every)
    record.write(out / "trajectory.csv")

    try:
        classification = cq.classify_orbit(scenario.initial, scenario.params)
    except DegenerateOrbit:
        classification = "radial"
    con0 = cq.conserved_arrays(scenario.initial.q[None], scenario.initial.v[None],
                               scenario.params.gamma)
    drift = _drift_summary(record)
    # B is not a CSV column; track it separately over the raw samples
    con = cq.conserved_arrays(traj.q, traj.v, scenario.params.gamma)
    b0 = np.max(np.abs(con["B"][0]))
    drift["B"] = float(np.max(np.abs(con["B"] - con["B"][0]))) / max(1.0, float(b0))

    summary = {
        "gamma": scenario.params.gamma,
        "classification": classification,
        "eccentricity": float(con0["eps"][0]),
        "energies": {"H": float(con0["H"][0]), "E": float(con0["E"][0])},
        "momentum": [float(x) for x in con0["mu"][0]],
        "runge": [float(x) for x in con0["A"][0]],
        "samples": int(record.data.shape[0]),
        "clocks": {
            "t_end": float(record.data[-1, 0]),
            "tau_end": float(record.data[-1, 1]),
            "s_end": float(record.data[-1, 2]),
        },
        "drift": drift,
        "drift_tolerance": tol.tol_drift,
        "drift_within_tolerance": bool(max(drift.values()) <= tol.tol_drift),
        "collision": None,
    }
    code = 0
    if traj.collision is not None:
        ev = traj.collision
        summary["collision"] = {
            "t": float(ev.t),
            "guard": float(ev.guard),
            "q": [float(x) for x in ev.q],
            "v": [float(x) for x in ev.v],
        }
        code = 3
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n")

    print(f'classification "{classification}"  eccentricity '
          f'{con0["eps"][0]:.6g}  samples {summary["samples"]}  '
          f'max drift {max(drift.values()):.3e}')
    if code == 3:
        print(f"collision guard tripped at t = {traj.collision.t:.6g}; "
              f"trajectory truncated")
    return code


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    tol = Tolerances().scaled(args.tol_scale)
    reports = run_suite(args.suite, args.seeds, tol, mutate=args.mutate)
    payload = {
        "suite": args.suite,
        "seeds": args.seeds,
        "tol_scale": args.tol_scale,
        "mutate": args.mutate,
        "passed": all(r.passed for r in reports),
        "reports": [r.to_dict() for r in reports],
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "verify_report.json").write_text(text)
    return 0 if payload["passed"] else 1


# ---------------------------------------------------------------------------
# regularize


def _regularize_ligon_schaaf(out: Path, traj: dyn.Trajectory,
                             scenario: Scenario) -> None:
    params = scenario.params
    bare = dyn.Trajectory(t=traj.t, q=traj.q, v=traj.v)
    tau = ls.tau_clock(bare).tau
    rows = np.empty((len(traj.t), 9))
    for i in range(len(traj.t)):
        d = ls.ls_map(traj.point(i), params)
        rows[i] = [tau[i], *d.x, *d.y]
    _write_csv(out / "image_ligon_schaaf.csv",
               ("tau", "x0", "x1", "x2", "x3", "y0", "y1", "y2", "y3"), rows)

    # continue past the end (or past the collision guard) on the geodesic
    # flow, and map back where the inverse is defined
    d_end = ls.ls_map(traj.point(len(traj.t) - 1), params)
    omega = params.gamma**2 / float(np.linalg.norm(d_end.y)) ** 3
    span = scenario.continuation_periods * 2.0 * np.pi / omega
    taus = np.linspace(0.0, span, scenario.continuation_samples)
    cont = np.full((len(taus), 18), np.nan)
    for i, dt_ in enumerate(taus):
        d = ls.delaunay_flow(d_end, float(dt_), params)
        cont[i, 0] = tau[-1] + dt_
        cont[i, 1:5] = d.x
        cont[i, 5:9] = d.y
        try:
            e = gn.phi_c_inverse(d, params)
            sph = gn.psi_inverse(e)
        except KeplerSphereError:
            cont[i, 9] = 0.0
            continue
        cont[i, 9] = 1.0
        cont[i, 10:14] = sph.q
        cont[i, 14:18] = sph.v
    _write_csv(out / "continuation_ligon_schaaf.csv",
               ("tau", "x0", "x1", "x2", "x3", "y0", "y1", "y2", "y3",
                "defined", "q0", "q1", "q2", "q3", "v0", "v1", "v2", "v3"),
               cont)


def _regularize_moser(out: Path, traj: dyn.Trajectory, scenario: Scenario) -> None:
    params = scenario.params
    bare = dyn.Trajectory(t=traj.t, q=traj.q, v=traj.v)
    s = ms.arclength_clock(bare, params).s
    con = cq.conserved_arrays(traj.q, traj.v, params.gamma)
    rows = np.full((len(traj.t), 10), np.nan)
    rows[:, 0] = traj.t
    rows[:, 1] = s
    rows[:, 2:5] = con["pi"]
    for i in range(len(traj.t)):
        pi = con["pi"][i]
        E = float(con["E"][i])
        try:
            w = ms.invert_velocity(pi)
        except KeplerSphereError:
            continue
        rows[i, 5:8] = w
        rows[i, 8] = ms.moser_metric(pi, E)
        rows[i, 9] = ms.moser_metric_inverted(w, E)
    _write_csv(out / "image_moser.csv",
               ("t", "s", "pi1", "pi2", "pi3", "w1", "w2", "w3",
                "factor_pi", "factor_w"), rows)


def _regularize_gnomonic(out: Path, traj: dyn.Trajectory, scenario: Scenario) -> None:
    params = scenario.params
    bare = dyn.Trajectory(t=traj.t, q=traj.q, v=traj.v)
    tau = ls.tau_clock(bare).tau
    rows = np.full((len(traj.t), 9), np.nan)
    rows[:, 0] = traj.t
    rows[:, 1] = tau
    for i in range(len(traj.t)):
        try:
            e = gn.psi(traj.point(i))
        except KeplerSphereError:
            continue
        rows[i, 2:5] = e.Q
        rows[i, 5:8] = e.V
        rows[i, 8] = gn.euclid_hamiltonian(e, params)
    _write_csv(out / "image_gnomonic.csv",
               ("t", "tau", "Q1", "Q2", "Q3", "V1", "V2", "V3", "H_flat"), rows)


def cmd_regularize(args) -> int:
    scenario = load_scenario(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    try:
        cs0 = cq.conserved_set(scenario.initial, scenario.params)
    except DegenerateOrbit as exc:
        print(f"config error: initial state is degenerate: {exc}", file=sys.stderr)
        return 2
    if cs0.E >= 0.0:
        print(f"positive-energy scenario (E = {cs0.E:.6g}); regularized image "
              f"is undefined", file=sys.stderr)
        return 4

    try:
        traj = dyn.integrate(scenario.initial, scenario.params, scenario.integrator)
    except dyn.StepFailure as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return 1

    record = TrajectoryRecord.from_trajectory(traj, scenario.params,
                                              scenario.store_every)
    record.write(out / "source.csv")

    try:
        if args.mode == "ligon-schaaf":
            _regularize_ligon_schaaf(out, traj, scenario)
        elif args.mode == "moser":
            _regularize_moser(out, traj, scenario)
        else:
            _regularize_gnomonic(out, traj, scenario)
    except PositiveEnergy as exc:
        print(f"positive-energy state encountered: {exc}", file=sys.stderr)
        return 4

    n = len(traj.t)
    print(f"mode {args.mode}  samples {n}  wrote {out / 'source.csv'}")
    if traj.collision is not None and args.mode != "ligon-schaaf":
        print(f"collision guard tripped at t = {traj.collision.t:.6g}; "
              f"image truncated")
        return 3
    return 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kepler-sphere",
        description="Kepler problem on the 3-sphere: simulation, "
                    "regularization pipelines, verification suites.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="integrate a scenario; write "
                           "trajectory.csv and summary.json")
    p_sim.add_argument("config", help="path to a JSON scenario config")
    p_sim.add_argument("--out", default=".", help="output directory")
    p_sim.add_argument("--tol-scale", type=float, default=1.0,
                       help="scale factor applied to the reported drift tolerance")
    p_sim.set_defaults(func=cmd_simulate)

    p_ver = sub.add_parser("verify", help="run a verification suite")
    p_ver.add_argument("suite", choices=["brackets", "conserved", "moser",
                                         "ligon-schaaf", "gnomonic", "all"])
    p_ver.add_argument("--seeds", type=int, default=100,
                       help="number of seeded sample points (default 100)")
    p_ver.add_argument("--mutate", action="store_true",
                       help="corrupt the flat regularizing map (sign flip) to "
                            "demonstrate failure detection")
    p_ver.add_argument("--out", default=None,
                       help="also write verify_report.json to this directory")
    p_ver.add_argument("--tol-scale", type=float, default=1.0,
                       help="scale factor applied to all tolerances")
    p_ver.set_defaults(func=cmd_verify)

    p_reg = sub.add_parser("regularize", help="export source and image "
                           "trajectories for a regularizing map")
    p_reg.add_argument("config", help="path to a JSON scenario config")
    p_reg.add_argument("--mode", required=True,
                       choices=["ligon-schaaf", "moser", "gnomonic"])
    p_reg.add_argument("--out", default=".", help="output directory")
    p_reg.add_argument("--tol-scale", type=float, default=1.0,
                       help="accepted for interface symmetry; unused")
    p_reg.set_defaults(func=cmd_regularize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seeds", 1) < 1:
        print("--seeds must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
