"""Command-line driver.

Every subcommand reads one JSON config (``--config``) and writes CSV/JSON files
into ``--out``.  Exit codes: 0 success, 2 invalid input, 3 integration
failure, 4 no contraction in the Cauchy problem at infinity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import diagnostics, fields, geometry, scattering, swirl
from .dynamics import (
    Compressible,
    Incompressible,
    IntegratorConfig,
    PhaseState,
    integrate,
)
from .errors import AffineFlowError, DomainError, NoContraction, StepFailure
from .mat3 import basis, outer

log = logging.getLogger("affine_flow")

EXIT_OK, EXIT_INVALID, EXIT_STEP, EXIT_CONTRACTION = 0, 2, 3, 4


class ConfigError(DomainError):
    pass


# ---------------------------------------------------------------- output helpers


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, payload):
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------- config parsing


def _num(cfg, key, default=None, positive=False):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        v = float(cfg[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{key!r} must be a number") from None
    if not math.isfinite(v) or (positive and not v > 0.0):
        raise ConfigError(f"{key!r} must be {'positive and ' if positive else ''}finite, got {cfg[key]!r}")
    return v


def _mat(cfg, key):
    if key not in cfg:
        raise ConfigError(f"missing matrix {key!r}")
    arr = np.asarray(cfg[key], dtype=float)
    if arr.size != 9:
        raise ConfigError(f"{key!r} must hold 9 numbers (row-major)")
    return arr.reshape(3, 3)


SHEAR_GENERATORS = {
    "sausage": lambda: outer(basis(2), basis(1)),
    "pancake": lambda: outer(basis(2), basis(1)) + outer(basis(3), basis(2)),
}


def _random_data(rng, regime, scale_a=0.2, scale_v=0.5):
    A = np.eye(3) + scale_a * rng.uniform(-1.0, 1.0, (3, 3))
    V = scale_v * rng.uniform(-1.0, 1.0, (3, 3))
    if isinstance(regime, Incompressible):
        A = A / np.cbrt(np.linalg.det(A))
        V = V - np.trace(V @ np.linalg.inv(A)) / 3.0 * A
    return A, V


def initial_state(cfg, seed: int) -> PhaseState:
    """PhaseState from a config: explicit ``A``/``Adot``, or ``initial`` one of
    ``"spherical"``, ``"random"``, ``"shear-sausage"``, ``"shear-pancake"``."""
    kind = cfg.get("regime", "compressible")
    if kind == "compressible":
        g = _num(cfg, "gamma")
        if not g > 1.0:
            raise ConfigError(f"gamma must exceed 1, got {g}")
        regime = Compressible(g)
    elif kind == "incompressible":
        regime = Incompressible()
    else:
        raise ConfigError(f"unknown regime {kind!r}")
    init = cfg.get("initial")
    if init is None:
        A, V = _mat(cfg, "A"), _mat(cfg, "Adot")
    elif init == "spherical":
        A, V = np.eye(3), np.zeros((3, 3))
    elif init == "random":
        A, V = _random_data(np.random.default_rng(seed), regime)
    elif isinstance(init, str) and init.startswith("shear-") and init[6:] in SHEAR_GENERATORS:
        A, V = np.eye(3), SHEAR_GENERATORS[init[6:]]()
    else:
        raise ConfigError(f"unknown initial data {init!r}")
    return PhaseState(A, V, regime)


def _integrator_config(cfg) -> IntegratorConfig:
    return IntegratorConfig(
        step=_num(cfg, "step", 1e-3, positive=True),
        t_end=_num(cfg, "t_end", positive=True),
        sample_stride=int(cfg.get("sample_stride", 1)),
        scheme=cfg.get("scheme"),
        projection=bool(cfg.get("projection", True)),
    )


# ---------------------------------------------------------------- simulate

TRAJECTORY_HEADER = (
    ["t"]
    + [f"A{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)]
    + [f"Adot{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)]
    + ["E", "E_K", "E_P_or_kappa", "det", "trL", "lam1", "lam2", "lam3", "energy_drift"]
)


def trajectory_rows(traj):
    d = traj.diagnostics
    compressible = traj.gamma is not None
    E = d["E"] if compressible else d["E_K"]
    third = d["E_P"] if compressible else d["curvature"]
    e0 = E[0] if traj.t_start <= traj.t_end else E[-1]
    drift = np.abs(E - e0) / max(abs(e0), 1e-300)
    for i in range(len(traj)):
        yield (
            [traj.times[i]]
            + list(traj.A[i].ravel())
            + list(traj.Adot[i].ravel())
            + [E[i], d["E_K"][i], third[i], d["det"][i], d["trL"][i], d["lam1"][i], d["lam2"][i], d["lam3"][i], drift[i]]
        )


def _growth_summary(traj, cfg):
    out = {}
    window = cfg.get("window")
    try:
        out["growth"] = diagnostics.growth_fit(traj, window).to_dict()
    except AffineFlowError as exc:
        out["growth"] = {"error": str(exc)}
    if traj.gamma is not None:
        try:
            out["virial_residual"] = diagnostics.virial_residual(traj)
        except AffineFlowError as exc:
            out["virial_residual"] = str(exc)
        try:
            out["potential_decay_exponent"] = diagnostics.potential_decay_exponent(traj, window)
            out["potential_decay_bound"] = -diagnostics.growth_exponent_p(traj.gamma) * (traj.gamma - 1.0)
        except AffineFlowError as exc:
            out["potential_decay_exponent"] = str(exc)
    return out


def cmd_simulate(cfg, out: Path, seed: int, jobs: int) -> int:
    s0 = initial_state(cfg, seed)
    icfg = _integrator_config(cfg)
    traj = integrate(s0, icfg)
    write_csv(out / "trajectory.csv", TRAJECTORY_HEADER, trajectory_rows(traj))
    E = traj.diagnostics["E"] if traj.gamma is not None else traj.diagnostics["E_K"]
    report = {
        "regime": "compressible" if traj.gamma is not None else "incompressible",
        "gamma": traj.gamma,
        "samples": len(traj),
        "max_energy_drift": float(np.max(np.abs(E - E[0])) / max(abs(E[0]), 1e-300)),
        "max_det_defect": float(np.max(np.abs(traj.diagnostics["det"] - 1.0))) if traj.gamma is None else None,
        "max_abs_trL": float(np.max(np.abs(traj.diagnostics["trL"]))) if traj.gamma is None else None,
        **_growth_summary(traj, cfg),
        "final_shape": _shape_dict(geometry.rescaled_domain(traj.A[-1], traj.times[-1])),
    }
    write_json(out / "growth_report.json", report)
    return EXIT_OK


def _shape_dict(e: geometry.Ellipsoid):
    return {"semi_axes": e.semi_axes, "orientation": e.orientation}


# ---------------------------------------------------------------- swirl


def swirl_initial(cfg) -> swirl.SwirlState:
    alpha = _num(cfg, "alpha", 1.0, positive=True)
    c = _num(cfg, "beta_dot0", 0.0)
    beta = _num(cfg, "beta", 0.0)
    if "e0" in cfg:
        e0 = _num(cfg, "e0", positive=True)
        slack = e0 - c * c / alpha**2
        if slack < -1e-14:
            raise ConfigError(f"e0 = {e0} is below the swirl energy c^2/alpha^2 = {c * c / alpha**2}")
        sign = float(cfg.get("alpha_dot_sign", 1.0))
        ad = math.copysign(math.sqrt(max(slack, 0.0) / (1.0 + 2.0 * alpha**-6)), sign)
    else:
        ad = _num(cfg, "alpha_dot", 0.0)
    return swirl.SwirlState(alpha, ad, beta, c)


SWIRL_HEADER = ["t", "alpha", "alpha_dot", "beta", "beta_dot", "kappa", "Lambda", "e0_drift", "swirl_drift"]


def cmd_swirl(cfg, out: Path, seed: int, jobs: int) -> int:
    s0 = swirl_initial(cfg)
    scfg = swirl.SwirlConfig(
        t_end=_num(cfg, "t_end", 20.0, positive=True),
        t_start=-abs(_num(cfg, "t_start", -20.0)),
        sample_step=_num(cfg, "sample_step", 0.01, positive=True),
    )
    traj = swirl.integrate_swirl(s0, scfg)
    e0 = traj.e0
    kappa = traj.curvature() if e0 > 0 else np.zeros(len(traj))
    e_drift = np.abs(traj.energy() - e0) / max(e0, 1e-300)
    c_drift = np.abs(traj.alpha**2 * traj.beta_dot - s0.beta_dot0)
    write_csv(
        out / "swirl_trajectory.csv",
        SWIRL_HEADER,
        zip(traj.times, traj.alpha, traj.alpha_dot, traj.beta, traj.beta_dot, kappa, traj.lam(), e_drift, c_drift),
    )
    report = {"initial": s0.__dict__, "e0": e0, "max_e0_drift": float(e_drift.max())}
    if e0 > 0:
        portrait = swirl.phase_portrait(e0, s0.beta_dot0, _num(cfg, "alpha_max", 5.0, positive=True))
        write_csv(out / "level_curve.csv", ["component", "alpha", "alpha_dot"], portrait["level"])
        report["level_components"] = int(len(np.unique(portrait["level"][:, 0])))
        # header only when c = 0: the curvature never changes sign
        write_csv(out / "kappa_boundary.csv", ["alpha", "alpha_dot_plus", "alpha_dot_minus"], portrait.get("kappa_zero", []))
        try:
            w = swirl.negative_curvature_window(traj)
            report["negative_curvature_window"] = list(w) if w is not None else None
        except AffineFlowError as exc:
            report["negative_curvature_window"] = {"error": str(exc)}
        try:
            report["asymptote"] = swirl.swirl_asymptote(traj).to_dict()
        except AffineFlowError as exc:
            report["asymptote"] = {"error": str(exc)}
    write_json(out / "swirl_report.json", report)
    return EXIT_OK


# ---------------------------------------------------------------- scatter


def _fixed_point_config(cfg):
    fp = dict(cfg.get("fixed_point", {}))
    try:
        return scattering.FixedPointConfig(**fp)
    except TypeError as exc:
        raise ConfigError(f"bad fixed_point section: {exc}") from None


def cmd_scatter(cfg, out: Path, seed: int, jobs: int) -> int:
    st = scattering.AsymptoticState(_mat(cfg, "A0"), _mat(cfg, "A1"))
    gamma = _num(cfg, "gamma")
    if not gamma > 1.0:
        raise ConfigError(f"gamma must exceed 1, got {gamma}")
    dd = scattering.degree_exponents(st, gamma)
    write_json(out / "degree.json", dd.to_dict())
    sol = scattering.solve_cauchy_at_infinity(st, gamma, _fixed_point_config(cfg))
    write_json(out / "initial_data.json", sol.to_dict())
    t_end = _num(cfg, "t_end", 1000.0, positive=True)
    step = _num(cfg, "step", 1e-3, positive=True)
    traj = scattering.integrate_forward(sol.initial, t_end, step, int(cfg.get("sample_stride", 100)))
    report = {"t_end": t_end, "expected_exponent": -dd.mu if not dd.weighted else None}
    report["decay_exponent"] = scattering.decay_check(traj, st, gamma, window=cfg.get("decay_window"))
    try:
        est, rep = scattering.extract_asymptote(traj, gamma, report=True)
        report["extracted"] = est.to_dict()
        report["roundtrip_error"] = est.distance(st)
        report["tail_bound"] = rep.tail_bound
    except AffineFlowError as exc:
        report["extracted"] = {"error": str(exc)}
    write_json(out / "decay_report.json", report)
    return EXIT_OK


# ---------------------------------------------------------------- classify / fields


def cmd_classify(cfg, out: Path, seed: int, jobs: int) -> int:
    A1 = _mat(cfg, "A1")
    shape = geometry.classify_asymptotic(A1, cfg.get("tol"))
    write_json(out / "shape.json", {"rank": shape.rank, "semi_axes": shape.semi_axes, "label": shape.label.value})
    return EXIT_OK


def _sample_points(cfg, s: PhaseState, seed):
    if "points" in cfg:
        pts = np.asarray(cfg["points"], dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ConfigError("points must be a list of 3-vectors")
        return pts
    n = int(cfg.get("n_points", 100))
    rng = np.random.default_rng(seed)
    y = rng.normal(size=(n, 3))
    y *= (rng.uniform(size=(n, 1)) ** (1.0 / 3.0)) / np.linalg.norm(y, axis=1, keepdims=True)
    return y @ s.A.T


def cmd_fields_sample(cfg, out: Path, seed: int, jobs: int) -> int:
    s = initial_state(cfg, seed)
    pts = _sample_points(cfg, s, seed)
    if s.incompressible:
        rows = [[*x, fields.sample_incompressible_pressure(s, x)] for x in pts]
        write_csv(out / "fields.csv", ["x1", "x2", "x3", "p"], rows)
        return EXIT_OK
    profile = fields.profile_from_config(cfg.get("profile", {"isentropic": {"gamma": s.gamma}}))
    rows = []
    for x in pts:
        f = fields.sample_compressible(s, profile, x)
        rows.append([*x, *f.u, f.rho, f.eps, f.p])
    write_csv(out / "fields.csv", ["x1", "x2", "x3", "u1", "u2", "u3", "rho", "eps", "p"], rows)
    return EXIT_OK


# ---------------------------------------------------------------- sweep


def _families(cfg):
    fams = cfg.get("families", [cfg["family"]] if "family" in cfg else [])
    if not isinstance(fams, list):
        raise ConfigError("families must be a list")
    return fams


def sweep_cells(cfg, seed: int):
    """Deterministic list of (index, gamma, family, cell_seed) in grid order."""
    gammas = [float(g) for g in cfg.get("gammas", [])]
    cells = []
    for fam in _families(cfg):
        for g in gammas:
            idx = len(cells)
            cell_seed = int(np.random.SeedSequence([seed, idx]).generate_state(1)[0])
            cells.append((idx, g, fam, cell_seed))
    return cells


SWEEP_HEADER = [
    "cell", "gamma", "family", "status", "energy_drift", "det_exponent", "diam_slope",
    "mu", "decay_exponent", "message",
]  # fmt: skip


def _family_name(fam):
    return fam if isinstance(fam, str) else "asymptote:" + str(fam.get("name", "custom"))


def run_cell(cell, cfg):
    idx, gamma, fam, cell_seed = cell
    row = {k: "" for k in SWEEP_HEADER}
    row.update(cell=idx, gamma=gamma, family=_family_name(fam), status="ok")
    try:
        if isinstance(fam, dict):
            st = scattering.AsymptoticState(_mat(fam, "A0"), _mat(fam, "A1"))
            dd = scattering.degree_exponents(st, gamma)
            row["mu"] = dd.mu
            if not dd.solvable:
                row["status"] = "rejected"
                row["message"] = f"d={dd.d} a={dd.a} mu={dd.mu:.6g}"
                return row
            sol = scattering.solve_cauchy_at_infinity(st, gamma, _fixed_point_config(cfg))
            traj = scattering.integrate_forward(sol.initial, _num(cfg, "t_end", 1000.0), _num(cfg, "step", 1e-3), 100)
            row["decay_exponent"] = scattering.decay_check(traj, st, gamma, window=cfg.get("decay_window"))
            E = traj.diagnostics["E"]
        else:
            sub = {"regime": "compressible", "gamma": gamma, "initial": fam}
            sub.update({k: cfg[k] for k in ("A", "Adot") if k in cfg})
            s0 = initial_state(sub, cell_seed)
            traj = integrate(s0, _integrator_config(cfg))
            E = traj.diagnostics["E"]
            gr = diagnostics.growth_fit(traj, cfg.get("window"))
            row["det_exponent"] = gr.det_exponent
            row["diam_slope"] = gr.diam_slope
        row["energy_drift"] = float(np.max(np.abs(E - E[0])) / abs(E[0]))
    except (AffineFlowError, ValueError) as exc:
        row["status"] = "failed"
        row["message"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_sweep(cfg, out: Path, seed: int, jobs: int) -> int:
    cells = sweep_cells(cfg, seed)
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_cell, cells, [cfg] * len(cells)))
    else:
        rows = [run_cell(c, cfg) for c in cells]
    rows.sort(key=lambda r: r["cell"])
    write_csv(out / "sweep_summary.csv", SWEEP_HEADER, ([r[k] for k in SWEEP_HEADER] for r in rows))
    return EXIT_OK


# ---------------------------------------------------------------- convergence study


def cmd_convergence_study(cfg, out: Path, seed: int, jobs: int) -> int:
    s0 = initial_state(cfg, seed)
    t_end = _num(cfg, "t_end", 10.0, positive=True)
    steps = sorted((float(h) for h in cfg.get("steps", [0.04, 0.02, 0.01, 0.005])), reverse=True)
    if len(steps) < 2:
        raise ConfigError("convergence study needs at least two step sizes")
    reference_step = float(cfg.get("reference_step", steps[-1] / 8.0))
    ref = integrate(s0, IntegratorConfig(step=reference_step, t_end=t_end, sample_stride=10**9)).final_state()
    rows = []
    for h in steps:
        fin = integrate(s0, IntegratorConfig(step=h, t_end=t_end, sample_stride=10**9))
        err = float(np.sqrt(np.sum((fin.A[-1] - ref.A) ** 2) + np.sum((fin.Adot[-1] - ref.Adot) ** 2)))
        E = fin.diagnostics["E"] if fin.gamma is not None else fin.diagnostics["E_K"]
        rows.append([h, err, float(abs(E[-1] - E[0]) / abs(E[0]))])
    write_csv(out / "convergence.csv", ["step", "final_error", "energy_drift"], rows)
    arr = np.array(rows)
    order = diagnostics.loglog_fit(arr[:, 0], arr[:, 1]).exponent
    write_json(out / "convergence.json", {"observed_order": order, "reference_step": reference_step, "t_end": t_end})
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "swirl": cmd_swirl,
    "scatter": cmd_scatter,
    "classify": cmd_classify,
    "fields-sample": cmd_fields_sample,
    "sweep": cmd_sweep,
    "convergence-study": cmd_convergence_study,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="affine-flow", description="Affine motions of fluid ellipsoids in vacuum.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="JSON config file")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="worker processes (sweep only)")
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if not isinstance(cfg, dict):
        print("error: config must be a JSON object", file=sys.stderr)
        return EXIT_INVALID
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    args.out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](cfg, args.out, seed, args.jobs)
    except NoContraction as exc:
        print(f"error: {exc}; attempted T = {exc.attempted_T}", file=sys.stderr)
        return EXIT_CONTRACTION
    except StepFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STEP
    except (AffineFlowError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
