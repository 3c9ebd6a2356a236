"""Command-line entry point: reproducible runs with serialized inputs/outputs.

Subcommands: `linsolve` (linearized solve for a potential), `construct`
(build a potential, solve, reconstruct the nonlinearity, audit it), and
`verify` (bound checks on built-in or constructed cases, plus the seeded
comparison sweep).

Exit codes: 0 ok, 2 validation failure, 3 solver failure, 4 audit failure,
5 failed verification bound.  Diagnostics go to stderr; data goes to files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .errors import AuditFailure, SolverFailure, ValidationError
from .grid import integrate_inward
from .linear import comparison_sweep, default_grid, solve_linearized
from .potentials import (
    blend,
    borderline_potential,
    build_oscillatory,
    hardy_level,
    hardy_potential,
    borderline_level,
    potential_from_dict,
    potential_to_dict,
    shifted_potential,
    table_potential,
    window_potential,
    zero_potential,
)
from .reconstruct import reconstruct_nonlinearity
from .serialize import (
    write_json,
    write_manifest,
    write_profile_csv,
    write_table_csv,
)
from .verify import BUILTIN_CASES, VerificationCase, build_case, run_verification

EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_AUDIT = 4
EXIT_BOUND = 5


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def parse_potential_arg(spec: str, dim: int):
    name, _, rest = spec.partition(":")
    name = name.lower()
    if name == "zero":
        return zero_potential(dim)
    if name == "borderline":
        return borderline_potential(dim)
    if name == "hardy":
        return hardy_potential(dim)
    if name == "shifted":
        return shifted_potential(float(rest), dim)
    if name == "window":
        a, b = (float(x) for x in rest.split(","))
        return window_potential(a, b, dim)
    if name in ("table", "oscillatory", "file"):
        path = Path(rest)
        if not path.exists():
            raise ValidationError(f"potential file {path} does not exist")
        data = json.loads(path.read_text())
        if "form" in data:
            if int(data.get("dim", dim)) != dim:
                raise ValidationError("potential file dimension differs from --dim")
            return potential_from_dict(data)
        return table_potential(np.asarray(data["nodes"], dtype=float),
                               np.asarray(data["c_values"], dtype=float), dim)
    raise ValidationError(f"cannot parse potential spec {spec!r}")


def _merge_config(args: argparse.Namespace, keys: list[str]) -> dict:
    """Effective config: file values overridden by explicit flags."""
    file_cfg = {}
    if args.config:
        file_cfg = json.loads(Path(args.config).read_text())
    cfg = {}
    for k in keys:
        flag = getattr(args, k.replace("-", "_"), None)
        cfg[k] = flag if flag is not None else file_cfg.get(k)
    return cfg


def _out_dir(args) -> Path:
    out = args.out_dir or os.environ.get("GELFANDLAB_OUT") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_linsolve(args) -> int:
    cfg = _merge_config(args, ["dim", "potential", "t-min", "points-per-unit",
                               "rtol", "seed"])
    if cfg["dim"] is None or cfg["potential"] is None:
        raise ValidationError("linsolve needs --dim and --potential")
    dim = int(cfg["dim"])
    rtol = float(cfg["rtol"] if cfg["rtol"] is not None else 1e-10)
    psi = parse_potential_arg(cfg["potential"], dim)
    grid = default_grid(psi, points_per_unit_t=cfg["points-per-unit"],
                        t_min=cfg["t-min"])
    omega = solve_linearized(psi, grid, rtol=rtol)
    out = _out_dir(args)
    write_profile_csv(out / "omega.csv", omega, "omega")
    cfg_eff = {**cfg, "t-min": grid.t_min, "points-per-unit":
               cfg["points-per-unit"] or (100.0 if -grid.t_min <= 2000.0 else 4.0),
               "rtol": rtol}
    write_manifest(out / "linsolve_manifest.json", "linsolve", cfg_eff,
                   ["omega.csv"],
                   {"n_nodes": grid.size, "nsteps": omega.meta["nsteps"],
                    "nreject": omega.meta["nreject"],
                    "boundary_slope": float(omega.derivs[-1])},
                   __version__, BACKEND)
    _log(f"linsolve: {grid.size} nodes, {omega.meta['nsteps']} steps; "
         f"omega'(1) = {float(omega.derivs[-1]):.12g}")
    return 0


def _construct_potential(cfg, dim: int):
    mode = cfg["mode"]
    stages = int(cfg["stages"] if cfg["stages"] is not None else 2)
    if mode == "liminf":
        phi = cfg["phi"] or "inv_r2"
        spec, sched = build_oscillatory(phi, dim, stages)
        return spec, sched, {}
    if mode == "oscillate":
        if cfg["c1"] is None or cfg["c2"] is None:
            raise ValidationError("oscillate mode needs --c1 and --c2")
        c1, c2 = float(cfg["c1"]), float(cfg["c2"])
        # the inverse-square target at the borderline amplitude makes the
        # blended dip values C1 + (C2-C1)/(n+1) exact at the stage points
        inner, sched = build_oscillatory(cfg["phi"] or "borderline", dim, stages)
        return blend(c1, c2, inner, dim), sched, {"C1": c1, "C2": c2}
    if mode == "prescribed":
        if cfg["psi"] is None:
            raise ValidationError("prescribed mode needs --psi")
        psi = parse_potential_arg(cfg["psi"], dim)
        lo, hi = psi.segments.sampled_range(-40.0)
        L, H = borderline_level(dim), hardy_level(dim)
        if dim < 10:
            raise ValidationError("prescribed mode needs N >= 10")
        if lo < L - 1e-9 or hi > H * (1 + 1e-12):
            raise ValidationError(
                f"prescribed potential must satisfy 2(N-2) <= r^2 Psi <= (N-2)^2/4 "
                f"(range found: [{lo:g}, {hi:g}], admissible [{L:g}, {H:g}])")
        extras = {}
        if dim == 10:
            extras["degenerate_n10"] = True
            _log("note: N = 10 forces Psi = 2(N-2)/r^2 exactly (degenerate range)")
        return psi, None, extras
    raise ValidationError(f"unknown construct mode {mode!r}")


def cmd_construct(args) -> int:
    cfg = _merge_config(args, ["mode", "dim", "phi", "stages", "c1", "c2", "psi",
                               "t-min", "points-per-unit", "rtol", "seed"])
    if cfg["dim"] is None or cfg["mode"] is None:
        raise ValidationError("construct needs --dim and --mode")
    dim = int(cfg["dim"])
    rtol = float(cfg["rtol"] if cfg["rtol"] is not None else 1e-10)
    psi, sched, extras = _construct_potential(cfg, dim)
    grid = default_grid(psi, points_per_unit_t=cfg["points-per-unit"],
                        t_min=cfg["t-min"])
    omega = solve_linearized(psi, grid, rtol=rtol)
    table = reconstruct_nonlinearity(omega, psi)
    out = _out_dir(args)
    write_json(out / "potential.json", potential_to_dict(psi))
    if sched is not None:
        write_json(out / "schedule.json", potential_to_dict(psi).get("schedule", {}))
    write_table_csv(out / "f_table.csv", table)
    write_profile_csv(out / "u_profile.csv", table.u_profile, "u")
    audit = {
        "f0": table.f0,
        "f0_positive": table.audit.f0_positive,
        "nondecreasing": table.audit.nondecreasing,
        "convex": table.audit.convex,
        "superlinear": table.audit.superlinear,
        "passed": table.audit.passed,
        "first_violation": table.audit.first_violation,
        **extras,
    }
    write_json(out / "audit.json", audit)
    outputs = ["potential.json", "f_table.csv", "u_profile.csv", "audit.json"]
    if sched is not None:
        outputs.insert(1, "schedule.json")
    write_manifest(out / "construct_manifest.json", "construct",
                   {**cfg, "rtol": rtol, "t-min": grid.t_min}, outputs,
                   {"n_nodes": grid.size, "nsteps": omega.meta["nsteps"],
                    "s_max": table.s_max, "f0": table.f0},
                   __version__, BACKEND)
    if not table.audit.passed:
        _log(f"audit FAILED: {', '.join(table.audit.failing())}")
        return EXIT_AUDIT
    _log(f"construct: f(0) = {table.f0:.12g}, s_max = {table.s_max:.6g}, audit ok")
    return 0


def _case_from_file(path: Path, window_args) -> VerificationCase:
    data = json.loads(path.read_text())
    psi = potential_from_dict(data)
    grid = default_grid(psi)
    omega = solve_linearized(psi, grid)
    table = reconstruct_nonlinearity(omega, psi)
    from .grid import RadialProfile
    cstar = RadialProfile(grid=grid, values=psi.c(grid.nodes), positive=True)
    return VerificationCase(path.stem, psi.dim, 1.0, cstar, psi=psi, table=table)


def cmd_verify(args) -> int:
    cfg = _merge_config(args, ["case", "window", "depth", "lower-tol", "pairs",
                               "seed", "dim", "t-min", "points-per-unit"])
    if cfg["case"] is None:
        raise ValidationError("verify needs --case")
    name = cfg["case"]
    out = _out_dir(args)
    window = float(cfg["window"] if cfg["window"] is not None else 5.0)
    depth = float(cfg["depth"] if cfg["depth"] is not None else 0.0)
    lower_tol = float(cfg["lower-tol"] if cfg["lower-tol"] is not None else 1e-6)

    if name == "comparison-sweep":
        dim = int(cfg["dim"] if cfg["dim"] is not None else 10)
        pairs = int(cfg["pairs"] if cfg["pairs"] is not None else 100)
        seed = int(cfg["seed"] if cfg["seed"] is not None else 20250810)
        report = comparison_sweep(dim=dim, n_pairs=pairs, seed=seed)
        write_json(out / "comparison_sweep.json", report)
        write_manifest(out / "verify_manifest.json", "verify",
                       {**cfg, "window": window, "depth": depth,
                        "lower-tol": lower_tol, "pairs": pairs, "seed": seed},
                       ["comparison_sweep.json"],
                       {"violations": report["violations"]}, __version__, BACKEND)
        if report["violations"]:
            _log(f"comparison sweep: {report['violations']} violations, worst "
                 f"excess {report['worst_diff']:.3e}")
            return EXIT_BOUND
        _log(f"comparison sweep: {pairs} pairs, zero violations "
             f"(worst diff {report['worst_diff']:.3e})")
        return 0

    if name in BUILTIN_CASES:
        case = build_case(name, t_min=cfg["t-min"],
                          points_per_unit_t=cfg["points-per-unit"])
    else:
        path = Path(name)
        if not path.exists():
            raise ValidationError(
                f"unknown case {name!r}: not a built-in {BUILTIN_CASES} and no "
                "such file")
        case = _case_from_file(path, cfg)
    report = run_verification(case, window=window, depth=depth, lower_tol=lower_tol)
    write_json(out / "report.json", report.to_dict())
    rows = [["check", "passed", "margin"]]
    for cname, c in report.checks.items():
        rows.append([cname, str(c["passed"]), format(float(c["margin"]), ".17g")])
    (out / "summary.csv").write_text("\n".join(",".join(r) for r in rows) + "\n")
    write_manifest(out / "verify_manifest.json", "verify",
                   {**cfg, "window": window, "depth": depth, "lower-tol": lower_tol},
                   ["report.json", "summary.csv"],
                   {"passed": report.passed}, __version__, BACKEND)
    for cname, c in report.checks.items():
        _log(f"{cname}: {'PASS' if c['passed'] else 'FAIL'} "
             f"(margin {c['margin']:.6g})")
    if not report.passed:
        worst = min(report.checks.values(), key=lambda c: c["margin"])
        _log(f"verification FAILED with margin {worst['margin']:.6g}")
        return EXIT_BOUND
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gelfandlab",
        description="Radial extremal-solution laboratory on the unit ball")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file mirroring the flags")
    common.add_argument("--out-dir", help="output directory (env GELFANDLAB_OUT)")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("linsolve", help="solve the linearized problem",
                        parents=[common])
    ps.add_argument("--dim", type=int)
    ps.add_argument("--potential",
                    help="zero | borderline | hardy | shifted:EPS | window:A,B "
                         "| table:FILE.json")
    ps.add_argument("--t-min", type=float, dest="t_min")
    ps.add_argument("--points-per-unit", type=float, dest="points_per_unit")
    ps.add_argument("--rtol", type=float)
    ps.add_argument("--seed", type=int)
    ps.set_defaults(fn=cmd_linsolve)

    pc = sub.add_parser("construct", help="build potential, reconstruct f, audit",
                        parents=[common])
    pc.add_argument("--mode", choices=["liminf", "oscillate", "prescribed"])
    pc.add_argument("--dim", type=int)
    pc.add_argument("--phi")
    pc.add_argument("--stages", type=int)
    pc.add_argument("--c1", type=float)
    pc.add_argument("--c2", type=float)
    pc.add_argument("--psi", help="potential spec for prescribed mode")
    pc.add_argument("--t-min", type=float, dest="t_min")
    pc.add_argument("--points-per-unit", type=float, dest="points_per_unit")
    pc.add_argument("--rtol", type=float)
    pc.add_argument("--seed", type=int)
    pc.set_defaults(fn=cmd_construct)

    pv = sub.add_parser("verify", help="run bound checks on a case",
                        parents=[common])
    pv.add_argument("--case",
                    help=f"built-in {BUILTIN_CASES}, comparison-sweep, or a "
                         "potential JSON file")
    pv.add_argument("--window", type=float)
    pv.add_argument("--depth", type=float)
    pv.add_argument("--lower-tol", type=float, dest="lower_tol")
    pv.add_argument("--pairs", type=int)
    pv.add_argument("--seed", type=int)
    pv.add_argument("--dim", type=int)
    pv.add_argument("--t-min", type=float, dest="t_min")
    pv.add_argument("--points-per-unit", type=float, dest="points_per_unit")
    pv.set_defaults(fn=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except AuditFailure as e:
        _log(f"audit failure: {e}")
        return EXIT_AUDIT
    except SolverFailure as e:
        _log(f"solver failure: {e}")
        return EXIT_SOLVER
    except ValidationError as e:
        _log(f"invalid input: {e}")
        return EXIT_VALIDATION


if __name__ == "__main__":
    raise SystemExit(main())
