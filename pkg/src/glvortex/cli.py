"""Command-line entry point.

Exit codes: 0 success, 1 validation error, 2 solver non-convergence,
3 partial sweep failure.  Every option can also be given through an
environment variable ``GLVORTEX_<OPTION>`` (upper case, dashes as underscores);
the command line wins over the environment.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import io as gio
from .analysis import circle_diagnostics, degree_at_infinity, delta0, nonradiality
from .boundary import CircleNonConvergence, minimize_circle
from .comparison import ComparisonMapSpec, comparison_energy_curve, construct_comparison
from .pohozaev import pohozaev
from .radial import NewtonDivergence, solve_radial_profile
from .solver import LineSearchFailure, SolveConfig, minimize_2d
from .symmetry import DegreeUndefined, SymmetryClass, UndersampledTrace, winding_number

ENV_PREFIX = "GLVORTEX_"
EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED, EXIT_PARTIAL = 0, 1, 2, 3
PROBE_FRACTIONS = (0.5, 0.75, 0.95)


class NonConvergence(RuntimeError):
    pass


class Parser(argparse.ArgumentParser):
    """Usage errors exit with the validation code instead of argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _truthy(s: str) -> bool:
    return s.strip().lower() in ("1", "true", "yes", "on")


def _apply_env(parser: argparse.ArgumentParser, environ) -> None:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                _apply_env(sub, environ)
            continue
        if not action.option_strings or action.dest in ("help",):
            continue
        key = ENV_PREFIX + action.dest.upper()
        if key not in environ:
            continue
        raw = environ[key]
        if isinstance(action, argparse._StoreTrueAction):
            action.default = _truthy(raw)
        elif action.nargs in ("+", "*") or isinstance(action.nargs, int):
            action.default = [action.type(v) if action.type else v for v in raw.replace(",", " ").split()]
        else:
            action.default = raw  # argparse applies ``type`` to string defaults
        action.required = False


# --- helpers ------------------------------------------------------------------------------


def _windings(field, fractions=PROBE_FRACTIONS) -> dict:
    disk = field.to_disk()
    out = {}
    for fr in fractions:
        r = fr * disk.R
        try:
            out[fmt_r(r)] = winding_number(disk.circle_trace(r))
        except (DegreeUndefined, UndersampledTrace) as exc:
            out[fmt_r(r)] = f"undefined: {exc}"
    return out


def fmt_r(r: float) -> str:
    return f"{r:g}"


def _solve_config(cfg: dict, tol_override=None) -> tuple[SolveConfig, dict]:
    known = {"d", "sign", "delta", "R", "Nr", "Ntheta", "init", "init_N", "init_file", "tol",
             "max_iters", "symmetrize_every", "output_field", "output_summary"}
    unknown = set(cfg) - known
    if unknown:
        raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
    for key in ("d", "delta"):
        if key not in cfg:
            raise ValueError(f"configuration is missing '{key}'")
    sym = SymmetryClass(int(cfg["d"]), cfg.get("sign", "plus"))
    init = cfg.get("init", "radial")
    init_field = None
    if init == "file":
        if "init_file" not in cfg:
            raise ValueError("init = file needs init_file")
        init_field, _ = gio.read_field(cfg["init_file"])
        if getattr(init_field, "symmetry", None) != sym:
            got = getattr(init_field, "symmetry", None)
            raise ValueError(f"class mismatch: init_file has {got}, configuration asks for {sym}")
    tol = float(tol_override) if tol_override is not None else float(cfg.get("tol", 1e-8))
    config = SolveConfig(
        sym, float(cfg["delta"]), R=float(cfg.get("R", 20.0)), Nr=int(cfg.get("Nr", 128)),
        Ntheta=int(cfg.get("Ntheta", 128)), init=init, init_N=int(cfg.get("init_N", 0)),
        init_field=init_field, tol=tol, max_iters=int(cfg.get("max_iters", 5000)),
        symmetrize_every=int(cfg.get("symmetrize_every", 25)),
    )
    outputs = {k: cfg[k] for k in ("output_field", "output_summary") if k in cfg}
    return config, outputs


def run_summary(config: SolveConfig, res, seconds: float) -> dict:
    sym = config.symmetry
    thr = delta0(sym.d)
    b = res.breakdown
    return {
        "config": {
            "d": sym.d, "sign": sym.sign, "delta": config.delta, "R": config.R, "Nr": config.Nr,
            "Ntheta": config.Ntheta, "init": config.init, "tol": config.tol,
            "max_iters": config.max_iters, "symmetrize_every": config.symmetrize_every,
        },
        "energies": {"dirichlet": b.dirichlet, "div_term": b.div_term, "potential": b.potential,
                     "total": b.total, "W_mass": 2 * b.potential},
        "C": res.boundary_C,
        "iterations": res.iterations,
        "final_gradient_norm": res.final_gradient_norm,
        "converged": res.converged,
        "windings": _windings(res.field),
        "delta0": thr.delta0,
        "in_threshold_region": bool(0 <= config.delta < thr.delta0),
        "timings": {"solve_seconds": seconds},
    }


# --- subcommands ----------------------------------------------------------------------------


def cmd_boundary(args) -> int:
    sym = SymmetryClass(args.d, args.sign)
    M = args.M or 4 * sym.n * 64
    t0 = time.perf_counter()
    try:
        sol = minimize_circle(sym.d, sym.sign, args.delta, M=M, tol=args.tol or 1e-9)
    except CircleNonConvergence as exc:
        print(f"boundary: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    summary = {
        "d": sym.d, "sign": sym.sign, "delta": args.delta, "M": M, "C": sol.C,
        "pi_d2": np.pi * sym.d**2, "margin": np.pi * sym.d**2 - sol.C,
        "el_residual": sol.value.el_residual, "starts": [list(s) for s in sol.starts],
        "disagreement": sol.disagreement, "seconds": time.perf_counter() - t0,
    }
    if args.out:
        out = Path(args.out)
        gio.write_phase(out / "phase.csv", sol.phase, args.delta, sol.C)
        gio.write_json(out / "summary.json", summary)
    _print_record(summary)
    return EXIT_OK


def cmd_radial(args) -> int:
    try:
        prof = solve_radial_profile(args.d, R_max=args.R_max, N=args.N, tol=args.tol or 1e-10)
    except NewtonDivergence as exc:
        print(f"radial: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    if args.out:
        gio.write_profile(args.out, prof)
    _print_record({"d": args.d, "R_max": args.R_max, "N": args.N, "residual": prof.residual,
                   "iterations": prof.iterations, "eta(1)": float(prof(1.0)),
                   "far_field_defect": prof.far_field_defect()})
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = gio.read_config(args.config)
    config, outputs = _solve_config(cfg, args.tol)
    t0 = time.perf_counter()
    try:
        res = minimize_2d(config)
    except (LineSearchFailure, CircleNonConvergence) as exc:
        print(f"solve: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    summary = run_summary(config, res, time.perf_counter() - t0)
    summary["seed"] = args.seed
    field_path = args.out_field or outputs.get("output_field")
    summary_path = args.out_summary or outputs.get("output_summary")
    if field_path:
        gio.write_field(field_path, res.field, config.delta)
    if summary_path:
        gio.write_json(summary_path, summary)
    _print_record(summary)
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def cmd_pohozaev(args) -> int:
    field, file_delta = gio.read_field(args.field)
    delta = file_delta if args.delta is None else args.delta
    disk = field.to_disk() if hasattr(field, "to_disk") else field
    radius = args.radius if args.radius is not None else 0.5 * disk.R
    rep = pohozaev(field, delta, tuple(args.center), radius, args.order)
    _print_record(rep.as_dict())
    return EXIT_OK


def cmd_construct(args) -> int:
    spec = ComparisonMapSpec(args.d, args.N, args.epsilon)
    field = construct_comparison(spec, args.Nr, args.Ntheta)
    record = {"d": args.d, "N": args.N, "epsilon": args.epsilon, "rho": spec.rho, "D": spec.D,
              "winding_r0.45": winding_number(field.to_disk().circle_trace(0.45))}
    if args.out:
        gio.write_field(Path(args.out) / "comparison_field.csv", field, 0.0)
    if args.curve:
        curve = comparison_energy_curve(args.d, args.N, args.curve,
                                        delta=args.delta if args.delta is not None else None)
        record.update({"slope": curve.slope, "target": curve.target,
                       "relative_error": curve.slope / curve.target - 1})
        if args.out:
            gio.write_rows(Path(args.out) / "energy_curve.csv", ("epsilon", "energy"),
                           zip(curve.epsilons, curve.energies))
    _print_record(record)
    return EXIT_OK


def cmd_delta0(args) -> int:
    lo, hi = sorted((args.d_min, args.d_max))
    ds = [d for d in range(hi, lo - 1, -1) if d <= -1]
    if not ds:
        raise ValueError("empty range of degrees (need d <= -1)")
    rows = []
    for d in ds:
        rec = delta0(d)
        rows.append((d, rec.delta_star, rec.delta0, rec.argmin_x, rec.delta_star_bruteforce,
                     abs(rec.delta_star - rec.delta_star_bruteforce)))
    cols = ("d", "delta_star", "delta0", "argmin_x", "delta_star_bruteforce", "abs_diff")
    if args.out:
        gio.write_rows(args.out, cols, rows)
    print(",".join(cols))
    for row in rows:
        print(f"{row[0]},{row[1]:.7g},{row[2]:.7g},{row[3]},{row[4]:.7g},{row[5]:.1e}")
    return EXIT_OK


def cmd_diagnostics(args) -> int:
    field, file_delta = gio.read_field(args.field)
    delta = file_delta if args.delta is None else args.delta
    disk = field.to_disk() if hasattr(field, "to_disk") else field
    radii = args.radii or [f * disk.R for f in (0.25, 0.5, 0.75, 0.95)]
    diags = circle_diagnostics(field, delta, radii)
    if args.out:
        gio.write_rows(args.out, ("r", "f", "g", "sigma", "winding"),
                       ((c.r, c.f, c.g, c.sigma, "" if c.winding is None else c.winding) for c in diags))
    record = {"circles": [c.as_dict() for c in diags],
              "nonradiality_r1": nonradiality(field, min(1.0, disk.R))}
    try:
        record["degree_at_infinity"] = degree_at_infinity(field)
    except (ValueError, AssertionError) as exc:
        record["degree_at_infinity"] = f"undefined: {exc}"
    _print_record(record)
    return EXIT_OK


# --- sweeps -----------------------------------------------------------------------------------


def read_sweep_spec(path) -> dict:
    cfg = gio.read_config(path)
    try:
        spec = {
            "d_list": gio.parse_list(cfg["d_list"], int),
            "sign_list": gio.parse_list(cfg.get("sign_list", "plus"), str),
            "delta_list": gio.parse_list(cfg["delta_list"], float),
            "R_list": gio.parse_list(cfg["R_list"], float),
            "Nr": int(cfg.get("Nr", 128)),
            "Ntheta": int(cfg.get("Ntheta", 128)),
            "output_dir": cfg["output_dir"],
            "tol": float(cfg.get("tol", 1e-8)),
            "max_iters": int(cfg.get("max_iters", 5000)),
        }
    except KeyError as exc:
        raise ValueError(f"sweep spec is missing {exc}") from exc
    for key in ("d_list", "sign_list", "delta_list", "R_list"):
        if not spec[key]:
            raise ValueError(f"{key} must be nonempty")
    if any(d > -1 for d in spec["d_list"]):
        raise ValueError("every d must be <= -1")
    if any(s not in ("plus", "minus") for s in spec["sign_list"]):
        raise ValueError("signs must be plus or minus")
    if any(not (0 <= x < 1) for x in spec["delta_list"]):
        raise ValueError("deltas must lie in [0, 1)")
    if sorted(spec["delta_list"]) != spec["delta_list"] or sorted(spec["R_list"]) != spec["R_list"]:
        raise ValueError("delta_list and R_list must be ascending")
    return spec


def _run_chain(job):
    """One (d, sign, R) line, solved along delta with warm starts.  Runs in a worker."""
    d, sign, R, deltas, Nr, Nt, tol, max_iters, out_dir = job
    rows = []
    prev = None
    broken = None
    sym = SymmetryClass(d, sign)
    thr = delta0(d)
    with threadpool_limits(limits=1):
        for delta in deltas:
            base = {"d": d, "sign": sign, "delta": delta, "R": R, "delta0": thr.delta0,
                    "in_threshold_region": bool(0 <= delta < thr.delta0)}
            if broken is not None:
                rows.append({**base, "status": f"skipped: chain broken at delta={broken}"})
                continue
            config = SolveConfig(sym, delta, R=R, Nr=Nr, Ntheta=Nt, tol=tol, max_iters=max_iters)
            if prev is not None:
                config = replace(config, init="file", init_field=prev.field)
            t0 = time.perf_counter()
            try:
                res = minimize_2d(config)
            except Exception as exc:  # noqa: BLE001 - recorded per row
                broken = delta
                rows.append({**base, "status": f"failed: {type(exc).__name__}: {exc}"})
                continue
            run_dir = Path(out_dir) / "runs" / f"d{d}_{sign}_R{R:g}_delta{delta:g}"
            gio.write_field(run_dir / "field.csv", res.field, delta)
            gio.write_json(run_dir / "summary.json", run_summary(config, res, time.perf_counter() - t0))
            try:
                wind = degree_at_infinity(res.field)
            except (ValueError, AssertionError):
                wind = "undefined"
            rows.append({**base, "E_total": res.breakdown.total, "W_mass": 2 * res.breakdown.potential,
                         "winding": wind, "nonradiality": nonradiality(res.field, min(1.0, R)),
                         "status": "ok" if res.converged else "nonconverged"})
            prev = res
    return rows


def run_sweep(spec: dict, workers: int = 1) -> tuple[list[dict], Path]:
    out = Path(spec["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(d, s, R, spec["delta_list"], spec["Nr"], spec["Ntheta"], spec["tol"], spec["max_iters"], str(out))
            for d in spec["d_list"] for s in spec["sign_list"] for R in spec["R_list"]]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chains = list(pool.map(_run_chain, jobs))
    else:
        chains = [_run_chain(j) for j in jobs]
    by_key = {(r["d"], r["sign"], r["R"], r["delta"]): r for chain in chains for r in chain}
    rows = [by_key[(d, s, R, x)] for d in spec["d_list"] for s in spec["sign_list"]
            for x in spec["delta_list"] for R in spec["R_list"]]
    path = gio.write_rows(out / "aggregate.csv", gio.AGGREGATE_COLUMNS,
                          ([r.get(c, "") for c in gio.AGGREGATE_COLUMNS] for r in rows))
    return rows, path


def cmd_sweep(args) -> int:
    spec = read_sweep_spec(args.spec)
    if args.output_dir:
        spec["output_dir"] = args.output_dir
    if args.tol is not None:
        spec["tol"] = args.tol
    rows, path = run_sweep(spec, workers=max(1, args.threads or 1))
    failed = [r for r in rows if r["status"] != "ok"]
    print(f"wrote {path} ({len(rows)} rows, {len(failed)} not ok)")
    return EXIT_PARTIAL if failed else EXIT_OK


# --- parser -------------------------------------------------------------------------------------


def _print_record(record: dict) -> None:
    import json

    print(json.dumps(gio._jsonable(record), indent=2, sort_keys=True))


def build_parser() -> argparse.ArgumentParser:
    common = Parser(add_help=False)
    common.add_argument("--threads", type=int, default=None, help="worker processes for sweeps")
    common.add_argument("--seed", type=int, default=0, help="seed recorded for randomized checks")
    common.add_argument("--tol", type=float, default=None, help="solver tolerance override")

    ap = Parser(prog="glvortex", description="Equivariant anisotropic Ginzburg-Landau vortices.",
                parents=[common])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=Parser)

    p = sub.add_parser("boundary", parents=[common], help="solve the circle problem for zeta")
    p.add_argument("-d", type=int, required=True)
    p.add_argument("--sign", choices=("plus", "minus"), default="plus")
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--M", type=int, default=None, help="samples on the circle (multiple of 4n)")
    p.add_argument("--out", default=None, help="output directory")
    p.set_defaults(func=cmd_boundary)

    p = sub.add_parser("radial", parents=[common], help="radial profile eta_d")
    p.add_argument("-d", type=int, required=True)
    p.add_argument("--R-max", dest="R_max", type=float, default=40.0)
    p.add_argument("--N", type=int, default=4096)
    p.add_argument("--out", default=None, help="profile CSV path")
    p.set_defaults(func=cmd_radial)

    p = sub.add_parser("solve", parents=[common], help="2D equivariant minimization")
    p.add_argument("config", help="key = value configuration file")
    p.add_argument("--out-field", dest="out_field", default=None)
    p.add_argument("--out-summary", dest="out_summary", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("pohozaev", parents=[common], help="Pohozaev identities on a disk")
    p.add_argument("field")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--center", type=float, nargs=2, default=[0.0, 0.0])
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--order", type=int, default=4)
    p.set_defaults(func=cmd_pohozaev)

    p = sub.add_parser("construct", parents=[common], help="multi-vortex comparison map")
    p.add_argument("-d", type=int, required=True)
    p.add_argument("--N", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=1e-2)
    p.add_argument("--Nr", type=int, default=128)
    p.add_argument("--Ntheta", type=int, default=128)
    p.add_argument("--curve", type=float, nargs="*", default=None, help="epsilons for the energy curve")
    p.add_argument("--delta", type=float, default=None, help="anisotropic density for the curve")
    p.add_argument("--out", default=None, help="output directory")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("delta0", parents=[common], help="threshold table")
    p.add_argument("--d-min", dest="d_min", type=int, default=-6)
    p.add_argument("--d-max", dest="d_max", type=int, default=-1)
    p.add_argument("--out", default=None, help="CSV path")
    p.set_defaults(func=cmd_delta0)

    p = sub.add_parser("sweep", parents=[common], help="(d, sign, delta, R) sweep")
    p.add_argument("spec", help="sweep specification file")
    p.add_argument("--output-dir", dest="output_dir", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("diagnostics", parents=[common], help="circle diagnostics of a field file")
    p.add_argument("field")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--radii", type=float, nargs="*", default=None)
    p.add_argument("--out", default=None, help="CSV path")
    p.set_defaults(func=cmd_diagnostics)
    return ap


def main(argv=None, environ=None) -> int:
    ap = build_parser()
    _apply_env(ap, os.environ if environ is None else environ)
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, gio.FormatError, FileNotFoundError) as exc:
        print(f"{ap.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NonConvergence as exc:
        print(f"{ap.prog} {args.command}: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
