"""
Command-line front end.

JSON and CSV go to standard output (or --out); logs, tables and error messages
go to standard error. Exit codes: 0 success, 1 a verification check failed,
2 usage or configuration error, 3 domain error.
"""

import argparse
import concurrent.futures
import json
import logging
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence

import pandas as pd
from rich.markup import escape
from rich.progress import Progress

from modules.config import config_hash, resolve_config
from modules.dynamic_single_track import find_swerve
from modules.errors import ConfigError, SwerveSafetyError
from modules.kinematic_swerve import build_swerve, integrate_bicycle, sample_trajectory
from modules.particle_lower_bound import kinematic_pair
from modules.report_utils import render_dataframe, stderr_console
from modules.rotation_geometry import rotated_extents
from modules.scenario_distances import SCENARIOS
from modules.sweeps import (
    DISTANCE_OUTPUTS,
    SweepSpec,
    bracketed,
    run_bracketing,
    run_sweep,
    write_csv,
    write_warnings,
)
from modules.universal_distance import (
    TripleState,
    crossover_speed,
    max_reduction,
    universal_terms,
)
from modules.verification import SUITES, PropertySuiteRunner

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3

# constrained dynamic swerves must stay this close to the kinematic clearance travel
KINEMATIC_ERROR_BAND = 0.10


def _float_list(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_common(parser: argparse.ArgumentParser, suppress: bool):
    """Global flags; subcommands repeat them with suppressed defaults so they work on either side."""

    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--config", default=default(None), help="key = value parameter file (falls back to $SWERVE_SAFETY_CONFIG)")
    parser.add_argument("--literal-formulas", action="store_true", default=default(False), help="evaluate the formulas exactly as printed")
    parser.add_argument("--jobs", type=int, default=default(None), help="worker threads for sweeps and suites")
    parser.add_argument("--seed", type=int, default=default(0), help="seed for randomized suites")
    parser.add_argument("--out", default=default(None), help="write the result here instead of standard output")
    parser.add_argument("--verbose", action="store_true", default=default(False), help="debug logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swerve-safety", description="Safe following distances for vehicles that brake or swerve.")
    _add_common(parser, suppress=False)
    subparsers = parser.add_subparsers(dest="command", required=True)

    distance = subparsers.add_parser("distance", help="evaluate scenario or universal distances")
    _add_common(distance, suppress=True)
    distance.add_argument("--scenario", choices=sorted(SCENARIOS) + ["universal", "all"], default="all")
    distance.add_argument("--vr", type=float, required=True, help="rear (or vehicle 1) speed, m/s")
    distance.add_argument("--vf", type=float, required=True, help="front (or vehicle 2) speed, m/s")
    distance.add_argument("--v3", type=float, default=None, help="vehicle 3 speed for the universal distance, m/s")
    distance.add_argument("--d23", type=float, default=None, help="known spacing of vehicles 2 and 3, m")
    distance.add_argument("--rho", type=float, default=None, help="override the reaction time, s")
    distance.set_defaults(handler=cmd_distance)

    profile = subparsers.add_parser("swerve-profile", help="emit a swerve trajectory CSV")
    _add_common(profile, suppress=True)
    profile.add_argument("--v", type=float, required=True, help="swerve speed, m/s")
    profile.add_argument("--dt", type=float, default=0.01, help="sample step, s")
    profile.add_argument("--model", choices=["kinematic", "integrated", "dynamic"], default="kinematic")
    profile.add_argument("--unconstrained", action="store_true", help="dynamic model limited by tire feasibility only")
    profile.add_argument("--right", action="store_true", help="mirror the swerve to the right")
    profile.set_defaults(handler=cmd_swerve_profile)

    sweep = subparsers.add_parser("sweep", help="distance table over a speed grid")
    _add_common(sweep, suppress=True)
    sweep.add_argument("--variable", choices=["v_r", "v_f", "v_all"], default="v_all")
    sweep.add_argument("--start", type=float, default=0.0)
    sweep.add_argument("--stop", type=float, default=30.0)
    sweep.add_argument("--step", type=float, default=0.5)
    sweep.add_argument("--outputs", default=",".join(DISTANCE_OUTPUTS), help="comma-separated subset of " + ",".join(DISTANCE_OUTPUTS))
    sweep.add_argument("--other-speed", type=float, default=0.0, help="speed of the vehicle that is not swept, m/s")
    sweep.add_argument("--dynamic", action="store_true", help="clearance travel comparison with the dynamic model")
    sweep.add_argument("--dt", type=float, default=1e-3, help="dynamic integration step, s")
    sweep.add_argument("--target-levels", type=int, default=5, help="unconstrained lateral-acceleration levels tried by the dynamic search")
    sweep.add_argument("--brake-step", type=float, default=0.25, help="dynamic brake grid step, m/s^2")
    sweep.set_defaults(handler=cmd_sweep)

    validate = subparsers.add_parser("dynamic-validate", help="compare dynamic and kinematic swerves")
    _add_common(validate, suppress=True)
    validate.add_argument("--speeds", type=_float_list, default=[10.0, 15.0, 20.0, 25.0, 30.0])
    validate.add_argument("--dt", type=float, default=1e-3)
    validate.add_argument("--target-levels", type=int, default=5)
    validate.add_argument("--brake-step", type=float, default=0.25)
    validate.set_defaults(handler=cmd_dynamic_validate)

    verify = subparsers.add_parser("verify", help="run a simulation property suite")
    _add_common(verify, suppress=True)
    verify.add_argument("suite", choices=list(SUITES))
    verify.add_argument("--cases", type=int, default=None, help="cases per property (defaults per suite)")
    verify.add_argument("--dt", type=float, default=1e-3, help="simulation step, s")
    verify.set_defaults(handler=cmd_verify)
    return parser


def _emit(args, text: str):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, payload: Dict[str, Any]):
    _emit(args, json.dumps(payload, indent=2) + "\n")


def _emit_csv(args, table: pd.DataFrame, digest: str):
    write_csv(table, args.out or sys.stdout, digest)


def _with_progress(label: str, work: Callable[[Callable[[float, str], None]], Any]) -> Any:
    with Progress(console=stderr_console, transient=True) as progress:
        task = progress.add_task(label, total=1.0)

        def update(fraction: float, text: str):
            progress.update(task, completed=fraction, description=escape(text))

        return work(update)


def cmd_distance(args, params) -> int:
    g, p, _ = params
    if args.rho is not None:
        p = p.with_rho(args.rho)
    literal = args.literal_formulas
    digest = config_hash(*params)

    def universal_payload() -> Dict[str, Any]:
        triple = TripleState(args.vr, args.vf, args.v3, args.d23)
        terms = universal_terms(triple, p, g, literal=literal, use_positions=args.d23 is not None)
        return {"scenario": "universal", "distance": max(terms.values()), "terms": terms}

    if args.scenario == "universal":
        payload = universal_payload()
    elif args.scenario == "all":
        payload = {"scenarios": [
            SCENARIOS[name](args.vr, args.vf, p.rho, g, g, p, literal=literal).to_dict() for name in sorted(SCENARIOS)
        ]}
        payload["scenarios"].append(universal_payload())
    else:
        payload = SCENARIOS[args.scenario](args.vr, args.vf, p.rho, g, g, p, literal=literal).to_dict()
    payload.update({"literal_formulas": literal, "rho": p.rho, "config_hash": digest})
    _emit_json(args, payload)
    return EXIT_OK


def cmd_swerve_profile(args, params) -> int:
    g, p, dp = params
    if args.model == "dynamic":
        swerve = _with_progress("Searching swerve", lambda cb: find_swerve(
            args.v, not args.unconstrained, dp, g, p, progress_callback=cb))
        table = swerve.trajectory
        lateral = ["y", "beta", "psi", "omega_z", "delta", "a_lat"]
    else:
        manoeuvre = build_swerve(args.v, g, p, literal=args.literal_formulas)
        if args.model == "integrated":
            table = integrate_bicycle(manoeuvre, g, dt=args.dt)
        else:
            table = sample_trajectory(manoeuvre, args.dt)
        lateral = [column for column in ("y", "theta", "psi") if column in table.columns]
    if args.right:
        table = table.copy()
        table[lateral] = -table[lateral]
    _emit_csv(args, table, config_hash(*params))
    return EXIT_OK


def _search_options(args) -> Dict[str, Any]:
    return {"dt": args.dt, "target_levels": args.target_levels, "brake_step": args.brake_step}


def cmd_sweep(args, params) -> int:
    g, p, dp = params
    digest = config_hash(*params)
    try:
        spec = SweepSpec(
            variable=args.variable, start=args.start, stop=args.stop, step=args.step,
            outputs=tuple(name.strip() for name in args.outputs.split(",") if name.strip()),
            mode="literal" if args.literal_formulas else "corrected",
            other_speed=args.other_speed,
        )
    except SwerveSafetyError as e:
        raise ValueError(str(e)) from None

    if args.dynamic:
        result = _with_progress("Dynamic sweep", lambda cb: run_bracketing(
            spec.grid(), g, p, dp, jobs=args.jobs, search=_search_options(args), progress_callback=cb))
        ok = bracketed(result.table)
        stderr_console.print(f"bracketed rows: {int(ok.sum())}/{len(ok)}")
    else:
        result = run_sweep(spec, g, p, jobs=args.jobs)
        if spec.variable == "v_all" and {"d_bb", "d_hat"} <= set(spec.outputs):
            crossing = crossover_speed(result.table)
            stderr_console.print(
                f"crossover speed: {'none' if crossing is None else f'{crossing:.2f} m/s'}, "
                f"max reduction: {100.0 * max_reduction(result.table):.1f}%"
            )

    _emit_csv(args, result.table, digest)
    if args.out:
        sidecar = write_warnings(result.warnings, args.out)
        if sidecar:
            stderr_console.print(f"{len(result.warnings)} row(s) failed, see {escape(sidecar)}")
    if result.all_failed:
        stderr_console.print("[red]every row of the sweep failed[/red]")
        return EXIT_DOMAIN
    return EXIT_OK


def _validate_one(v0: float, constrained: bool, params, search: Dict[str, Any]) -> Dict[str, Any]:
    g, p, dp = params
    pair = kinematic_pair(v0, g, g, p, dp)
    swerve = find_swerve(v0, constrained, dp, g, p, **search)
    row = {
        "v0": v0,
        "mode": "constrained" if constrained else "unconstrained",
        "x_c": swerve.x_c,
        "t_c": swerve.t_c,
        "x_c_kinematic": pair["x_c"],
        "error": abs(swerve.x_c - pair["x_c"]) / pair["x_c"],
        "brake_input": swerve.control.brake_input,
        "t_f": swerve.control.t_f,
        "peak_lat_accel": swerve.peak_lat_accel,
        "residual_y": swerve.residual_y,
        "residual_yaw": swerve.residual_yaw,
    }
    if constrained:
        row["passed"] = row["error"] <= KINEMATIC_ERROR_BAND
    else:
        front_travel = swerve.x_c + rotated_extents(g, swerve.theta_max).d_prime
        row["passed"] = pair["x_c_lower_tire"] <= front_travel <= pair["x_c_kinematic"]
    return row


def cmd_dynamic_validate(args, params) -> int:
    tasks = [(v0, constrained) for v0 in args.speeds for constrained in (True, False)]
    search = _search_options(args)
    rows: Dict[int, Dict[str, Any]] = {}

    def work(callback):
        with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs or 1) as executor:
            future_to_task = {
                executor.submit(_validate_one, v0, constrained, params, search): i
                for i, (v0, constrained) in enumerate(tasks)
            }
            for future in concurrent.futures.as_completed(future_to_task):
                rows[future_to_task[future]] = future.result()
                callback(len(rows) / len(tasks), f"Validating... ({len(rows)}/{len(tasks)})")

    _with_progress("Validating", work)
    ordered = [rows[i] for i in range(len(tasks))]
    render_dataframe(pd.DataFrame(ordered), title="Dynamic vs kinematic clearance")
    passed = all(row["passed"] for row in ordered)
    _emit_json(args, {"passed": passed, "rows": ordered, "config_hash": config_hash(*params)})
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def cmd_verify(args, params) -> int:
    g, p, _ = params
    if args.literal_formulas:
        logging.warning("verify checks the corrected formulas; --literal-formulas is ignored")
    runner = PropertySuiteRunner(args.suite, g, p, seed=args.seed, jobs=args.jobs, cases=args.cases, dt=args.dt)
    results_df, report = _with_progress(f"Suite {args.suite}", lambda cb: runner.execute(progress_callback=cb))
    render_dataframe(pd.DataFrame(report["properties"]), title=f"{args.suite} (seed {args.seed})")
    report["config_hash"] = config_hash(*params)
    _emit_json(args, report)
    if not report["passed"]:
        render_dataframe(results_df, filter_col="passed", keep=[False], title="Failing cases")
    return EXIT_OK if report["passed"] else EXIT_CHECK_FAILED


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)-8s %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    try:
        params = resolve_config(args.config)
        return args.handler(args, params)
    except ConfigError as e:
        stderr_console.print(f"[red]configuration error:[/red] {escape(str(e))}")
        return EXIT_USAGE
    except ValueError as e:
        stderr_console.print(f"[red]invalid arguments:[/red] {escape(str(e))}")
        return EXIT_USAGE
    except SwerveSafetyError as e:
        stderr_console.print(f"[red]{type(e).__name__}:[/red] {escape(str(e))}")
        return EXIT_DOMAIN
