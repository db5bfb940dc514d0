"""Command-line frontend.

Subcommands: solve, simulate, sweep, map, scaling, export-pulse.  Frequencies
on flags are named in the unit they take (MHz, kHz, Hz), times in
microseconds.  Exit codes: 0 success, 1 validation error, 2 numerical
failure; every failure prints one machine-parsable line on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .bench import (
    SweepPlan,
    best_pulse_map,
    emit_csv,
    emit_error_landscape,
    emit_plot,
    emit_scaling_csv,
    run_sweep,
    scaling_study,
)
from .errors import ModeshapeError, ValidationError
from .magnus import report_theta1_csv, report_theta2_csv
from .metrics import fractional_error
from .modes import TWO_PI, load_mode_spec, with_detuning
from .pulses import load_pulse, spectrum_csv, time_series_csv
from .dynamics import populations_report
from .shaper import ShapeRequest, save_solution, solve_pulse


class _Parser(argparse.ArgumentParser):
    """argparse that reports bad flags as validation errors (exit 1)."""

    def error(self, message):
        raise ValidationError(message)


def _float_list(text: str):
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise ValidationError(f"malformed numeric list '{text}'") from None


def _int_list(text: str):
    try:
        return [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise ValidationError(f"malformed integer list '{text}'") from None


def _pair_list(text: str):
    pairs = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ValidationError(f"malformed mode pair '{chunk}' (want 'p,q')")
        pairs.append((int(parts[0]), int(parts[1])))
    return pairs


def _default_jobs() -> int:
    env = os.environ.get("MODESHAPE_JOBS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="modeshape", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_modes(p):
        p.add_argument("--modes", required=True, metavar="PATH",
                       help="mode-spec JSON file (frequencies in MHz)")

    p = sub.add_parser("solve", help="solve for a shaped pulse")
    add_modes(p)
    p.add_argument("--target", type=int, required=True, help="target mode index")
    p.add_argument("--tau-us", type=float, required=True,
                   help="pulse duration in us")
    p.add_argument("--alpha", type=float, default=1.0,
                   help="requested |theta1| on the target mode (dimensionless)")
    p.add_argument("--moment", type=int, default=0,
                   help="stabilization order K (number of nulled derivatives)")
    p.add_argument("--window-khz", type=float, default=50.0,
                   help="basis margin around the mode band in kHz")
    p.add_argument("--second-order-pairs", default="",
                   help="off-diagonal mode pairs to null, e.g. '2,1;1,2'")
    p.add_argument("--out", required=True, help="output pulse-solution JSON")
    p.add_argument("--full-report", action="store_true",
                   help="also compute the full second-order Magnus block")
    p.add_argument("--report-csv", default=None, metavar="PREFIX",
                   help="write Magnus report CSVs to PREFIX_theta1.csv / _theta2.csv")

    p = sub.add_parser("simulate", help="simulate both models for one pulse")
    add_modes(p)
    p.add_argument("--pulse", required=True, help="pulse JSON file")
    p.add_argument("--delta-hz", type=float, default=0.0,
                   help="uniform mode-frequency detuning in Hz")
    p.add_argument("--target", type=int, required=True, help="target mode index")
    p.add_argument("--ion", type=int, default=None,
                   help="probed ion index (default: last ion)")
    p.add_argument("--n-max", type=int, default=4, help="Fock cutoff per mode")
    p.add_argument("--tolerance", type=float, default=1e-6,
                   help="relative convergence target for the population")
    p.add_argument("--out", default=None, help="write result JSON here "
                   "(default: stdout)")

    p = sub.add_parser("sweep", help="run a sweep plan and emit CSV")
    add_modes(p)
    p.add_argument("--plan", required=True, help="sweep-plan JSON file")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--jobs", type=int, default=_default_jobs(),
                   help="worker processes (default: MODESHAPE_JOBS or 1)")
    p.add_argument("--plot", default=None, help="optional plot file (SVG/PNG)")
    p.add_argument("--plot-kind", default="tau", choices=["alpha", "tau", "delta"],
                   help="x-axis of the optional plot")
    p.add_argument("--landscape-kind", default=None, metavar="KIND",
                   help="pulse kind for an error-landscape heat map")
    p.add_argument("--landscape-out", default=None, metavar="PATH",
                   help="output file for the error-landscape heat map")

    p = sub.add_parser("map", help="best pulse kind per (tau, delta) cell")
    add_modes(p)
    p.add_argument("--target", type=int, required=True, help="target mode index")
    p.add_argument("--alpha", type=float, default=1.0,
                   help="Rabi scaling (dimensionless)")
    p.add_argument("--tau-us-grid", required=True,
                   help="comma list of pulse lengths in us")
    p.add_argument("--delta-hz-grid", required=True,
                   help="comma list of detunings in Hz")
    p.add_argument("--kinds", default="square,moment-0,moment-1,moment-2,moment-3",
                   help="comma list of pulse kinds")
    p.add_argument("--n-max", type=int, default=4, help="Fock cutoff per mode")
    p.add_argument("--jobs", type=int, default=_default_jobs(),
                   help="worker processes (default: MODESHAPE_JOBS or 1)")
    p.add_argument("--out", required=True, help="winner-map CSV path")
    p.add_argument("--table-out", default=None,
                   help="also write the underlying sweep table CSV")
    p.add_argument("--plot", default=None, help="optional heat-map plot file")

    p = sub.add_parser("scaling", help="solver runtime/power vs chain length")
    p.add_argument("--n-list", default="3,4,5,6,7",
                   help="comma list of chain lengths")
    p.add_argument("--tau-us-list", default="500,1000,2000",
                   help="comma list of pulse lengths in us")
    p.add_argument("--alpha", type=float, default=1.0,
                   help="Rabi scaling (dimensionless)")
    p.add_argument("--moment", type=int, default=0, help="stabilization order K")
    p.add_argument("--anchor-mhz", type=float, default=2.9574,
                   help="lowest mode frequency of the synthesized chains in MHz")
    p.add_argument("--spacings", default=None,
                   help="JSON file {N: [spacing_khz, ...]} overriding the "
                        "built-in table")
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("export-pulse", help="export pulse time series / spectrum")
    p.add_argument("--pulse", required=True, help="pulse JSON file")
    p.add_argument("--time-csv", default=None, help="time-series CSV (t_us, re, im)")
    p.add_argument("--spectrum-csv", default=None,
                   help="spectrum CSV (f_n_hz, abs, arg)")
    p.add_argument("--samples", type=int, default=2000,
                   help="number of time samples")

    return parser


def _cmd_solve(args) -> int:
    spec = load_mode_spec(args.modes)
    request = ShapeRequest(
        spec=spec,
        target=args.target,
        tau=args.tau_us * 1e-6,
        alpha=args.alpha,
        moment=args.moment,
        window=TWO_PI * 1e3 * args.window_khz,
        second_order_pairs=tuple(_pair_list(args.second_order_pairs)),
    )
    solution = solve_pulse(request, second_order_report=args.full_report)
    save_solution(solution, args.out)
    if args.report_csv:
        report_theta1_csv(solution.diagnostics, f"{args.report_csv}_theta1.csv")
        if solution.diagnostics.theta2 is not None:
            report_theta2_csv(solution.diagnostics, f"{args.report_csv}_theta2.csv")
    print(
        f"solved moment-{solution.moment} pulse: |theta1[target]|="
        f"{solution.alpha:.12g}, null-space dim {solution.null_space_dim}, "
        f"wrote {args.out}"
    )
    return 0


def _cmd_simulate(args) -> int:
    spec = load_mode_spec(args.modes)
    pulse = load_pulse(args.pulse)
    delta = TWO_PI * args.delta_hz
    detuned = with_detuning(spec, delta) if delta else spec
    rep = populations_report(
        pulse, detuned, n_max=args.n_max, tolerance=args.tolerance,
        target=args.target, ion=args.ion,
    )
    doc = {
        "P": rep.p_full,
        "P_model": rep.p_model,
        "E": fractional_error(rep.p_full, rep.p_model),
        "n_max_used": rep.n_max_used,
        "dt_used": rep.dt_used,
    }
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _load_plan(path, spec) -> SweepPlan:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        return SweepPlan(
            spec=spec,
            target=int(doc["target"]),
            kinds=tuple(doc.get("kinds", ["square", "moment-0"])),
            alpha_grid=tuple(doc.get("alpha_grid", [1.0])),
            tau_grid=tuple(t * 1e-6 for t in doc.get("tau_us_grid", [150.0])),
            delta_grid=tuple(
                TWO_PI * d for d in doc.get("delta_hz_grid", [0.0])
            ),
            window=TWO_PI * 1e3 * doc.get("window_khz", 50.0),
            n_max=int(doc.get("n_max", 4)),
            tolerance=float(doc.get("tolerance", 1e-6)),
            ion=doc.get("ion"),
            seed=int(doc.get("seed", 0)),
        )
    except KeyError as exc:
        raise ValidationError(f"sweep plan missing field {exc}") from None


def _cmd_sweep(args) -> int:
    spec = load_mode_spec(args.modes)
    plan = _load_plan(args.plan, spec)
    table = run_sweep(plan, jobs=args.jobs)
    emit_csv(table, args.out)
    if args.plot:
        emit_plot(table, args.plot_kind, args.plot)
    if args.landscape_kind or args.landscape_out:
        if not (args.landscape_kind and args.landscape_out):
            raise ValidationError(
                "--landscape-kind and --landscape-out must be given together"
            )
        emit_error_landscape(table, args.landscape_kind, args.landscape_out)
    print(f"swept {len(table)} cells, wrote {args.out}")
    return 0


def _cmd_map(args) -> int:
    spec = load_mode_spec(args.modes)
    result = best_pulse_map(
        tau_grid=[t * 1e-6 for t in _float_list(args.tau_us_grid)],
        delta_grid=[TWO_PI * d for d in _float_list(args.delta_hz_grid)],
        kinds=[k.strip() for k in args.kinds.split(",") if k.strip()],
        spec=spec,
        alpha=args.alpha,
        target=args.target,
        n_max=args.n_max,
        jobs=args.jobs,
    )
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("tau_us,delta_hz,winner,E\n")
        for i, tau in enumerate(result.tau_grid):
            for j, delta in enumerate(result.delta_grid):
                fh.write(
                    f"{tau * 1e6:.17g},{delta / TWO_PI:.17g},"
                    f"{result.winners[i][j]},{result.errors[i][j]:.17g}\n"
                )
    if args.table_out:
        emit_csv(result.table, args.table_out)
    if args.plot:
        emit_plot(result, "map", args.plot)
    print(f"mapped {len(result.tau_grid) * len(result.delta_grid)} cells, "
          f"wrote {args.out}")
    return 0


def _cmd_scaling(args) -> int:
    spacing_table = None
    if args.spacings:
        with open(args.spacings, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        spacing_table = {int(k): v for k, v in raw.items()}
    rows = scaling_study(
        n_list=_int_list(args.n_list),
        tau_list=[t * 1e-6 for t in _float_list(args.tau_us_list)],
        spacing_table=spacing_table,
        alpha=args.alpha,
        moment=args.moment,
        anchor=TWO_PI * 1e6 * args.anchor_mhz,
    )
    emit_scaling_csv(rows, args.out)
    print(f"timed {len(rows)} solves, wrote {args.out}")
    return 0


def _cmd_export_pulse(args) -> int:
    pulse = load_pulse(args.pulse)
    if not args.time_csv and not args.spectrum_csv:
        raise ValidationError("nothing to export: give --time-csv or --spectrum-csv")
    if args.time_csv:
        time_series_csv(pulse, args.time_csv, n_samples=args.samples)
    if args.spectrum_csv:
        spectrum_csv(pulse, args.spectrum_csv)
    print("exported pulse files")
    return 0


_HANDLERS = {
    "solve": _cmd_solve,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "map": _cmd_map,
    "scaling": _cmd_scaling,
    "export-pulse": _cmd_export_pulse,
}


def dispatch(argv) -> int:
    """Route an argument list to its subcommand; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except ValidationError as exc:
        _fail("validation", exc)
        return 1
    except (FileNotFoundError, json.JSONDecodeError, KeyError, TypeError) as exc:
        _fail("validation", exc)
        return 1
    except ModeshapeError as exc:
        _fail("numerical", exc)
        return 2


def _fail(category: str, exc: BaseException) -> None:
    message = str(exc).replace("\n", " ")
    print(f"modeshape: {category}-error: {message}", file=sys.stderr)


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
