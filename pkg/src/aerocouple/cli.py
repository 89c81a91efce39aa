"""Command-line entry point: run, sweep, analyze and check subcommands.

The CLI is a thin client of the driver layer; all numerics live in the
package.  Exit codes: 0 success, 1 input/validation failure, 2 runtime
non-convergence.
"""

from __future__ import annotations

import argparse
import pathlib
import sys

from .driver import (
    analyze_modes,
    analyze_transfer_function,
    check_from_config,
    run_from_config,
    sweep_from_config,
)
from .errors import (
    AerocoupleError,
    ConvergenceError,
    SingularSystemError,
)
from .model_io import parse_config, parse_structural_model, read_history
from .postproc import flutter_boundary

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_RUNTIME = 2


def _load_inputs(args):
    config = parse_config(pathlib.Path(args.config).read_text())
    model = parse_structural_model(pathlib.Path(args.model).read_text())
    return config, model


def _emit(args, message: str) -> None:
    if not getattr(args, "quiet", False):
        print(message)


def _cmd_run(args) -> int:
    config, model = _load_inputs(args)
    for warning in config.warnings:
        _emit(args, f"warning: {warning}")
    output = run_from_config(config, model)
    out_dir = pathlib.Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    history_path = out_dir / "history.csv"
    history_path.write_text(output.history_csv)
    _emit(args, f"wrote {history_path}")
    if output.fsi_log_csv is not None:
        log_path = out_dir / "fsi_log.csv"
        log_path.write_text(output.fsi_log_csv)
        _emit(args, f"wrote {log_path}")
    for key, value in output.summary.items():
        if isinstance(value, float):
            _emit(args, f"{key.removeprefix('final_')} = {value:.6g}")
        else:
            _emit(args, f"{key.removeprefix('final_')} = {value}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config_text = pathlib.Path(args.config).read_text()
    model = parse_structural_model(pathlib.Path(args.model).read_text())
    values = [float(v) for v in args.values.split(",")]
    output = sweep_from_config(config_text, model, args.key, values)
    out_dir = pathlib.Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sweep_path = out_dir / "sweep.csv"
    sweep_path.write_text(output.csv())
    _emit(args, f"wrote {sweep_path}")
    _emit(args, "value        damping      frequency_hz")
    for row in output.rows:
        _emit(args, f"{row.value:<12.6g} {row.damping:<12.6g} {row.frequency:<12.6g}")
    if output.flutter_speed is not None:
        _emit(args, f"flutter {args.key.upper()} = {output.flutter_speed:.6g} "
                    f"(bracket {output.bracket[0]:.6g} .. {output.bracket[1]:.6g})")
    else:
        _emit(args, f"no crossing: {output.trend}")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    history = read_history(args.history)
    if args.op == "transfer_function":
        tf = analyze_transfer_function(history, args.input_column,
                                       args.output_column, args.frequency,
                                       args.transient_fraction)
        print(f"magnitude = {tf.magnitude:.12e}")
        print(f"phase_deg = {tf.phase_deg:.6f}")
        if tf.ill_conditioned:
            print("warning: transfer function denominator is ill conditioned")
    elif args.op == "modal_identification":
        modes = analyze_modes(history, args.column, args.n_expected,
                              args.transient_fraction)
        print("frequency_hz damping      amplitude")
        for mode in modes:
            print(f"{mode.frequency_hz:<12.6g} {mode.damping:<12.6g} "
                  f"{mode.amplitude:<12.6g}")
    else:  # flutter_boundary over a sweep CSV (value,damping,frequency)
        rows = [line.split(",") for line in
                pathlib.Path(args.history).read_text().strip().splitlines()[1:]]
        speeds = [float(r[0]) for r in rows]
        damps = [float(r[1]) for r in rows]
        boundary = flutter_boundary(speeds, damps)
        if boundary.speed is not None:
            print(f"flutter speed = {boundary.speed:.6g} "
                  f"(bracket {boundary.bracket[0]:.6g} .. {boundary.bracket[1]:.6g})")
        else:
            print(f"no crossing: {boundary.trend}")
    return EXIT_OK


def _cmd_check(args) -> int:
    config, model = _load_inputs(args)
    report = check_from_config(config, model)
    print(f"mode            : {report.mode}")
    print(f"aero model      : {report.aero_model}")
    print(f"generalized DOFs: {report.n_modes}")
    print(f"structural nodes: {report.n_nodes}")
    print(f"fluid points    : {report.n_fluid_points}")
    print(f"map condition   : {report.map_condition:.6e}")
    freqs = ", ".join(f"{f:.6g}" for f in report.frequencies)
    print(f"frequencies     : {freqs} rad/s")
    for warning in report.warnings:
        print(f"warning: {warning}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aerocouple",
        description="Partitioned aeroelastic coupling engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one simulation")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--model", required=True)
    run_p.add_argument("--out-dir", default=".")
    run_p.add_argument("--quiet", action="store_true")
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="vary one config key over a list")
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument("--model", required=True)
    sweep_p.add_argument("--key", required=True)
    sweep_p.add_argument("--values", required=True,
                         help="comma-separated values, e.g. 30,40,50")
    sweep_p.add_argument("--out-dir", default=".")
    sweep_p.add_argument("--quiet", action="store_true")
    sweep_p.set_defaults(func=_cmd_sweep)

    an_p = sub.add_parser("analyze", help="postprocess an existing history CSV")
    an_p.add_argument("--history", required=True)
    an_p.add_argument("--op", required=True,
                      choices=["transfer_function", "modal_identification",
                               "flutter_boundary"])
    an_p.add_argument("--input-column", dest="input_column")
    an_p.add_argument("--output-column", dest="output_column")
    an_p.add_argument("--frequency", type=float)
    an_p.add_argument("--column")
    an_p.add_argument("--n-expected", dest="n_expected", type=int, default=2)
    an_p.add_argument("--transient-fraction", dest="transient_fraction",
                      type=float, default=0.2)
    an_p.set_defaults(func=_cmd_analyze)

    check_p = sub.add_parser("check", help="validate inputs without running")
    check_p.add_argument("--config", required=True)
    check_p.add_argument("--model", required=True)
    check_p.set_defaults(func=_cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConvergenceError, SingularSystemError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc, ConvergenceError) and exc.residuals:
            tail = ", ".join(f"{r:.3e}" for r in exc.residuals[-5:])
            print(f"residual trajectory (tail): {tail}", file=sys.stderr)
        return EXIT_RUNTIME
    except (AerocoupleError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
