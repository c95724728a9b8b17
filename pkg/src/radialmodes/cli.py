"""Command-line front end.

::

    radialmodes run <scenario | bundled name> [--seed N] [--out-dir DIR] [--format csv|json]
    radialmodes list
    radialmodes compile <target.toml> -o <schedule>
    radialmodes verify <schedule> --target <target.toml>

Exit codes: 0 success, 2 configuration error, 3 numerical or physics error.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .compiler.compile import compile_target, verify_schedule
from .compiler.schedule import format_schedule, parse_schedule
from .errors import ConfigError, RadialModesError
from .scenario import format_csv, format_json, list_scenarios, load_scenario, load_target, run_scenario

__all__ = ["main", "main_entry", "build_parser", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERIC"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2**64)")
    return v


def _common(defaults):
    p = argparse.ArgumentParser(add_help=False)
    kw = {} if defaults else {"default": argparse.SUPPRESS}
    p.add_argument("--seed", type=_seed, help="random seed (unsigned 64-bit)", **({"default": 0} if defaults else kw))
    p.add_argument("--out-dir", help="directory for output files", **({"default": "."} if defaults else kw))
    p.add_argument("--format", choices=("csv", "json"), help="output format",
                   **({"default": None} if defaults else kw))
    return p


def build_parser():
    parser = argparse.ArgumentParser(
        prog="radialmodes",
        description="Gaussian dynamics of trapped-ion radial modes and a frequency-schedule compiler.",
        parents=[_common(True)],
    )
    sub = parser.add_subparsers(dest="command", required=True)
    shared = _common(False)
    p = sub.add_parser("run", parents=[shared], help="run a scenario file or a bundled scenario")
    p.add_argument("config", help="path to a scenario TOML file or the name of a bundled scenario")
    sub.add_parser("list", parents=[shared], help="list the bundled scenarios")
    p = sub.add_parser("compile", parents=[shared], help="compile a target operation to a schedule")
    p.add_argument("target", help="target TOML file")
    p.add_argument("-o", "--output", required=True, help="schedule file to write")
    p = sub.add_parser("verify", parents=[shared], help="simulate a schedule and compare with a target")
    p.add_argument("schedule", help="schedule file")
    p.add_argument("--target", required=True, help="target TOML file")
    return parser


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _summary_value(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_summary_value(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}={_summary_value(x)}" for k, x in v.items()) + "}"
    return str(v)


def _cmd_run(args, out):
    cfg = load_scenario(args.config)
    fmt = args.format or cfg.output_format
    tables = run_scenario(cfg, seed=args.seed)
    out_dir = Path(args.out_dir)
    for table in tables:
        path = out_dir / f"{table.name}.{fmt}"
        _write(path, format_csv(table) if fmt == "csv" else format_json(table))
        print(f"{table.name}: wrote {path} ({len(table.rows)} rows)", file=out)
        for k, v in table.summary.items():
            print(f"  {k}: {_summary_value(v)}", file=out)
    return EXIT_OK


def _cmd_list(args, out):
    rows = list_scenarios()
    if args.format == "json":
        print(json.dumps([{"name": n, "description": d} for n, d in rows], indent=1), file=out)
    else:
        width = max(len(n) for n, _ in rows)
        for n, d in rows:
            print(f"{n:<{width}}  {d}", file=out)
    return EXIT_OK


def _print_report(report, fmt, out):
    if fmt == "json":
        print(json.dumps(report.as_dict(), indent=1), file=out)
    else:
        print(f"deviation          {report.deviation:.3e}", file=out)
        print(f"spectator leakage  {report.spectator_leakage:.3e}", file=out)
        print(f"rwa residual       {report.rwa_residual:.3e}", file=out)
        print(f"tolerance          {report.tolerance:.1e}", file=out)
        print("PASSED" if report.passed else "FAILED", file=out)


def _cmd_compile(args, out):
    tc = load_target(args.target)
    sched = compile_target(tc.target, tc.chain, tol=tc.tolerance, check=False)
    _write(Path(args.output), format_schedule(sched))
    report = sched.notes["verification"]
    print(f"wrote {args.output} ({len(sched)} instructions, duration {sched.total_duration:.6g})", file=out)
    _print_report(report, args.format, out)
    return EXIT_OK if report.passed else EXIT_NUMERIC


def _cmd_verify(args, out):
    try:
        text = Path(args.schedule).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read schedule {args.schedule}: {exc}") from None
    sched = parse_schedule(text)
    tc = load_target(args.target)
    cfg = sched.base_config
    if cfg.n != tc.chain.n or not np.allclose(cfg.bare_frequencies, tc.chain.bare_frequencies,
                                              rtol=1e-9, atol=0):
        raise ConfigError("the schedule was built for a different chain than the target names")
    report = verify_schedule(sched, tc.target, tc.tolerance)
    _print_report(report, args.format, out)
    return EXIT_OK if report.passed else EXIT_NUMERIC


_COMMANDS = {"run": _cmd_run, "list": _cmd_list, "compile": _cmd_compile, "verify": _cmd_verify}


def main(argv=None, out=None, err=None):
    """Entry point; returns the exit code."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args, out)
    except ConfigError as exc:
        print(f"error [{exc.module}]: {exc}", file=err)
        return EXIT_CONFIG
    except RadialModesError as exc:
        print(f"error [{exc.module}]: {exc}", file=err)
        return EXIT_NUMERIC
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error [numerics]: {type(exc).__name__}: {exc}", file=err)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error [io]: {exc}", file=err)
        return EXIT_NUMERIC
    except Exception as exc:  # noqa: BLE001
        print(f"error [internal]: {type(exc).__name__}: {exc}", file=err)
        return EXIT_NUMERIC


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
