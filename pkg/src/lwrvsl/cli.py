"""Command-line front end: simulate, sweep, riccati, verify.

Exit codes: 0 success, 1 usage or configuration error, 2 solver abort
or artifact write failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .config import FORMATS, ConfigError, RunConfig, parse_config
from .output import (
    svg_lineplot,
    write_json,
    write_riccati_artifacts,
    write_run_artifacts,
    write_total_cars_csv,
    fmt_float,
)
from .scenario import REFERENCE_Q0_VALUES, run_simulation, target_cars, time_to_target
from .solvers import SolverError
from .verify import run_all_checks

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SOLVER = 2
EXIT_VERIFY = 3


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with code 1."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML configuration file")
    common.add_argument("--out", help="output directory (overrides config)")
    common.add_argument(
        "--formats", help="comma-separated subset of csv,json,svg (overrides config)"
    )
    common.add_argument(
        "--model", choices=("linear", "nonlinear"), help="plant model (overrides config)"
    )
    common.add_argument(
        "--control", choices=("on", "off"), help="feedback on or off (overrides config)"
    )
    common.add_argument(
        "--q0",
        action="append",
        type=float,
        help="state weight; repeat for sweep/riccati curve families",
    )
    parser = _Parser(prog="lwrvsl", description=__doc__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser(
        "simulate", parents=[common], help="run one closed- or open-loop simulation"
    )
    subparsers.add_parser(
        "sweep", parents=[common], help="run one simulation per q0 and combine results"
    )
    subparsers.add_parser(
        "riccati", parents=[common], help="emit Phi and gain profiles per q0"
    )
    subparsers.add_parser("verify", help="run the oracle and property suite")
    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    text = ""
    if args.config is not None:
        text = Path(args.config).read_text()
    config = parse_config(text)
    scenario = config.scenario
    if args.model is not None:
        scenario = dataclasses.replace(scenario, model=args.model)
    if args.control is not None:
        scenario = dataclasses.replace(scenario, control_enabled=args.control == "on")
    replacements: dict[str, object] = {"scenario": scenario}
    if args.out is not None:
        replacements["output_dir"] = args.out
    if args.formats is not None:
        chosen = tuple(part.strip() for part in args.formats.split(",") if part.strip())
        if not chosen or any(f not in FORMATS for f in chosen):
            raise ConfigError(f"--formats must be a non-empty subset of {FORMATS}")
        replacements["formats"] = chosen
    return dataclasses.replace(config, **replacements)


def cmd_simulate(config: RunConfig) -> int:
    """Run one simulation and write its artifact set."""
    try:
        history = run_simulation(config.scenario, config.output_cadence, config.cfl)
    except SolverError as exc:
        print(f"solver abort: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    try:
        written = write_run_artifacts(
            config.output_dir,
            config.scenario,
            history,
            config.formats,
            config.cfl,
            config.output_cadence,
        )
    except OSError as exc:
        print(f"write failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    print(f"wrote {len(written)} files to {config.output_dir}")
    print(f"final total cars: {history.total_cars_series[-1]:.6g}")
    return EXIT_OK


def cmd_sweep(config: RunConfig, q0_list: list[float]) -> int:
    """Run one simulation per q0; keep successful members on failure."""
    if not q0_list:
        print("sweep needs a non-empty q0 list (--q0, repeatable)", file=sys.stderr)
        return EXIT_USAGE
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    members = []
    failures: dict[str, str] = {}
    for q0 in q0_list:
        label = f"{q0:g}"
        try:
            scenario = dataclasses.replace(config.scenario, q0=q0)
            history = run_simulation(scenario, config.output_cadence, config.cfl)
            write_run_artifacts(
                out / f"q0_{label}",
                scenario,
                history,
                config.formats,
                config.cfl,
                config.output_cadence,
            )
            members.append((q0, scenario, history))
        except (SolverError, ValueError, OSError) as exc:
            failures[label] = str(exc)
            print(f"sweep member q0={label} failed: {exc}", file=sys.stderr)
    if members:
        times = members[0][2].times
        if "csv" in config.formats:
            with open(out / "total_cars_sweep.csv", "w", newline="\n") as fh:
                header = ["t_s"] + [f"total_cars[q0={q0:g}]" for q0, _, _ in members]
                fh.write(",".join(header) + "\n")
                for i, t in enumerate(times):
                    row = [fmt_float(t)] + [
                        fmt_float(history.total_cars_series[i]) for _, _, history in members
                    ]
                    fh.write(",".join(row) + "\n")
        if "json" in config.formats:
            target = target_cars(config.scenario.params)
            write_json(
                out / "sweep_summary.json",
                {
                    "q0_values": [q0 for q0, _, _ in members],
                    "target_cars": target,
                    "final_total_cars": {
                        f"{q0:g}": float(history.total_cars_series[-1])
                        for q0, _, history in members
                    },
                    "time_to_target_s": {
                        f"{q0:g}": time_to_target(history, target)
                        for q0, _, history in members
                    },
                    "failures": failures,
                },
            )
        if "svg" in config.formats:
            svg_lineplot(
                out / "total_cars_sweep.svg",
                times,
                [(f"q0={q0:g}", history.total_cars_series) for q0, _, history in members],
                title="Total cars on the road section",
                x_label="t [s]",
                y_label="total cars",
            )
    return EXIT_SOLVER if failures else EXIT_OK


def cmd_riccati(config: RunConfig, q0_values: list[float] | None = None) -> int:
    """Emit Phi(z) and K0(z) for one or more q0 values."""
    chosen = q0_values if q0_values else [config.scenario.q0]
    try:
        written = write_riccati_artifacts(
            config.output_dir, config.scenario, chosen, config.formats
        )
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"write failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    print(f"wrote {len(written)} files to {config.output_dir}")
    return EXIT_OK


def cmd_verify() -> int:
    """Run every property check, print one line per check."""
    results = run_all_checks()
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        line = f"{status} {result.name}: measured={result.measured:.6g} bound {result.bound}"
        if result.detail:
            line += f" [{result.detail}]"
        print(line)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "verify":
        return cmd_verify()
    try:
        config = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    q0_list = args.q0 or []
    if args.command == "simulate":
        if len(q0_list) > 1:
            print("simulate takes at most one --q0", file=sys.stderr)
            return EXIT_USAGE
        if q0_list:
            try:
                scenario = dataclasses.replace(config.scenario, q0=q0_list[0])
            except ValueError as exc:
                print(f"config error: {exc}", file=sys.stderr)
                return EXIT_USAGE
            config = dataclasses.replace(config, scenario=scenario)
        return cmd_simulate(config)
    if args.command == "sweep":
        return cmd_sweep(config, q0_list or list(REFERENCE_Q0_VALUES))
    if args.command == "riccati":
        return cmd_riccati(config, q0_list or None)
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
