"""Command-line front end.

    qirec list
    qirec run SCENARIO [--config FILE] [--set section.key=value ...] [--grid N]
              [--out DIR] [--format csv|json] [--jobs N]
    qirec measures SCENARIO [...]
    qirec check-divisibility SCENARIO [...]

Exit status: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field

from . import scenarios
from .channels import is_cp_divisible
from .errors import ConfigError, NumericalError
from .witness import positive_increase

VERBS = ("run", "list", "measures", "check-divisibility")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


@dataclass
class CliCommand:
    verb: str
    scenario: str | None = None
    config_path: str | None = None
    overrides: list = field(default_factory=list)
    grid: int | None = None
    out: str | None = None
    fmt: str | None = None
    jobs: int = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qirec", description="Coherence quantifiers and non-Markovianity witnesses.")
    parser.add_argument("verb", choices=VERBS)
    parser.add_argument("scenario", nargs="?", help="registry id (see 'qirec list')")
    parser.add_argument("--config", dest="config_path", help="scenario file in INI format")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
    parser.add_argument("--grid", type=int, help="number of time points")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--format", dest="fmt", choices=("csv", "json"))
    parser.add_argument("--jobs", type=int, default=1, help="cap on parallel worker processes")
    return parser


def parse_args(argv=None) -> CliCommand:
    ns = _build_parser().parse_args(argv)
    cmd = CliCommand(**vars(ns))
    if cmd.verb != "list" and not (cmd.scenario or cmd.config_path):
        _build_parser().error(f"'{cmd.verb}' needs a scenario id or --config")
    if cmd.jobs < 1:
        _build_parser().error("--jobs must be at least 1")
    return cmd


def resolve_config(cmd: CliCommand) -> scenarios.ScenarioConfig:
    if cmd.config_path:
        cfg = scenarios.load_config(cmd.config_path)
        if cmd.scenario and cmd.scenario != cfg.scenario_id:
            raise ConfigError(f"scenario {cmd.scenario!r} does not match config id {cfg.scenario_id!r}")
    else:
        cfg = scenarios.get_scenario(cmd.scenario)
    overrides = list(cmd.overrides)
    if cmd.grid is not None:
        overrides.append(f"time_grid.n_points={cmd.grid}")
    if cmd.out is not None:
        overrides.append(f"output.path={cmd.out}")
    if cmd.fmt is not None:
        overrides.append(f"output.format={cmd.fmt}")
    return scenarios.apply_overrides(cfg, overrides)


def _fmt_intervals(intervals) -> str:
    if not intervals:
        return "none"
    return " ".join(f"[{a:.6f}, {b:.6f}]" for a, b in intervals)


def summary_lines(result: scenarios.ScenarioResult) -> list[str]:
    """Fixed-order, 6-decimal summary used for stdout."""
    lines = [f"scenario: {result.config.scenario_id}"]
    for s in result.series:
        inc, intervals = positive_increase(s)
        basis = "-" if s.basis is None else scenarios._format_basis(s.basis)
        lines.append(f"{s.name:<20s} basis={basis:<12s} increase = {inc:.6f}  intervals: {_fmt_intervals(intervals)}")
    for r in result.reports:
        label = r.measure
        if r.measure == "monotonicity_witness":
            basis = "-" if r.argmax is None else scenarios._format_basis(r.argmax)
            label = f"monotonicity[{r.details['quantifier']}@{basis}]"
        lines.append(f"{label} = {r.value:.6f}  intervals: {_fmt_intervals(r.violation_intervals)}")
    return lines


def _run(cmd: CliCommand, *, measures_only: bool) -> int:
    cfg = resolve_config(cmd)
    if measures_only:
        cfg.analysis.quantifiers = ()
        if not cfg.analysis.measures:
            cfg.analysis.measures = ("N_QI", "BLP", "RHP")
    result = scenarios.run_scenario(cfg, jobs=cmd.jobs)
    print("\n".join(summary_lines(result)))
    if not measures_only:
        print(f"wrote {scenarios.export(result)}")
    return EXIT_OK


def _check_divisibility(cmd: CliCommand) -> int:
    cfg = resolve_config(cmd)
    ok, first = is_cp_divisible(scenarios.build_family(cfg.channel), scenarios.time_grid(cfg))
    print("CP-divisible: yes" if ok else f"CP-divisible: no, first violation t={first:.6f}")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        cmd = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if cmd.verb == "list":
            print("\n".join(scenarios.REGISTRY_IDS))
            return EXIT_OK
        if cmd.verb == "check-divisibility":
            return _check_divisibility(cmd)
        return _run(cmd, measures_only=cmd.verb == "measures")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
