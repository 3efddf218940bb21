"""Command line front end.

Three subcommands: ``validate`` checks a scenario file and reports
findings, ``run`` simulates one or more seeds and writes traces,
``sweep`` runs a block of consecutive seeds and writes a summary table.

Exit codes: 0 success, 1 scenario validation failure, 2 unreadable or
malformed input, 3 internal invariant breach (a conservation identity
failed on a run without recorded violations, which means a bug).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

from .analysis import conservation_audit, convergence_time
from .engine import EngineInvariantError, RoundRecord, run
from .reporting import (
    render_error_svg,
    render_estimates_svg,
    write_summary_csv,
    write_trace_csv,
    write_svg,
)
from .scenario import (
    Scenario,
    ScenarioFormatError,
    ValidationReport,
    load_scenario,
    validate_scenario,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INPUT = 2
EXIT_INVARIANT = 3


@dataclass(frozen=True)
class RunConfig:
    """Resolved options for a run or sweep invocation."""

    scenario_path: Path
    seeds: tuple[int, ...]
    out_dir: Path
    svg: bool = False
    strict: bool = False


def _print_findings(report: ValidationReport) -> None:
    for finding in report.findings:
        print(f"{finding.severity.upper():7s} {finding.code}: {finding.message}")


def _load(path: str) -> Scenario | None:
    try:
        return load_scenario(path)
    except ScenarioFormatError as exc:
        print(f"cannot load scenario: {exc}", file=sys.stderr)
        return None


def _gate(scenario: Scenario, strict: bool) -> bool:
    """Print findings; True when the scenario may run under this policy."""
    report = validate_scenario(scenario)
    _print_findings(report)
    if not report.ok(strict=strict):
        errors = len(report.errors())
        warnings = len(report.warnings())
        print(f"validation failed: {errors} error(s), {warnings} warning(s)")
        return False
    return True


def cmd_validate(args: argparse.Namespace) -> int:
    scenario = _load(args.scenario)
    if scenario is None:
        return EXIT_INPUT
    report = validate_scenario(scenario)
    _print_findings(report)
    errors = len(report.errors())
    warnings = len(report.warnings())
    print(f"{errors} error(s), {warnings} warning(s)")
    return EXIT_OK if report.ok(strict=args.strict) else EXIT_VALIDATION


def _summarize(scenario: Scenario, seed: int, records: list[RoundRecord]) -> dict[str, object]:
    audit = conservation_audit(records)
    try:
        report = convergence_time(records, scenario.k_prime)
        converged = report.converged
        settle = "" if report.settle_step is None else str(report.settle_step)
        average = f"{report.average.numerator}/{report.average.denominator}"
        band = "|".join(str(b) for b in sorted(report.band))
        residual = report.residual_error
    except ValueError:
        # membership kept changing inside the judged window
        converged = False
        settle, average, band = "", "", ""
        residual = records[-1].epsilon
    return {
        "seed": seed,
        "converged": converged,
        "settle_step": settle,
        "average": average,
        "band": band,
        "residual_error": residual,
        "max_abs_y_imbalance": max(abs(row.y_imbalance) for row in audit),
        "max_abs_z_imbalance": max(abs(row.z_imbalance) for row in audit),
        "violation_count": sum(len(r.violations) for r in records),
    }


def _check_conservation(records: list[RoundRecord]) -> bool:
    """True when conservation holds wherever it must.

    Any recorded violation (a stranded departure) legitimately breaks
    the identities from that step on, so only violation-free prefixes
    are held to the exact-zero standard.
    """
    first_violation = next(
        (r.step for r in records if r.violations), len(records)
    )
    audit = conservation_audit(records)
    for row in audit:
        if row.step <= first_violation and (row.y_imbalance or row.z_imbalance):
            return False
    return True


def cmd_run(args: argparse.Namespace) -> int:
    scenario = _load(args.scenario)
    if scenario is None:
        return EXIT_INPUT
    if not _gate(scenario, args.strict):
        return EXIT_VALIDATION
    config = RunConfig(
        scenario_path=Path(args.scenario),
        seeds=tuple(args.seed) if args.seed else (scenario.seed,),
        out_dir=Path(args.out),
        svg=args.svg,
        strict=args.strict,
    )
    config.out_dir.mkdir(parents=True, exist_ok=True)
    stem = config.scenario_path.stem
    for seed in config.seeds:
        try:
            records = run(scenario, seed)
        except EngineInvariantError as exc:
            print(f"seed {seed}: invariant breach: {exc}", file=sys.stderr)
            return EXIT_INVARIANT
        if not _check_conservation(records):
            print(
                f"seed {seed}: conservation identity failed on a violation-free "
                "prefix; this is a bug",
                file=sys.stderr,
            )
            return EXIT_INVARIANT
        trace_path = config.out_dir / f"{stem}-seed{seed}-trace.csv"
        write_trace_csv(records, scenario.n_total, trace_path)
        summary = _summarize(scenario, seed, records)
        state = (
            f"settled at step {summary['settle_step']}"
            if summary["converged"]
            else "did not settle"
        )
        print(
            f"seed {seed}: {len(records)} steps, final error "
            f"{records[-1].epsilon}, {state}, "
            f"{summary['violation_count']} violation(s), trace -> {trace_path}"
        )
        if config.svg:
            estimates_path = config.out_dir / f"{stem}-seed{seed}-estimates.svg"
            error_path = config.out_dir / f"{stem}-seed{seed}-error.svg"
            write_svg(render_estimates_svg(records, scenario.n_total), estimates_path)
            write_svg(render_error_svg(records), error_path)
            print(f"seed {seed}: charts -> {estimates_path}, {error_path}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    scenario = _load(args.scenario)
    if scenario is None:
        return EXIT_INPUT
    if not _gate(scenario, strict=False):
        return EXIT_VALIDATION
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for seed in range(scenario.seed, scenario.seed + args.seeds):
        try:
            records = run(scenario, seed)
        except EngineInvariantError as exc:
            print(f"seed {seed}: invariant breach: {exc}", file=sys.stderr)
            return EXIT_INVARIANT
        if not _check_conservation(records):
            print(f"seed {seed}: conservation identity failed", file=sys.stderr)
            return EXIT_INVARIANT
        rows.append(_summarize(scenario, seed, records))
    path = out_dir / f"{Path(args.scenario).stem}-sweep.csv"
    write_summary_csv(rows, path)
    settled = sum(1 for row in rows if row["converged"])
    print(f"{settled}/{len(rows)} seeds settled, summary -> {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="openavg",
        description="simulate quantized average consensus on open dynamic networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check a scenario file")
    p_validate.add_argument("scenario")
    p_validate.add_argument(
        "--strict", action="store_true", help="treat warnings as failures"
    )
    p_validate.set_defaults(func=cmd_validate)

    p_run = sub.add_parser("run", help="simulate and write traces")
    p_run.add_argument("scenario")
    p_run.add_argument(
        "--seed",
        type=int,
        action="append",
        help="seed to run; repeatable, default is the scenario's seed",
    )
    p_run.add_argument("--out", default=".", help="output directory")
    p_run.add_argument("--svg", action="store_true", help="also write charts")
    p_run.add_argument(
        "--strict", action="store_true", help="refuse to run on warnings"
    )
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run consecutive seeds, summarize")
    p_sweep.add_argument("scenario")
    p_sweep.add_argument("--seeds", type=int, required=True, help="how many seeds")
    p_sweep.add_argument("--out", default=".", help="output directory")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
