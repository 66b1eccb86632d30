"""Command-line harness: run presets, sweep parameters, verify properties.

Configuration is a flat ``key = value`` text file; every key also works as
``--override key=value`` on the command line, with the command line winning.
The ``preset`` key picks the experiment; remaining keys override spec,
noise, and solver fields (see ``apply_overrides`` for the key tables).

Output directory precedence: ``--out``, then ``$NEWTON_LANDWEBER_OUT``,
then ``./runs``. Each run writes ``iterations.csv``, ``summary.csv`` and
``solution.csv`` into its own subdirectory; ``sweep`` additionally merges
the per-run summary rows into ``sweep_summary.csv``.
"""

from __future__ import annotations

import argparse
import itertools
import os
import sys

from .checks import run_checks
from .experiments import PRESETS, ExperimentSpec, RunReport, build_spec
from .reporting import write_run, write_summary_rows

ENV_OUT = "NEWTON_LANDWEBER_OUT"


def parse_config(path: str) -> dict[str, str]:
    """Read a flat key=value file; '#' starts a comment, blanks ignored."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def resolve_outdir(arg: str | None) -> str:
    if arg:
        return arg
    env = os.environ.get(ENV_OUT)
    if env:
        return env
    return os.path.join(os.curdir, "runs")


def run_label(spec: ExperimentSpec) -> str:
    """Directory name carrying the identifying knobs of a run."""
    parts = [
        spec.name,
        f"p{spec.space.p:g}",
        f"r{spec.space.r:g}",
        f"delta{spec.noise.delta:g}",
    ]
    tau = spec.solver.get("tau")
    if tau is not None:
        parts.append(f"tau{tau:g}")
    parts.append(f"seed{spec.seed}")
    return "_".join(part.replace("+", "") for part in parts)


def _gather_overrides(args: argparse.Namespace) -> tuple[str, dict[str, str]]:
    """Merge config file, --preset/--seed flags and --override pairs."""
    values: dict[str, str] = {}
    if args.config:
        values.update(parse_config(args.config))
    preset = args.preset or values.pop("preset", None)
    if preset is None:
        raise ValueError("no preset: pass --preset or put 'preset = <name>' in the config")
    if preset not in PRESETS:
        known = ", ".join(sorted(PRESETS))
        raise ValueError(f"unknown preset {preset!r} (known: {known})")
    values.pop("preset", None)
    if args.seed is not None:
        values["seed"] = str(args.seed)
    for pair in args.override or []:
        if "=" not in pair:
            raise ValueError(f"--override needs key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        values[key.strip()] = value.strip()
    return preset, values


def _report_line(report: RunReport) -> str:
    return (
        f"{report.spec.name}: n*={report.n_star} N_p={report.n_p} "
        f"err_L2={report.err_l2:.6g} err_Lp={report.err_lp:.6g} reason={report.reason}"
    )


def _execute(
    preset: str, overrides: dict[str, str], outdir: str, label_extra: str = ""
) -> tuple[RunReport, str]:
    from .experiments import run_experiment

    spec = build_spec(preset, overrides)
    report = run_experiment(spec)
    rundir = os.path.join(outdir, run_label(spec) + label_extra)
    write_run(rundir, report)
    return report, rundir


def cmd_run(args: argparse.Namespace) -> int:
    preset, overrides = _gather_overrides(args)
    outdir = resolve_outdir(args.out)
    report, rundir = _execute(preset, overrides, outdir)
    print(_report_line(report))
    print(f"wrote {rundir}")
    if report.result.failed:
        print(f"run failed: {report.reason}", file=sys.stderr)
        return 1
    return 0


def _parse_vary(pairs: list[str]) -> list[tuple[str, list[str]]]:
    axes = []
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"--vary needs key=v1,v2,..., got {pair!r}")
        key, values = pair.split("=", 1)
        options = [v.strip() for v in values.split(",") if v.strip()]
        if not options:
            raise ValueError(f"--vary {key!r} lists no values")
        axes.append((key.strip(), options))
    return axes


def cmd_sweep(args: argparse.Namespace) -> int:
    preset, base = _gather_overrides(args)
    axes = _parse_vary(args.vary)
    outdir = resolve_outdir(args.out)
    reports = []
    failed = 0
    # run labels only carry p/r/delta/tau/seed; tag every other swept key on
    labeled = {"p", "r", "delta", "tau", "seed"}
    for combo in itertools.product(*(options for _, options in axes)):
        overrides = dict(base)
        overrides.update({key: value for (key, _), value in zip(axes, combo)})
        extra = "".join(
            f"_{key}{value}".replace("+", "")
            for (key, _), value in zip(axes, combo)
            if key not in labeled
        )
        report, rundir = _execute(preset, overrides, outdir, extra)
        reports.append(report)
        print(_report_line(report) + f"  [{rundir}]")
        failed += report.result.failed
    merged = os.path.join(outdir, "sweep_summary.csv")
    write_summary_rows(merged, reports)
    print(f"wrote {merged}")
    if failed:
        print(f"{failed} of {len(reports)} runs failed", file=sys.stderr)
        return 1
    return 0


def cmd_verify(_: argparse.Namespace) -> int:
    results = run_checks()
    for res in results:
        print(f"{'PASS' if res.ok else 'FAIL'}  {res.name}: {res.detail}")
    bad = sum(not res.ok for res in results)
    if bad:
        print(f"{bad} of {len(results)} checks failed", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="newton-landweber",
        description="Newton-type iteratively regularized Landweber iteration in L^p spaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="flat key=value configuration file")
        p.add_argument("--preset", help="experiment preset name", choices=sorted(PRESETS))
        p.add_argument("--seed", type=int, help="noise seed override")
        p.add_argument("--out", help=f"output directory (default ${ENV_OUT} or ./runs)")
        p.add_argument(
            "--override",
            action="append",
            metavar="KEY=VALUE",
            help="spec/solver override, repeatable",
        )

    p_run = sub.add_parser("run", help="run one experiment and write its CSVs")
    add_common(p_run)
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a cartesian parameter sweep")
    add_common(p_sweep)
    p_sweep.add_argument(
        "--vary",
        action="append",
        required=True,
        metavar="KEY=V1,V2,...",
        help="sweep axis, repeatable (cartesian product)",
    )
    p_sweep.set_defaults(fn=cmd_sweep)

    p_verify = sub.add_parser("verify", help="run the property check suite")
    p_verify.set_defaults(fn=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
