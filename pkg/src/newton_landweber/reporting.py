"""CSV emission: per-step iteration traces, run summaries, solution profiles.

All floats are written with ``repr`` (shortest round-trip form), so output is
byte-identical across runs of the same seed. The lone exception is wall-clock
time in the summary, which is inherently nondeterministic and formatted to
three decimals; consumers comparing outputs should mask that column.
"""

from __future__ import annotations

import csv
import os
from typing import Iterable

from .experiments import RunReport
from .solver import IterationLog

__all__ = [
    "ITERATION_COLUMNS",
    "SUMMARY_COLUMNS",
    "SOLUTION_COLUMNS_1D",
    "SOLUTION_COLUMNS_2D",
    "write_iterations",
    "write_summary",
    "write_solution",
    "write_run",
    "summary_row",
    "write_summary_rows",
]

ITERATION_COLUMNS = [
    "n",
    "k",
    "t",
    "t_tilde",
    "omega",
    "alpha",
    "r_n",
    "F_residual",
    "d2",
    "gamma",
]
SUMMARY_COLUMNS = [
    "preset",
    "p",
    "r",
    "delta",
    "seed",
    "n_star",
    "N_p",
    "err_L2",
    "err_Lp",
    "reason",
    "wall_ms",
]
SOLUTION_COLUMNS_1D = ["x", "c_true", "c_rec"]
SOLUTION_COLUMNS_2D = ["x", "y", "c_true", "c_rec"]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_rows(path: str, header: list[str], rows: Iterable[Iterable]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def write_iterations(path: str, log: IterationLog) -> None:
    """One row per inner step, in execution order."""
    rows = (
        (
            rec.n,
            rec.k,
            rec.t,
            rec.t_tilde,
            rec.omega,
            rec.alpha,
            rec.r_n,
            rec.f_residual,
            rec.d2,
            rec.gamma,
        )
        for rec in log.records
    )
    _write_rows(path, ITERATION_COLUMNS, rows)


def summary_row(report: RunReport) -> list:
    """The summary values for one run, in SUMMARY_COLUMNS order."""
    return [
        report.spec.name,
        report.spec.space.p,
        report.spec.space.r,
        report.effective_delta,
        report.spec.seed,
        report.n_star,
        report.n_p,
        report.err_l2,
        report.err_lp,
        report.reason,
        f"{report.wall_ms:.3f}",
    ]


def write_summary(path: str, report: RunReport) -> None:
    _write_rows(path, SUMMARY_COLUMNS, [summary_row(report)])


def write_summary_rows(path: str, reports: Iterable[RunReport]) -> None:
    """Merged summary, one row per run (sweep output)."""
    _write_rows(path, SUMMARY_COLUMNS, (summary_row(r) for r in reports))


def write_solution(path: str, report: RunReport) -> None:
    """Node coordinates with the true and reconstructed coefficient."""
    grid = report.truth.grid
    coords = grid.coords()
    truth = report.truth.values
    rec = report.result.final.values
    if grid.dim == 1:
        header = SOLUTION_COLUMNS_1D
        rows = zip(coords[0], truth, rec)
    else:
        header = SOLUTION_COLUMNS_2D
        rows = zip(coords[0], coords[1], truth, rec)
    _write_rows(path, header, ([float(v) for v in row] for row in rows))


def write_run(outdir: str, report: RunReport) -> dict[str, str]:
    """Write iterations/summary/solution CSVs into ``outdir``; returns paths."""
    os.makedirs(outdir, exist_ok=True)
    paths = {
        "iterations": os.path.join(outdir, "iterations.csv"),
        "summary": os.path.join(outdir, "summary.csv"),
        "solution": os.path.join(outdir, "solution.csv"),
    }
    write_iterations(paths["iterations"], report.result.log)
    write_summary(paths["summary"], report)
    write_solution(paths["solution"], report)
    return paths
