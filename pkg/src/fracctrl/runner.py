"""Batch execution of configured experiments and result serialization.

A run produces one :class:`ResultRow` per regularization level.  Rows are
written as CSV (full-precision scientific notation) plus an aligned
human-readable table.  Reruns of the same configuration produce identical
CSV bytes; measured wall times are therefore written only on request and
zeroed by default.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

import numpy as np

from .config import (
    ExperimentConfig,
    build_control,
    build_nonlocal,
    build_operator,
    build_rhs,
    build_state,
)
from .errors import FracctrlError
from .gramian import sweep_regularization

CSV_HEADER = ("a", "terminal_error", "control_energy", "picard_iters", "converged", "wall_time")


@dataclass(frozen=True)
class ResultRow:
    """Outcome of one regularization level."""

    a: float
    terminal_error: float
    control_energy: float
    picard_iters: int
    converged: bool
    wall_time: float = 0.0


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Execute every sweep row of a validated configuration.

    Row failures (non-convergence, assembly errors) are recorded in the
    row's ``converged`` flag; the run continues.  All numeric columns are
    deterministic for a fixed configuration; ``wall_time`` is measured.
    """
    op = build_operator(config)
    B = build_control(config)
    x0 = build_state(config.problem.x0, config.system.N)
    xb = build_state(config.problem.xb, config.system.N)
    rhs = None if config.rhs.preset == "zero" else build_rhs(config)
    nl = build_nonlocal(config)
    num = config.numerics

    rows: list[ResultRow] = []
    for a in config.sweep.a_values:
        start = time.perf_counter()
        try:
            sweep_rows = sweep_regularization(
                op,
                config.system.alpha,
                B,
                config.problem.b,
                x0,
                xb,
                [a],
                rhs=rhs,
                nonlocal_condition=nl,
                grid_K=num.grid_K,
                quad_nodes=num.quad_nodes,
                tol=num.tol,
                max_iter=num.max_iter,
            )
            row = sweep_rows[0]
            err, energy = row.error_norm, row.control_energy
            iters, converged = row.picard_iters, row.converged
        except FracctrlError:
            err, energy, iters, converged = float("nan"), float("nan"), 0, False
        elapsed = time.perf_counter() - start
        rows.append(
            ResultRow(
                a=float(a),
                terminal_error=err,
                control_energy=energy,
                picard_iters=iters,
                converged=converged,
                wall_time=elapsed,
            )
        )
    return rows


def _fmt(x: float) -> str:
    return format(float(x), ".17e")


def render_csv(rows, include_timing: bool = False) -> str:
    """CSV text for a list of rows.

    ``wall_time`` is written as 0 unless ``include_timing`` is set, keeping
    reruns byte-identical by default.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        wall = r.wall_time if include_timing else 0.0
        writer.writerow(
            [
                _fmt(r.a),
                _fmt(r.terminal_error),
                _fmt(r.control_energy),
                str(int(r.picard_iters)),
                "true" if r.converged else "false",
                _fmt(wall),
            ]
        )
    return buf.getvalue()


def write_results(rows, path, include_timing: bool = False) -> None:
    """Write rows as CSV; I/O problems are re-raised with path context."""
    text = render_csv(rows, include_timing)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def read_results(path) -> list[ResultRow]:
    """Parse a results CSV back into rows (exact round trip)."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader))
            if header != CSV_HEADER:
                raise ValueError(f"unexpected header {header!r} in {path}")
            rows = []
            for rec in reader:
                rows.append(
                    ResultRow(
                        a=float(rec[0]),
                        terminal_error=float(rec[1]),
                        control_energy=float(rec[2]),
                        picard_iters=int(rec[3]),
                        converged=rec[4] == "true",
                        wall_time=float(rec[5]),
                    )
                )
            return rows
    except OSError as exc:
        raise OSError(f"cannot read results from {path}: {exc}") from exc


def render_table(rows, include_timing: bool = True) -> str:
    """Aligned human-readable table of the sweep."""
    header = ["a", "terminal_error", "control_energy", "iters", "converged", "wall_time[s]"]
    body = []
    for r in rows:
        body.append(
            [
                f"{r.a:.3e}",
                f"{r.terminal_error:.6e}",
                f"{r.control_energy:.6e}",
                str(int(r.picard_iters)),
                "yes" if r.converged else "NO",
                f"{r.wall_time:.3f}" if include_timing else "-",
            ]
        )
    widths = [max(len(header[i]), *(len(row[i]) for row in body)) if body else len(header[i])
              for i in range(len(header))]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in body:
        lines.append("  ".join(cell.rjust(w) for cell, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def write_table(rows, path) -> None:
    """Write the aligned table; I/O problems carry path context."""
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(render_table(rows))
    except OSError as exc:
        raise OSError(f"cannot write table to {path}: {exc}") from exc
