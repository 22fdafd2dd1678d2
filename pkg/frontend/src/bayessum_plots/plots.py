"""Render benchmark and training figures from bayessum CSV files.

Three figure kinds:

  convergence  per-method mean abs error vs n with 25-75% quantile bands,
               log-log axes by default
  calibration  empirical vs nominal credible-interval coverage with the
               diagonal for reference
  trajectory   (theta1, theta2) path over training iterations

Rendering is a pure function of the CSV contents; no clock or network
state enters the figure.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from statistics import NormalDist

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

BENCH_HEADER = ["method", "problem", "n", "seed", "abs_error", "posterior_sd", "wall_time_ns"]
TRACE_PREFIX = ["iteration", "lr", "loss"]
KINDS = ("convergence", "calibration", "trajectory")
DEFAULT_LEVELS = (0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99)


class SchemaError(ValueError):
    """Input CSV does not match the expected schema."""


@dataclass(frozen=True)
class PlotJob:
    input_csv: str
    kind: str  # "convergence" | "calibration" | "trajectory"
    output: str
    log_log: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")


def read_benchmark_csv(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != BENCH_HEADER:
            raise SchemaError(
                f"{path}: expected header {','.join(BENCH_HEADER)}, got {reader.fieldnames}"
            )
        rows = []
        for row in reader:
            rows.append(
                {
                    "method": row["method"],
                    "n": int(row["n"]),
                    "seed": int(row["seed"]),
                    "abs_error": float(row["abs_error"]),
                    "posterior_sd": float(row["posterior_sd"]) if row["posterior_sd"] else None,
                }
            )
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def read_trace_csv(path: str) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[: len(TRACE_PREFIX)] != TRACE_PREFIX:
            raise SchemaError(
                f"{path}: expected a training trace starting with "
                f"{','.join(TRACE_PREFIX)}, got {header}"
            )
        params = header[len(TRACE_PREFIX) :]
        if len(params) < 2:
            raise SchemaError(f"{path}: trajectory needs >= 2 parameter columns, got {params}")
        body = list(reader)
    if not body:
        raise SchemaError(f"{path}: no data rows")
    cols = {name: [] for name in header}
    for row in body:
        for name, val in zip(header, row):
            cols[name].append(val)
    out = {"params": params}
    for name in header:
        try:
            out[name] = np.array([float(v) for v in cols[name]])
        except ValueError:
            # vector-valued columns (';'-joined) stay as strings
            out[name] = np.array(cols[name], dtype=object)
    return out


def convergence_series(rows: list[dict]) -> dict[str, list[tuple[int, float, float, float]]]:
    """Per method: sorted (n, mean, q25, q75) of finite abs errors."""
    grouped: dict[str, dict[int, list[float]]] = {}
    for row in rows:
        if math.isfinite(row["abs_error"]):
            grouped.setdefault(row["method"], {}).setdefault(row["n"], []).append(
                row["abs_error"]
            )
    out = {}
    for method, by_n in grouped.items():
        out[method] = [
            (
                n,
                float(np.mean(errs)),
                float(np.percentile(errs, 25)),
                float(np.percentile(errs, 75)),
            )
            for n, errs in sorted(by_n.items())
        ]
    return out


def calibration_points(
    rows: list[dict], levels=DEFAULT_LEVELS
) -> dict[str, list[tuple[float, float]]]:
    """Per method: (nominal level, empirical coverage) over rows with sd."""
    nd = NormalDist()
    out = {}
    for method in sorted({r["method"] for r in rows}):
        sel = [r for r in rows if r["method"] == method and r["posterior_sd"] is not None]
        if not sel:
            continue
        pts = []
        for level in levels:
            z = nd.inv_cdf(0.5 * (1.0 + level))
            hits = [r["abs_error"] <= z * r["posterior_sd"] for r in sel]
            pts.append((level, float(np.mean(hits))))
        out[method] = pts
    return out


def _render_convergence(job: PlotJob, ax) -> None:
    series = convergence_series(read_benchmark_csv(job.input_csv))
    for method, pts in sorted(series.items()):
        ns = [p[0] for p in pts]
        means = [p[1] for p in pts]
        lo = [p[2] for p in pts]
        hi = [p[3] for p in pts]
        ax.plot(ns, means, marker="o", label=method)
        if len(ns) > 1:
            ax.fill_between(ns, lo, hi, alpha=0.25)
    if job.log_log:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("mean abs error")
    ax.legend()


def _render_calibration(job: PlotJob, ax) -> None:
    curves = calibration_points(read_benchmark_csv(job.input_csv))
    if not curves:
        raise SchemaError(f"{job.input_csv}: no rows with a posterior sd")
    ax.plot([0.0, 1.0], [0.0, 1.0], "k--", label="ideal")
    for method, pts in sorted(curves.items()):
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=method)
    ax.set_xlabel("nominal level")
    ax.set_ylabel("empirical coverage")
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.05)
    ax.legend()


def _render_trajectory(job: PlotJob, ax) -> None:
    trace = read_trace_csv(job.input_csv)
    p1, p2 = trace["params"][:2]
    x, y = trace[p1], trace[p2]
    if x.dtype == object or y.dtype == object:
        raise SchemaError(
            f"{job.input_csv}: trajectory needs scalar parameter columns, got {p1}, {p2}"
        )
    ax.plot(x, y, marker=".", linewidth=1.0)
    ax.plot([x[0]], [y[0]], "go", label="start")
    ax.plot([x[-1]], [y[-1]], "r*", markersize=12, label="end")
    ax.set_xlabel(p1)
    ax.set_ylabel(p2)
    ax.legend()


def render(job: PlotJob) -> str:
    """Write the figure for the job and return the output path."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    try:
        if job.kind == "convergence":
            _render_convergence(job, ax)
        elif job.kind == "calibration":
            _render_calibration(job, ax)
        else:
            _render_trajectory(job, ax)
        fig.tight_layout()
        fig.savefig(job.output)
    finally:
        plt.close(fig)
    return job.output
