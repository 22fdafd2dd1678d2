"""Figure rendering for bayessum CSV output."""

from .plots import (
    PlotJob,
    SchemaError,
    calibration_points,
    convergence_series,
    read_benchmark_csv,
    read_trace_csv,
    render,
)

__all__ = [
    "PlotJob",
    "SchemaError",
    "calibration_points",
    "convergence_series",
    "read_benchmark_csv",
    "read_trace_csv",
    "render",
]
