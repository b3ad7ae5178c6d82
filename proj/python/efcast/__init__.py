"""Block-wise recursive long-horizon forecasting."""

from ._core import (
    EfcastError,
    Forecaster,
    load_checkpoint,
    phase_of,
    run_cli,
    window_count,
)

__all__ = [
    "EfcastError",
    "Forecaster",
    "load_checkpoint",
    "phase_of",
    "run_cli",
    "window_count",
]
