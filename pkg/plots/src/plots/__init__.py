"""Render error-versus-sweep line panels from simulation summary CSVs."""

__version__ = "0.1.0"

from .core import (
    DEFAULT_METRICS,
    PlotSpec,
    SchemaError,
    dump_series,
    load_series,
    render,
)

__all__ = [
    "DEFAULT_METRICS",
    "PlotSpec",
    "SchemaError",
    "dump_series",
    "load_series",
    "render",
]
