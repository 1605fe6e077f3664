"""Figure rendering for simulation harness CSV outputs."""

__version__ = "0.1.0"

from .render import (  # noqa: F401
    DEFAULT_LABELS,
    EmptySeriesError,
    KINDS,
    PlotSpec,
    SchemaError,
    load_series,
    render,
    sidecar_path,
)
