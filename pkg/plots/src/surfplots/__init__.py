"""surfplots: figure rendering for simulator CSV/JSON outputs."""

__version__ = "0.1.0"

from .render import PlotSpec, SchemaError, load_series, load_subgraph, render, render_figure

__all__ = [
    "PlotSpec",
    "SchemaError",
    "load_series",
    "load_subgraph",
    "render",
    "render_figure",
]
