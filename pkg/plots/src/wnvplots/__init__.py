"""Figure regeneration for wnvsim experiment outputs."""

from .figures import fig2, fig3, regen_figures
from .schema import PlotInputError, SchemaError, read_sweep_summary, read_timeseries

__version__ = "0.1.0"

__all__ = [
    "PlotInputError", "SchemaError", "fig2", "fig3", "read_sweep_summary",
    "read_timeseries", "regen_figures",
]
