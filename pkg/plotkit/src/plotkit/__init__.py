"""Figure rendering for the simulator's CSV/JSON outputs."""

from .data import (
    ConvergenceData,
    HistogramData,
    InputError,
    RegionData,
    bin_deviations,
    read_convergence,
    read_deviations,
    read_region,
)
from .render import FigureSpec, RenderResult, render

__version__ = "0.1.0"
