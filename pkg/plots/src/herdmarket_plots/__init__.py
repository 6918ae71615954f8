"""Rendering of herdmarket result figures from output bundle files.

The simulator writes self-describing bundle directories (CSV tables, a
summary.json, optional graph snapshots). This package turns them into the
standard set of figures: class wealth bars, Gini and volume time series,
community wealth bars, trigger-step sweeps, and a community graph
snapshot. It never recomputes simulation quantities; every number drawn
comes straight out of a CSV column.
"""

from .bundles import Bundle, MissingInputError, PlotsError, SchemaError, discover
from .figures import FIGURES, build_figure, render

__version__ = "0.1.0"

__all__ = [
    "Bundle",
    "FIGURES",
    "MissingInputError",
    "PlotsError",
    "SchemaError",
    "build_figure",
    "discover",
    "render",
]
