"""Figure generation for swapdyn run CSVs."""

from .render import KINDS, PlotSpec, SchemaError, build_figure, load_table, render

__version__ = "0.1.0"
