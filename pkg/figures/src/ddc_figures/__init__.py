"""Batch figure rendering for sweep CSV files."""
from .figures import EmptyInput, FigureSpec, MissingColumn, build_figure, render

__all__ = [
    "FigureSpec",
    "MissingColumn",
    "EmptyInput",
    "build_figure",
    "render",
]

__version__ = "0.1.0"
