"""Offline figure generation from cpsotfs metric CSVs.

This package talks to the simulator only through its documented CSV file
contracts; it never imports simulator internals.
"""

from .figures import FIGURE_KINDS, FigureSpec, render
from .reader import CsvFormatError, read_metric_csv, read_pulse_csv

__all__ = [
    "CsvFormatError",
    "FIGURE_KINDS",
    "FigureSpec",
    "read_metric_csv",
    "read_pulse_csv",
    "render",
]
