"""Parsers for the two CSV contracts emitted by the simulator.

Metric CSVs carry one record per row under the fixed header
``experiment,waveform,x,y,trials,seed``; pulse dumps use
``index,real,imag``.  Anything that does not match the contract raises
:class:`CsvFormatError` with the offending file and line.  An empty body
under a valid header is legal and yields empty arrays.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

METRIC_HEADER = ["experiment", "waveform", "x", "y", "trials", "seed"]
PULSE_HEADER = ["index", "real", "imag"]


class CsvFormatError(ValueError):
    """Input CSV does not match the documented contract."""


@dataclass(frozen=True)
class MetricTable:
    """Metric rows grouped by waveform, ordered as read."""

    path: str
    experiments: tuple[str, ...]
    waveforms: tuple[str, ...]  # unique, in first-seen order
    x: dict[str, np.ndarray]  # waveform -> x values
    y: dict[str, np.ndarray]  # waveform -> y values

    @property
    def is_empty(self) -> bool:
        return not self.waveforms


def _read_rows(path: str | Path, header: list[str]) -> list[list[str]]:
    path = Path(path)
    if not path.exists():
        raise CsvFormatError(f"{path}: file not found")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CsvFormatError(f"{path}: empty file (header row required)")
    if rows[0] != header:
        raise CsvFormatError(
            f"{path}: bad header {rows[0]!r}, expected {header!r}"
        )
    return rows[1:]


def read_metric_csv(path: str | Path) -> MetricTable:
    """Parse a metric CSV into per-waveform x/y arrays."""
    body = _read_rows(path, METRIC_HEADER)
    experiments: list[str] = []
    order: list[str] = []
    xs: dict[str, list[float]] = {}
    ys: dict[str, list[float]] = {}
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(METRIC_HEADER):
            raise CsvFormatError(f"{path}:{lineno}: expected 6 columns, got {len(row)}")
        experiment, waveform, x, y, trials, _seed = row
        try:
            xv, yv, tv = float(x), float(y), int(trials)
        except ValueError as exc:
            raise CsvFormatError(f"{path}:{lineno}: non-numeric field ({exc})") from exc
        if tv <= 0:
            raise CsvFormatError(f"{path}:{lineno}: trial count must be positive")
        if experiment not in experiments:
            experiments.append(experiment)
        if waveform not in order:
            order.append(waveform)
            xs[waveform] = []
            ys[waveform] = []
        xs[waveform].append(xv)
        ys[waveform].append(yv)
    return MetricTable(
        str(path),
        tuple(experiments),
        tuple(order),
        {w: np.asarray(v) for w, v in xs.items()},
        {w: np.asarray(v) for w, v in ys.items()},
    )


def read_pulse_csv(path: str | Path) -> np.ndarray:
    """Parse a pulse dump into a complex sample vector (index order checked)."""
    body = _read_rows(path, PULSE_HEADER)
    samples = np.empty(len(body), dtype=complex)
    for lineno, row in enumerate(body, start=2):
        if len(row) != 3:
            raise CsvFormatError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
        try:
            idx = int(row[0])
            samples[lineno - 2] = complex(float(row[1]), float(row[2]))
        except ValueError as exc:
            raise CsvFormatError(f"{path}:{lineno}: non-numeric field ({exc})") from exc
        if idx != lineno - 2:
            raise CsvFormatError(f"{path}:{lineno}: sample index {idx} out of order")
    return samples
