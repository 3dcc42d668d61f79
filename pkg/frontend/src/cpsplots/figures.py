"""Figure construction: pulse, PSD, PAPR CCDF, and BER layouts.

Each render call writes both a PNG and an SVG next to the requested output
path (the extension of the given path is replaced).  Rendering is read-only
over its inputs and deterministic for identical CSVs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np

from .reader import MetricTable, read_metric_csv, read_pulse_csv

FIGURE_KINDS = ("pulse", "psd", "papr-ccdf", "ber")


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: input CSVs, figure kind, and output image path."""

    kind: str
    inputs: tuple[str, ...]
    output: str
    title: str = ""
    labels: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}, expected {FIGURE_KINDS}")
        if not self.inputs:
            raise ValueError("at least one input CSV required")


def _save(fig, output: str) -> list[Path]:
    base = Path(output)
    base.parent.mkdir(parents=True, exist_ok=True)
    written = []
    for ext in (".png", ".svg"):
        target = base.with_suffix(ext)
        fig.savefig(target, bbox_inches="tight")
        written.append(target)
    plt.close(fig)
    return written


def _plot_metric_curves(ax, table: MetricTable, logy: bool) -> None:
    for waveform in table.waveforms:
        y = table.y[waveform]
        if logy:
            y = np.where(y > 0, y, np.nan)  # zero counts drop off a log axis
        ax.plot(table.x[waveform], y, marker=".", label=waveform)
    if logy:
        ax.set_yscale("log")
    if table.waveforms:
        ax.legend()
    ax.grid(True, which="both", alpha=0.3)


def _render_pulse(spec: FigureSpec):
    fig, (ax_t, ax_f) = plt.subplots(1, 2, figsize=(9, 3.5))
    for i, path in enumerate(spec.inputs):
        g = read_pulse_csv(path)
        label = spec.labels[i] if i < len(spec.labels) else Path(path).stem
        ax_t.plot(np.abs(g), label=label)
        if g.size:
            spec_mag = np.abs(np.fft.fft(g)) / np.sqrt(g.size)
            ax_f.plot(spec_mag, label=label)
    ax_t.set_xlabel("sample")
    ax_t.set_ylabel("|g|")
    ax_t.set_title("time domain")
    ax_f.set_xlabel("frequency bin")
    ax_f.set_ylabel("|G|")
    ax_f.set_title("frequency domain")
    for ax in (ax_t, ax_f):
        ax.grid(True, alpha=0.3)
        ax.legend()
    return fig


def _render_metric(spec: FigureSpec):
    fig, ax = plt.subplots(figsize=(6, 4))
    for path in spec.inputs:
        table = read_metric_csv(path)
        if spec.kind == "psd":
            _plot_metric_curves(ax, table, logy=False)
            ax.set_xlabel("normalized frequency (cycles/sample)")
            ax.set_ylabel("PSD (dB)")
        elif spec.kind == "papr-ccdf":
            _plot_metric_curves(ax, table, logy=True)
            ax.set_xlabel("PAPR threshold (dB)")
            ax.set_ylabel("CCDF")
        else:  # ber
            _plot_metric_curves(ax, table, logy=True)
            ax.set_xlabel("SNR (dB)")
            ax.set_ylabel("BER")
    return fig


def render(spec: FigureSpec) -> list[Path]:
    """Draw the figure and write PNG + SVG; returns the written paths."""
    if spec.kind == "pulse":
        fig = _render_pulse(spec)
    else:
        fig = _render_metric(spec)
    if spec.title:
        fig.suptitle(spec.title)
    return _save(fig, spec.output)
