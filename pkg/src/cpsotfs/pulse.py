"""Prototype pulse construction and constant-magnitude classification.

Two pulse families ship by default:

* ``rect``: one slot of M constant samples, scaled to unit energy.  Its
  characteristic diagonal is the identity, so the modulation matrix is
  trivially unitary.
* ``dirichlet``: normalized MN-point IDFT of a frequency-domain brick wall
  spanning the first N bins.  N bins of the MN-point grid is exactly one
  subcarrier spacing, so the pulse is confined to a single subcarrier band.

Note the brick-wall width: a width-M brick wall (as sometimes printed) has
a constant-magnitude characteristic diagonal only in the degenerate M = N
case; the width-N wall is constant-magnitude for every M, N, which is what
makes the pulse-shaped system unitary.  The oracle tests pin this down.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .transforms import characteristic_diagonal

ENERGY_TOL = 1e-12
CMCM_TOL = 1e-9


@dataclass(frozen=True)
class PrototypePulse:
    """Length-MN prototype in the time domain, unit energy."""

    samples: np.ndarray
    M: int
    N: int
    label: str = "custom"

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=complex)
        if samples.shape != (self.M * self.N,):
            raise ValueError(
                f"pulse must have {self.M * self.N} samples, got {samples.shape}"
            )
        energy = float(np.sum(np.abs(samples) ** 2))
        if abs(energy - 1.0) > 1e-9:
            raise ValueError(f"pulse energy must be 1, got {energy!r}")
        object.__setattr__(self, "samples", samples)

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2))

    def spectrum(self) -> np.ndarray:
        """Normalized MN-point DFT of the pulse (unit energy preserved)."""
        return np.fft.fft(self.samples) / np.sqrt(self.samples.size)


def rect_pulse(M: int, N: int) -> PrototypePulse:
    """One-slot rectangular prototype: (1/sqrt(M)) over the first M samples."""
    if M < 1 or N < 1:
        raise ValueError(f"M and N must be >= 1, got M={M}, N={N}")
    g = np.zeros(M * N, dtype=complex)
    g[:M] = 1.0 / np.sqrt(M)
    return PrototypePulse(g, M, N, label="rect")


def dirichlet_pulse(M: int, N: int) -> PrototypePulse:
    """Circulant Dirichlet prototype: IDFT of a width-N brick wall.

    Frequency magnitude is exactly 1/sqrt(N) on bins [0, N-1] and zero
    elsewhere; in time it is a periodic-sinc main lobe at sample 0.
    Constant-magnitude (hence unitary modulation) for every M, N.
    """
    if M < 1 or N < 1:
        raise ValueError(f"M and N must be >= 1, got M={M}, N={N}")
    wall = np.zeros(M * N, dtype=complex)
    wall[:N] = 1.0 / np.sqrt(N)
    g = np.fft.ifft(wall) * np.sqrt(M * N)
    return PrototypePulse(g, M, N, label="dirichlet")


def is_cmcm(pulse: PrototypePulse, tol: float = CMCM_TOL) -> bool:
    """True iff every characteristic-diagonal entry has magnitude 1.

    Unitarity of the modulation matrix is equivalent to this condition
    since the remaining factors are a permutation and block IDFTs.
    """
    lam = characteristic_diagonal(pulse.samples, pulse.M, pulse.N)
    return bool(np.abs(np.abs(lam) - 1.0).max() <= tol)


def pulse_to_csv(pulse: PrototypePulse, path: str | Path) -> None:
    """Dump pulse samples as (index, real, imag) rows with a header."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "real", "imag"])
        for i, v in enumerate(pulse.samples):
            writer.writerow([i, f"{v.real:.17g}", f"{v.imag:.17g}"])
