"""Delay-Doppler channel synthesis and AWGN.

The channel is a sparse set of paths, each with a complex gain, an integer
delay tap and an integer Doppler bin.  The induced MN x MN operator is

    H = sum_p h_p Pi^{l_p} Delta^{k_p}

with Pi the one-step circular delay and Delta = diag{exp(2j*pi*r/MN)}.
Delta is applied before Pi, so elementwise

    (H s)[r] = sum_p h_p exp(2j*pi*k_p*((r - l_p) mod MN)/MN) s[(r - l_p) mod MN].

Stochastic channels follow the Extended Vehicular A power-delay profile
with Jakes-distributed Doppler (nu = nu_max cos(theta), theta uniform).
The EVA tap table is not printed in the source material; the values below
are the standardized profile and can be overridden.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .params import OtfsParams

# Extended Vehicular A power-delay profile (3GPP TS 36.101 Annex B.2).
EVA_DELAYS_NS = (0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0)
EVA_POWERS_DB = (0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9)


class ConfigurationError(ValueError):
    """The frame geometry cannot carry the requested channel."""


def round_half_away(x: np.ndarray | float) -> np.ndarray:
    """Round half away from zero (np.round rounds halves to even)."""
    x = np.asarray(x, dtype=float)
    return (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype(np.int64)


@dataclass(frozen=True)
class PathSet:
    """Sparse delay-Doppler paths: complex gains, delay taps, Doppler bins."""

    gains: np.ndarray
    delays: np.ndarray
    dopplers: np.ndarray

    def __post_init__(self) -> None:
        gains = np.asarray(self.gains, dtype=complex)
        delays = np.asarray(self.delays, dtype=np.int64)
        dopplers = np.asarray(self.dopplers, dtype=np.int64)
        if not gains.shape == delays.shape == dopplers.shape:
            raise ValueError("gains, delays and dopplers must have equal length")
        if (delays < 0).any():
            raise ValueError("delay taps must be non-negative")
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "dopplers", dopplers)

    @property
    def n_paths(self) -> int:
        return self.gains.size

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["gain_real", "gain_imag", "delay_tap", "doppler_bin"])
            for h, l, k in zip(self.gains, self.delays, self.dopplers):
                writer.writerow([f"{h.real:.17g}", f"{h.imag:.17g}", int(l), int(k)])


def build_channel_matrix(paths: PathSet, MN: int) -> np.ndarray:
    """Dense H = sum_p h_p Pi^{l_p} Delta^{k_p}."""
    if (paths.delays >= MN).any():
        raise ValueError(f"delay taps must be < MN={MN}")
    H = np.zeros((MN, MN), dtype=complex)
    r = np.arange(MN)
    for h, l, k in zip(paths.gains, paths.delays, paths.dopplers):
        src = (r - l) % MN
        H[r, src] += h * np.exp(2j * np.pi * k * src / MN)
    return H


def apply_channel(paths: PathSet, s: np.ndarray) -> np.ndarray:
    """Matrix-free H @ s for the circular MN-sample frame."""
    s = np.asarray(s, dtype=complex)
    MN = s.size
    if (paths.delays >= MN).any():
        raise ValueError(f"delay taps must be < MN={MN}")
    r = np.arange(MN)
    out = np.zeros(MN, dtype=complex)
    for h, l, k in zip(paths.gains, paths.delays, paths.dopplers):
        src = (r - l) % MN
        out += h * np.exp(2j * np.pi * k * src / MN) * s[src]
    return out


def identity_paths() -> PathSet:
    """Single distortion-free path (H = I)."""
    return PathSet(np.array([1.0 + 0j]), np.array([0]), np.array([0]))


def sample_eva(
    params: OtfsParams,
    rng: np.random.Generator | int,
    delays_ns: tuple[float, ...] = EVA_DELAYS_NS,
    powers_db: tuple[float, ...] = EVA_POWERS_DB,
) -> PathSet:
    """Draw one EVA channel realization with Jakes Doppler.

    Per tap: a complex Gaussian gain with variance from the normalized
    power-delay profile, delay quantized to l_p = round(tau_p * M * delta_f),
    and Doppler nu_p = nu_max * cos(theta_p) with theta_p uniform on
    [-pi, pi], quantized to k_p = round(nu_p * N * T).
    """
    rng = np.random.default_rng(rng) if isinstance(rng, (int, np.integer)) else rng
    delays = np.asarray(delays_ns, dtype=float) * 1e-9
    powers = 10.0 ** (np.asarray(powers_db, dtype=float) / 10.0)
    powers = powers / powers.sum()

    tau_max = delays.max()
    alpha = int(np.ceil(tau_max * params.sample_rate))
    if alpha > params.alpha_prime:
        raise ConfigurationError(
            f"CP too short: channel delay length {alpha} samples exceeds "
            f"alpha_prime={params.alpha_prime}"
        )

    n = delays.size
    gains = np.sqrt(powers / 2.0) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    taps = round_half_away(delays * params.sample_rate)
    theta = rng.uniform(-np.pi, np.pi, size=n)
    nu = params.max_doppler * np.cos(theta)
    bins = round_half_away(nu * params.N * params.T)
    return PathSet(gains, taps, bins)


def awgn(
    s: np.ndarray, noise_var: float, rng: np.random.Generator | int
) -> np.ndarray:
    """Add circular complex Gaussian noise with per-element variance noise_var."""
    if noise_var < 0:
        raise ValueError(f"noise_var must be >= 0, got {noise_var}")
    s = np.asarray(s, dtype=complex)
    if noise_var == 0:
        return s.copy()
    rng = np.random.default_rng(rng) if isinstance(rng, (int, np.integer)) else rng
    n = np.sqrt(noise_var / 2.0) * (
        rng.standard_normal(s.size) + 1j * rng.standard_normal(s.size)
    )
    return s + n
