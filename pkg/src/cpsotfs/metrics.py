"""Experiment harnesses: out-of-band PSD, PAPR CCDF, BER, complexity.

All experiments are deterministic under a fixed master seed: every random
stream is derived from (master_seed, trial_index, ...) so results do not
depend on execution order or parallelism.

Waveform tags:

* ``RPS-OTFS``  - rectangular circular pulse (conventional OTFS)
* ``CDPS-OTFS`` - circulant Dirichlet pulse
* ``OFDM``      - block OFDM baseline: M subcarriers, N time slots, data
  mapped straight onto the time-frequency grid, per-slot one-tap MMSE
  equalization after an M-point DFT.

CSV output is one record per row with the fixed column order
``experiment,waveform,x,y,trials,seed``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import modem
from .channel import PathSet, apply_channel, awgn, build_channel_matrix, identity_paths, sample_eva
from .params import OtfsParams
from .pulse import dirichlet_pulse, rect_pulse
from .transforms import ModulationOperator, apply_a_g, characteristic_diagonal, isfft

WAVEFORMS = ("RPS-OTFS", "CDPS-OTFS", "OFDM")


def qfunc(x: float) -> float:
    """Gaussian tail probability Q(x)."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def waveform_diagonal(tag: str, M: int, N: int) -> np.ndarray:
    """Characteristic diagonal of the pulse behind a waveform tag.

    The OFDM baseline shares the rectangular pulse shaping stage (its
    per-slot IDFT is exactly A_g with the rectangular prototype).
    """
    if tag in ("RPS-OTFS", "OFDM"):
        g = rect_pulse(M, N)
    elif tag == "CDPS-OTFS":
        g = dirichlet_pulse(M, N)
    else:
        raise ValueError(f"unknown waveform {tag!r}, expected one of {WAVEFORMS}")
    return characteristic_diagonal(g.samples, M, N)


# ---------------------------------------------------------------------------
# CSV records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricRecord:
    """One row of experiment output."""

    experiment: str
    waveform: str
    x: float
    y: float
    trials: int
    seed: int

    def __post_init__(self) -> None:
        if self.trials <= 0:
            raise ValueError(f"trial count must be positive, got {self.trials}")


def write_records(path: str | Path, records: list[MetricRecord]) -> None:
    """Write records as UTF-8 CSV with the mandatory header row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["experiment", "waveform", "x", "y", "trials", "seed"])
        for rec in records:
            writer.writerow(
                [
                    rec.experiment,
                    rec.waveform,
                    f"{rec.x:.12g}",
                    f"{rec.y:.12g}",
                    rec.trials,
                    rec.seed,
                ]
            )


# ---------------------------------------------------------------------------
# PSD / out-of-band
# ---------------------------------------------------------------------------


@dataclass
class PsdResult:
    waveform: str
    freqs: np.ndarray  # normalized frequency, cycles/sample
    psd_db: np.ndarray  # normalized: in-band mean = 0 dB
    psd_raw: np.ndarray  # unnormalized averaged periodogram
    oob_mean_db: float  # mean normalized PSD over guard bins
    mean_frame_energy: float
    frames: int
    seed: int

    def records(self) -> list[MetricRecord]:
        return [
            MetricRecord("psd", self.waveform, float(f), float(p), self.frames, self.seed)
            for f, p in zip(self.freqs, self.psd_db)
        ]


def _bin_subcarriers(nfft: int, M: int) -> np.ndarray:
    """Owning subcarrier of each FFT bin.

    Subcarrier m occupies the band [m/M, (m+1)/M) in normalized frequency
    (the pulse shaping is one-sided, anchored at the subcarrier tone).
    """
    return (np.arange(nfft) * M) // nfft % M


def measure_psd(
    M: int,
    N: int,
    alpha_prime: int,
    waveform: str,
    guard_set: frozenset[int] | set[int],
    qam_order: int = 4,
    frames: int = 500,
    nfft: int | None = None,
    seed: int = 0,
    tone_bin: int | None = None,
) -> PsdResult:
    """Averaged periodogram over windowed CP-extended random-data frames.

    Data symbols are nulled on guard subcarriers in the time-frequency
    domain; the delay-Doppler precoder is unitary, so this leaves the
    transmit second-order statistics identical to direct time-frequency
    loading.  ``tone_bin`` replaces the data with a pure subcarrier tone
    (calibration mode).
    """
    MN = M * N
    ext_len = MN + 2 * alpha_prime
    if nfft is None:
        nfft = 1 << int(np.ceil(np.log2(4 * ext_len)))
    if nfft < ext_len:
        raise ValueError(f"nfft={nfft} shorter than extended frame {ext_len}")
    if frames < 1:
        raise ValueError("frames must be >= 1")
    guard = sorted(guard_set)
    lam = waveform_diagonal(waveform, M, N)
    active = np.array([m for m in range(M) if m not in guard_set], dtype=np.int64)

    acc = np.zeros(nfft)
    energy = 0.0
    for trial in range(frames):
        rng = np.random.default_rng([seed, trial])
        if tone_bin is not None:
            s = np.exp(2j * np.pi * tone_bin * np.arange(MN) / M) / np.sqrt(MN)
        else:
            if waveform == "OFDM":
                x = np.zeros(MN, dtype=complex).reshape(N, M)
                bits = rng.integers(0, 2, active.size * N * modem.bits_per_symbol(qam_order))
                x[:, active] = modem.qam_map(bits, qam_order).reshape(N, active.size)
                x = x.reshape(MN)
            else:
                bits = rng.integers(0, 2, MN * modem.bits_per_symbol(qam_order))
                d = modem.qam_map(bits, qam_order)
                x = isfft(d, M, N)
                xmat = x.reshape(N, M)
                xmat[:, guard] = 0.0
                x = xmat.reshape(MN)
            s = apply_a_g(x, lam, M, N)
        ext = modem.add_cp_window(s, alpha_prime)
        acc += np.abs(np.fft.fft(ext, nfft)) ** 2 / nfft
        energy += float(np.sum(np.abs(ext) ** 2))

    psd_raw = acc / frames
    owners = _bin_subcarriers(nfft, M)
    inband = np.isin(owners, active)
    floor = np.finfo(float).tiny
    ref = max(psd_raw[inband].mean(), floor)
    psd_db = 10.0 * np.log10(np.maximum(psd_raw, floor) / ref)
    oob = float(psd_db[~inband].mean()) if (~inband).any() else float("nan")
    freqs = np.arange(nfft) / nfft
    return PsdResult(
        waveform, freqs, psd_db, psd_raw, oob, energy / frames, frames, seed
    )


# ---------------------------------------------------------------------------
# PAPR
# ---------------------------------------------------------------------------


@dataclass
class PaprResult:
    waveform: str
    papr_db: np.ndarray  # one value per trial
    thresholds: np.ndarray
    ccdf: np.ndarray
    trials: int
    seed: int

    def ccdf_inverse(self, prob: float) -> float:
        """Smallest threshold (dB) exceeded with probability <= prob."""
        srt = np.sort(self.papr_db)
        idx = min(int(np.ceil((1.0 - prob) * self.trials)), self.trials - 1)
        return float(srt[idx])

    def records(self) -> list[MetricRecord]:
        return [
            MetricRecord("papr", self.waveform, float(t), float(c), self.trials, self.seed)
            for t, c in zip(self.thresholds, self.ccdf)
        ]


def measure_papr(
    M: int,
    N: int,
    waveform: str,
    qam_order: int = 4,
    trials: int = 20000,
    seed: int = 0,
    threshold_step_db: float = 0.1,
    include_cp: bool = False,
    alpha_prime: int = 0,
) -> PaprResult:
    """Per-frame PAPR (max/mean power, dB) and its CCDF.

    PAPR is computed over the MN core samples by default to isolate the
    modulation; ``include_cp`` switches to the windowed extended frame.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    MN = M * N
    lam = waveform_diagonal(waveform, M, N)
    nbits = MN * modem.bits_per_symbol(qam_order)
    paprs = np.empty(trials)
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        bits = rng.integers(0, 2, nbits)
        d = modem.qam_map(bits, qam_order)
        if waveform == "OFDM":
            s = apply_a_g(d, lam, M, N)  # data straight on the TF grid
        else:
            s, _ = modem.modulate_fast(d, lam, M, N)
        if include_cp:
            s = modem.add_cp_window(s, alpha_prime)
        p = np.abs(s) ** 2
        paprs[trial] = 10.0 * np.log10(p.max() / p.mean())
    hi = float(np.ceil(paprs.max() / threshold_step_db) * threshold_step_db)
    thresholds = np.arange(0.0, hi + threshold_step_db, threshold_step_db)
    ccdf = (paprs[None, :] > thresholds[:, None]).mean(axis=1)
    return PaprResult(waveform, paprs, thresholds, ccdf, trials, seed)


# ---------------------------------------------------------------------------
# BER
# ---------------------------------------------------------------------------


def wilson_interval(errors: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        return (0.0, 1.0)
    p = errors / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass
class BerPoint:
    snr_db: float
    errors: int
    bits: int
    frames: int

    @property
    def ber(self) -> float:
        return self.errors / self.bits if self.bits else float("nan")

    @property
    def confidence(self) -> tuple[float, float]:
        return wilson_interval(self.errors, self.bits)


@dataclass
class BerResult:
    waveform: str
    points: list[BerPoint] = field(default_factory=list)
    seed: int = 0

    def records(self) -> list[MetricRecord]:
        return [
            MetricRecord("ber", self.waveform, p.snr_db, p.ber, p.frames, self.seed)
            for p in self.points
        ]


def _ofdm_one_tap(
    r: np.ndarray, paths: PathSet, M: int, N: int, noise_var: float
) -> np.ndarray:
    """Per-slot M-point DFT then one-tap MMSE on the TF grid.

    The per-(slot, subcarrier) gain is the exact diagonal of the per-slot
    frequency-domain channel: sum_p h_p e^{-2j pi m l_p / M} times the mean
    Doppler phasor over the slot's M samples.
    """
    MN = M * N
    y = (np.fft.fft(r.reshape(N, M), axis=1) / np.sqrt(M)).reshape(MN)
    n_idx = np.arange(N)
    m_idx = np.arange(M)
    C = np.zeros((N, M), dtype=complex)
    for h, l, k in zip(paths.gains, paths.delays, paths.dopplers):
        if k == 0:
            phi = np.ones(N, dtype=complex)
        else:
            q = np.exp(2j * np.pi * k / MN)
            phi = np.exp(2j * np.pi * k * (n_idx * M - l) / MN) * (q**M - 1) / (q - 1) / M
        C += np.outer(phi, h * np.exp(-2j * np.pi * m_idx * l / M))
    Cf = C.reshape(MN)
    return Cf.conj() * y / (np.abs(Cf) ** 2 + noise_var)


def run_ber(
    params: OtfsParams,
    snr_db: list[float],
    master_seed: int = 0,
    waveforms: tuple[str, ...] = WAVEFORMS,
    target_errors: int = 200,
    max_frames: int = 400,
    identity_channel: bool = False,
) -> list[BerResult]:
    """Monte Carlo BER over independent EVA realizations.

    Channels are drawn once per trial index and shared across SNR points
    and waveforms (common random numbers), so curves are directly
    comparable.  Each SNR point stops once every waveform has accumulated
    ``target_errors`` bit errors or ``max_frames`` frames.
    """
    M, N = params.M, params.N
    MN = M * N
    order = params.qam_order
    nbits = MN * modem.bits_per_symbol(order)
    diags = {wf: waveform_diagonal(wf, M, N) for wf in waveforms}
    ops = {
        wf: ModulationOperator(diags[wf], M, N)
        for wf in waveforms
        if wf != "OFDM"
    }

    results = {wf: BerResult(wf, [], master_seed) for wf in waveforms}
    # channel cache, one entry per trial index, shared by all SNR points
    channels: dict[int, tuple[PathSet, np.ndarray | None]] = {}

    def channel_for(trial: int) -> tuple[PathSet, np.ndarray | None]:
        if trial not in channels:
            if identity_channel:
                paths = identity_paths()
                H = None  # identity; receivers special-case it
            else:
                rng = np.random.default_rng([master_seed, trial])
                paths = sample_eva(params, rng)
                H = build_channel_matrix(paths, MN)
            channels[trial] = (paths, H)
        return channels[trial]

    for si, snr in enumerate(snr_db):
        noise_var = 10.0 ** (-snr / 10.0)
        tally = {wf: BerPoint(snr, 0, 0, 0) for wf in waveforms}
        for trial in range(max_frames):
            if all(t.errors >= target_errors for t in tally.values()):
                break
            paths, H = channel_for(trial)
            if H is not None:
                G = H @ H.conj().T + noise_var * np.eye(MN)
                Hh = H.conj().T
            for wi, wf in enumerate(waveforms):
                rng_bits = np.random.default_rng([master_seed, trial, 1000 + wi])
                bits = rng_bits.integers(0, 2, nbits)
                d = modem.qam_map(bits, order)
                if wf == "OFDM":
                    s = apply_a_g(d, diags[wf], M, N)
                else:
                    s, _ = modem.modulate_fast(d, diags[wf], M, N)
                rx = s if identity_channel else apply_channel(paths, s)
                rng_noise = np.random.default_rng([master_seed, trial, si, wi])
                rx = awgn(rx, noise_var, rng_noise)
                if wf == "OFDM":
                    d_hat = _ofdm_one_tap(rx, paths, M, N, noise_var)
                elif H is None:
                    # identity channel: MMSE-CE collapses to a scalar gain
                    d_hat = ops[wf].apply_adjoint(rx / (1.0 + noise_var))
                else:
                    z = Hh @ np.linalg.solve(G, rx)
                    d_hat = ops[wf].apply_adjoint(z)
                errs = int(np.sum(modem.qam_demap(d_hat, order) != bits))
                t = tally[wf]
                tally[wf] = BerPoint(snr, t.errors + errs, t.bits + nbits, t.frames + 1)
        for wf in waveforms:
            results[wf].points.append(tally[wf])
    return [results[wf] for wf in waveforms]


# ---------------------------------------------------------------------------
# Complexity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CmCount:
    formula: float  # MN + (MN/2) log2 N
    measured: float  # tally from the fast transmitter (Dirichlet pulse)
    measured_rect: float  # same, rectangular pulse (skips the diagonal stage)


def cm_count(M: int, N: int, seed: int = 0) -> CmCount:
    """Closed-form vs measured complex-multiplication count of the fast path."""
    MN = M * N
    formula = MN + MN / 2.0 * math.log2(N) if N > 1 else float(MN)
    rng = np.random.default_rng(seed)
    d = rng.standard_normal(MN) + 1j * rng.standard_normal(MN)
    _, measured = modem.modulate_fast(d, waveform_diagonal("CDPS-OTFS", M, N), M, N)
    _, measured_rect = modem.modulate_fast(d, waveform_diagonal("RPS-OTFS", M, N), M, N)
    return CmCount(formula, measured, measured_rect)
