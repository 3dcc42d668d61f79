"""End-to-end transmitter and receiver operations.

Transmit side: Gray QAM mapping, the direct (dense, reference) and fast
(factorized) modulators, cyclic prefix/postfix insertion and edge
windowing.  Receive side: the full one-shot LMMSE equalizer and, for
unitary modulation matrices, the equivalent two-stage receiver (channel
MMSE followed by a matched filter).

The fast modulator also returns its complex-multiplication tally so the
complexity accounting in ``metrics`` can compare a measured count against
the closed-form MN + (MN/2) log2 N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import apply_permutation, permutation_indices
from .pulse import CMCM_TOL, PrototypePulse
from .transforms import ModulationOperator, build_a_dd, build_a_g, characteristic_diagonal

CONDITION_LIMIT = 1e12


class NumericalError(RuntimeError):
    """An equalizer solve failed or the system is too ill conditioned."""


# ---------------------------------------------------------------------------
# QAM mapping
# ---------------------------------------------------------------------------

_QAM_ORDERS = (4, 16, 64)


def bits_per_symbol(order: int) -> int:
    if order not in _QAM_ORDERS:
        raise ValueError(f"unsupported QAM order {order}, expected one of {_QAM_ORDERS}")
    return int(round(math.log2(order)))


def _gray_decode(v: np.ndarray) -> np.ndarray:
    """Binary-reflected Gray code -> binary, elementwise."""
    b = v.copy()
    s = v >> 1
    while s.any():
        b ^= s
        s >>= 1
    return b


def _axis_levels(order: int) -> tuple[int, float]:
    """Levels per axis and the unit-average-energy normalizer."""
    L = int(round(math.sqrt(order)))
    norm = math.sqrt(2.0 * (L * L - 1) / 3.0)
    return L, norm


def qam_map(bits: np.ndarray, order: int = 4) -> np.ndarray:
    """Map a 0/1 bit vector to unit-average-energy Gray-coded square QAM.

    Per symbol, the first half of the bits select the in-phase level and
    the second half the quadrature level, MSB first; all-zero bits map to
    the most positive corner (for 4-QAM: 00 -> (1 + 1j)/sqrt(2)).
    """
    b = bits_per_symbol(order)
    bits = np.asarray(bits, dtype=np.int64)
    if bits.size % b:
        raise ValueError(f"bit count {bits.size} not divisible by {b}")
    if bits.size and (bits.min() < 0 or bits.max() > 1):
        raise ValueError("bits must be 0 or 1")
    L, norm = _axis_levels(order)
    half = b // 2
    grouped = bits.reshape(-1, b)
    weights = 1 << np.arange(half - 1, -1, -1)
    vi = grouped[:, :half] @ weights
    vq = grouped[:, half:] @ weights
    amp_i = (L - 1) - 2 * _gray_decode(vi)
    amp_q = (L - 1) - 2 * _gray_decode(vq)
    return (amp_i + 1j * amp_q) / norm


def qam_demap(symbols: np.ndarray, order: int = 4) -> np.ndarray:
    """Nearest-neighbor hard decision back to bits (inverse of qam_map)."""
    b = bits_per_symbol(order)
    symbols = np.asarray(symbols, dtype=complex)
    L, norm = _axis_levels(order)
    half = b // 2

    def axis_bits(vals: np.ndarray) -> np.ndarray:
        idx = np.clip(np.round(((L - 1) - vals * norm) / 2.0), 0, L - 1).astype(np.int64)
        gray = idx ^ (idx >> 1)
        return (gray[:, None] >> np.arange(half - 1, -1, -1)) & 1

    out = np.empty((symbols.size, b), dtype=np.int64)
    out[:, :half] = axis_bits(symbols.real)
    out[:, half:] = axis_bits(symbols.imag)
    return out.reshape(-1)


# ---------------------------------------------------------------------------
# Modulators
# ---------------------------------------------------------------------------


def modulation_operator(pulse: PrototypePulse) -> ModulationOperator:
    """Fast-path operator A = P U_N D for a prototype pulse."""
    lam = characteristic_diagonal(pulse.samples, pulse.M, pulse.N)
    return ModulationOperator(lam, pulse.M, pulse.N)


def modulate_direct(d: np.ndarray, pulse: PrototypePulse) -> np.ndarray:
    """Reference transmitter: dense s = A_g (A_DD d).  Oracle for the fast path."""
    d = np.asarray(d, dtype=complex)
    M, N = pulse.M, pulse.N
    if d.shape != (M * N,):
        raise ValueError(f"expected {M * N} data symbols, got shape {d.shape}")
    return build_a_g(pulse.samples, M, N) @ (build_a_dd(M, N) @ d)


def fft_multiplies(L: int) -> float:
    """Complex multiplies charged to one L-point FFT.

    Exact butterfly count (L/2) log2 L for powers of two; the same
    expression with real-valued log2 L serves as the cost model otherwise.
    """
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    if L == 1:
        return 0.0
    return L / 2.0 * math.log2(L)


def modulate_fast(
    d: np.ndarray, lam: np.ndarray, M: int, N: int
) -> tuple[np.ndarray, float]:
    """Factorized transmitter s = P U_N (lam * d); returns (samples, CM tally).

    The tally charges MN multiplies for the diagonal stage (skipped when
    the diagonal is the identity, i.e. the rectangular pulse) plus M
    N-point IFFTs.  For power-of-two N the total is exactly
    MN + (MN/2) log2 N.
    """
    d = np.asarray(d, dtype=complex)
    lam = np.asarray(lam, dtype=complex)
    MN = M * N
    if d.shape != (MN,):
        raise ValueError(f"expected {MN} data symbols, got shape {d.shape}")
    if lam.shape != (MN,):
        raise ValueError(f"stale diagonal: expected {MN} entries, got {lam.shape}")
    cms = 0.0
    identity_diag = bool(np.abs(lam - 1.0).max() <= 1e-12)
    y = d
    if not identity_diag:
        y = lam * d
        cms += MN
    y = (np.fft.ifft(y.reshape(M, N), axis=1) * np.sqrt(N)).reshape(MN)
    s = apply_permutation(y, permutation_indices(M, N))
    cms += M * fft_multiplies(N)
    return s, cms


# ---------------------------------------------------------------------------
# Cyclic prefix and windowing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrameSamples:
    """Core MN samples plus the windowed CP/postfix-extended frame."""

    core: np.ndarray
    extended: np.ndarray
    alpha_prime: int


def edge_window(alpha: int) -> np.ndarray:
    """Root-raised-cosine edge taper of length alpha.

    Satisfies w(i)^2 + w(alpha-1-i)^2 = 1, the defining perfect
    overlap-add power property of the WOLA-style soft edge.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    i = np.arange(alpha)
    return np.sin(np.pi * (i + 0.5) / (2.0 * alpha)) if alpha else np.zeros(0)


def add_cp_window(
    s: np.ndarray, alpha: int, window: np.ndarray | None = None
) -> np.ndarray:
    """Circularly extend by alpha samples each side and apply soft edges.

    The extension is [last alpha samples, s, first alpha samples]; the
    window is all-ones over the middle MN samples with the given (or
    default RRC) taper rising over the prefix and falling over the postfix.
    """
    s = np.asarray(s, dtype=complex)
    MN = s.size
    if alpha > MN:
        raise ValueError(f"alpha={alpha} exceeds frame length {MN}")
    if alpha == 0:
        return s.copy()
    ext = np.concatenate([s[-alpha:], s, s[:alpha]])
    taper = edge_window(alpha) if window is None else np.asarray(window, dtype=float)
    if taper.shape != (alpha,):
        raise ValueError(f"window must have {alpha} samples, got {taper.shape}")
    ext[:alpha] *= taper
    ext[-alpha:] *= taper[::-1]
    return ext


def remove_cp(r_cp: np.ndarray, alpha: int) -> np.ndarray:
    """Discard the first and last alpha samples (inverse of the extension)."""
    r_cp = np.asarray(r_cp)
    if alpha < 0 or r_cp.size <= 2 * alpha and alpha > 0:
        raise ValueError(f"frame of {r_cp.size} samples too short for alpha={alpha}")
    if alpha == 0:
        return r_cp.copy()
    return r_cp[alpha:-alpha].copy()


def make_frame(s: np.ndarray, alpha: int, window: np.ndarray | None = None) -> FrameSamples:
    return FrameSamples(np.asarray(s, dtype=complex), add_cp_window(s, alpha, window), alpha)


# ---------------------------------------------------------------------------
# LMMSE receivers
# ---------------------------------------------------------------------------


def _solve_regularized(G: np.ndarray, b: np.ndarray) -> np.ndarray:
    try:
        x = np.linalg.solve(G, b)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(G)
        raise NumericalError(
            f"equalizer solve failed: condition number {cond:.3e} "
            f"(limit {CONDITION_LIMIT:.1e})"
        ) from exc
    if not np.all(np.isfinite(x)):
        cond = np.linalg.cond(G)
        raise NumericalError(
            f"equalizer solve produced non-finite values: condition number "
            f"{cond:.3e} (limit {CONDITION_LIMIT:.1e})"
        )
    return x


def lmmse_full(
    r: np.ndarray,
    H: np.ndarray,
    A: np.ndarray,
    noise_var: float,
    signal_var: float = 1.0,
) -> np.ndarray:
    """One-shot LMMSE estimate of the delay-Doppler data.

    d_hat = (HA)^H [ (HA)(HA)^H + (noise_var/signal_var) I ]^{-1} r,
    evaluated with a linear solve, never an explicit inverse.
    """
    r = np.asarray(r, dtype=complex)
    B = np.asarray(H, dtype=complex) @ np.asarray(A, dtype=complex)
    MN = B.shape[0]
    G = B @ B.conj().T + (noise_var / signal_var) * np.eye(MN)
    return B.conj().T @ _solve_regularized(G, r)


def lmmse_two_stage(
    r: np.ndarray,
    H: np.ndarray,
    op: ModulationOperator,
    noise_var: float,
    signal_var: float = 1.0,
) -> np.ndarray:
    """Channel MMSE followed by a matched filter; requires a unitary A.

    Stage 1: z = H^H [H H^H + (noise_var/signal_var) I]^{-1} r.
    Stage 2: d_hat = A^H z = D^H U_N^H P^T z, which for a non-rectangular
    constant-magnitude pulse costs only MN extra scalar multiplies.
    """
    if np.abs(np.abs(op.lam) - 1.0).max() > CMCM_TOL:
        raise ValueError(
            "two-stage receiver requires a constant-magnitude pulse "
            "(modulation matrix must be unitary)"
        )
    r = np.asarray(r, dtype=complex)
    H = np.asarray(H, dtype=complex)
    MN = H.shape[0]
    G = H @ H.conj().T + (noise_var / signal_var) * np.eye(MN)
    z = H.conj().T @ _solve_regularized(G, r)
    return op.apply_adjoint(z)
