"""Normalized DFT operators, ISFFT precoder, and the structured factors.

The circular pulse shaping matrix A_g admits the factorization

    A_g = P U_N D U_N^H P^T U_M

with U_N = I_M (x) W_N, U_M = I_N (x) W_M (W_L the L-point normalized IDFT),
P the transpose-stride interleave from ``params``, and D a diagonal matrix
fully determined by the prototype pulse.  The full modulation matrix then
collapses to A = A_g A_DD = P U_N D, which is what the fast transmit path
implements.

The closed form for the diagonal, validated against the dense oracle
``D = U_N^H P^T A_g U_M^H P U_N``, is

    lambda(b*N + q) = sqrt(M) * sum_a g[a*M + b] * exp(-2j*pi*a*q/N)

i.e. sqrt(M) times the N-point DFT of the b-th M-stride polyphase of g.
The printed version of this formula (sum index ranging over N values with
an exponent denominator of M, no scale factor) does not reproduce the
oracle diagonal for any sign convention; the form above does, exactly.
"""

from __future__ import annotations

import numpy as np

from .params import (
    apply_permutation,
    apply_permutation_t,
    permutation_indices,
    permutation_matrix,
)

#: Largest MN for which dense operators may be materialized (oracle tests).
DENSE_CAP = 4096


class StructureError(RuntimeError):
    """The oracle sandwich of A_g failed to be diagonal.

    Signals a broken permutation or pulse-shaping-matrix convention rather
    than a bad pulse.
    """


def _check_dense(MN: int) -> None:
    if MN > DENSE_CAP:
        raise ValueError(f"dense materialization capped at MN <= {DENSE_CAP}, got {MN}")


def idft_matrix(L: int) -> np.ndarray:
    """L x L normalized IDFT: entry (a, b) = exp(+2j*pi*a*b/L) / sqrt(L)."""
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    _check_dense(L)
    a = np.arange(L)
    return np.exp(2j * np.pi * np.outer(a, a) / L) / np.sqrt(L)


def dft_matrix(L: int) -> np.ndarray:
    """L x L normalized DFT (adjoint of :func:`idft_matrix`)."""
    return idft_matrix(L).conj().T


def doppler_block_idft(M: int, N: int) -> np.ndarray:
    """Dense U_N = I_M (x) W_N: per-delay-row N-point IDFT."""
    _check_dense(M * N)
    return np.kron(np.eye(M), idft_matrix(N))


def subcarrier_block_idft(M: int, N: int) -> np.ndarray:
    """Dense U_M = I_N (x) W_M: per-slot M-point IDFT."""
    _check_dense(M * N)
    return np.kron(np.eye(N), idft_matrix(M))


def isfft(d: np.ndarray, M: int, N: int) -> np.ndarray:
    """Map delay-Doppler data to the time-frequency grid.

    Input is delay-major (i = l*N + k), output slot-major (j = n*M + m):

        X(n, m) = (1/sqrt(NM)) sum_k sum_l d(k, l) exp(2j*pi*(n*k/N - m*l/M))

    Equals applying A_DD = U_M^H P U_N to the flattened grid.
    """
    d = np.asarray(d, dtype=complex)
    if d.shape != (M * N,):
        raise ValueError(f"expected length {M * N}, got shape {d.shape}")
    dmat = d.reshape(M, N)  # [l, k]
    t = np.fft.ifft(dmat, axis=1) * np.sqrt(N)  # IDFT over Doppler -> [l, n]
    x = np.fft.fft(t, axis=0) / np.sqrt(M)  # DFT over delay -> [m, n]
    return x.T.reshape(M * N)  # slot-major


def sfft(x: np.ndarray, M: int, N: int) -> np.ndarray:
    """Exact inverse of :func:`isfft` (time-frequency -> delay-Doppler)."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (M * N,):
        raise ValueError(f"expected length {M * N}, got shape {x.shape}")
    xmat = x.reshape(N, M).T  # [m, n]
    t = np.fft.ifft(xmat, axis=0) * np.sqrt(M)
    d = np.fft.fft(t, axis=1) / np.sqrt(N)
    return d.reshape(M * N)


def build_a_dd(M: int, N: int) -> np.ndarray:
    """Dense ISFFT precoder A_DD = U_M^H P U_N (unitary)."""
    _check_dense(M * N)
    P = permutation_matrix(M, N)
    return subcarrier_block_idft(M, N).conj().T @ P @ doppler_block_idft(M, N)


def build_a_g(g: np.ndarray, M: int, N: int) -> np.ndarray:
    """Dense MN x MN circular pulse shaping matrix.

    Column j = n*M + m (slot-major, matching the time-frequency vector
    ordering) has entries

        A_g[r, j] = g((r - n*M) mod MN) * exp(2j*pi*m*r/M)

    i.e. slot n shifts the prototype by M samples and m selects the
    subcarrier.
    """
    g = np.asarray(g, dtype=complex)
    MN = M * N
    if g.shape != (MN,):
        raise ValueError(f"pulse must have {MN} samples, got shape {g.shape}")
    _check_dense(MN)
    r = np.arange(MN)
    shifts = g[(r[:, None] - np.arange(N)[None, :] * M) % MN]  # [r, n]
    tones = np.exp(2j * np.pi * np.outer(r, np.arange(M)) / M)  # [r, m]
    # A[r, n*M + m] = shifts[r, n] * tones[r, m]
    return (shifts[:, :, None] * tones[:, None, :]).reshape(MN, MN)


def characteristic_diagonal(g: np.ndarray, M: int, N: int) -> np.ndarray:
    """Diagonal lambda of D in A_g = P U_N D U_N^H P^T U_M (closed form)."""
    g = np.asarray(g, dtype=complex)
    MN = M * N
    if g.shape != (MN,):
        raise ValueError(f"pulse must have {MN} samples, got shape {g.shape}")
    poly = g.reshape(N, M)  # poly[a, b] = g[a*M + b]
    spec = np.fft.fft(poly, axis=0)  # sum_a poly[a, b] e^{-2j pi a q / N}
    return (np.sqrt(M) * spec.T).reshape(MN)  # index r = b*N + q


def oracle_characteristic_diagonal(
    g: np.ndarray, M: int, N: int, tol: float = 1e-10
) -> np.ndarray:
    """Extract D directly from dense factors; raises if not diagonal.

    Computes U_N^H P^T A_g U_M^H P U_N and checks its off-diagonal mass.
    Authoritative reference for :func:`characteristic_diagonal`.
    """
    _check_dense(M * N)
    P = permutation_matrix(M, N)
    UN = doppler_block_idft(M, N)
    UM = subcarrier_block_idft(M, N)
    D = UN.conj().T @ P.T @ build_a_g(g, M, N) @ UM.conj().T @ P @ UN
    off = np.abs(D - np.diag(np.diag(D))).max()
    scale = max(np.abs(np.diag(D)).max(), 1.0)
    if off > tol * scale:
        raise StructureError(
            f"oracle sandwich not diagonal: max off-diagonal {off:.3e} "
            f"(tol {tol:.1e} x {scale:.3e}); permutation or A_g convention broken"
        )
    return np.diag(D)


def apply_a_g(x: np.ndarray, lam: np.ndarray, M: int, N: int) -> np.ndarray:
    """Matrix-free A_g @ x via the factorization P U_N D U_N^H P^T U_M."""
    x = np.asarray(x, dtype=complex)
    MN = M * N
    if x.shape != (MN,):
        raise ValueError(f"expected length {MN}, got shape {x.shape}")
    pi = permutation_indices(M, N)
    y = (np.fft.ifft(x.reshape(N, M), axis=1) * np.sqrt(M)).reshape(MN)  # U_M
    y = apply_permutation_t(y, pi)  # P^T
    y = (np.fft.fft(y.reshape(M, N), axis=1) / np.sqrt(N)).reshape(MN)  # U_N^H
    y = lam * y  # D
    y = (np.fft.ifft(y.reshape(M, N), axis=1) * np.sqrt(N)).reshape(MN)  # U_N
    return apply_permutation(y, pi)  # P


class ModulationOperator:
    """The composite A = A_g A_DD = P U_N D as a matrix-free operator.

    Immutable after construction; concurrent apply calls are safe.
    """

    def __init__(self, lam: np.ndarray, M: int, N: int):
        lam = np.asarray(lam, dtype=complex)
        if lam.shape != (M * N,):
            raise ValueError(f"diagonal must have {M * N} entries, got {lam.shape}")
        self.lam = lam
        self.M = M
        self.N = N
        self._pi = permutation_indices(M, N)

    @property
    def dimension(self) -> int:
        return self.M * self.N

    def apply(self, d: np.ndarray) -> np.ndarray:
        """s = A d = P U_N D d."""
        d = np.asarray(d, dtype=complex)
        if d.shape != (self.dimension,):
            raise ValueError(f"expected length {self.dimension}, got {d.shape}")
        y = self.lam * d
        y = (np.fft.ifft(y.reshape(self.M, self.N), axis=1) * np.sqrt(self.N)).reshape(
            self.dimension
        )
        return apply_permutation(y, self._pi)

    def apply_adjoint(self, s: np.ndarray) -> np.ndarray:
        """d = A^H s = D^H U_N^H P^T s."""
        s = np.asarray(s, dtype=complex)
        if s.shape != (self.dimension,):
            raise ValueError(f"expected length {self.dimension}, got {s.shape}")
        y = apply_permutation_t(s, self._pi)
        y = (np.fft.fft(y.reshape(self.M, self.N), axis=1) / np.sqrt(self.N)).reshape(
            self.dimension
        )
        return self.lam.conj() * y

    def dense(self) -> np.ndarray:
        """Dense A for oracle tests (capped at DENSE_CAP)."""
        _check_dense(self.dimension)
        P = permutation_matrix(self.M, self.N)
        return P @ doppler_block_idft(self.M, self.N) @ np.diag(self.lam)
