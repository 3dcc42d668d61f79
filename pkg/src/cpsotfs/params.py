"""Frame geometry, vectorization index maps, and the interleaving permutation.

All other modules consume the index conventions defined here instead of
re-deriving them:

* delay-Doppler vectors are delay-major, Doppler fastest: ``i = l*N + k``
* time-frequency vectors are slot-major, subcarrier fastest: ``j = n*M + m``

The slot-major time-frequency ordering is the one under which the block
transforms ``I_N (x) W_M`` / ``I_M (x) W_N`` and the interleaving permutation
compose into the factorized modulation matrix (see ``transforms``); the
published description stacks the subcarrier index slowest, which is not
consistent with that factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s

_VALID_QAM_ORDERS = (4, 16, 64)


@dataclass(frozen=True)
class OtfsParams:
    """Frame geometry and link parameters.

    The symbol duration T is always derived as 1/delta_f; it is a property
    rather than a field so the pair can never drift apart.
    """

    M: int
    N: int
    delta_f: float = 15e3
    alpha_prime: int = 0
    qam_order: int = 4
    guard_set: frozenset[int] = field(default_factory=frozenset)
    carrier_freq: float = 4e9
    speed: float = 0.0  # m/s

    def __post_init__(self) -> None:
        if self.M < 1 or self.N < 1:
            raise ValueError(f"M and N must be >= 1, got M={self.M}, N={self.N}")
        if self.alpha_prime < 0:
            raise ValueError(f"alpha_prime must be >= 0, got {self.alpha_prime}")
        if self.qam_order not in _VALID_QAM_ORDERS:
            raise ValueError(
                f"qam_order must be one of {_VALID_QAM_ORDERS}, got {self.qam_order}"
            )
        if self.delta_f <= 0:
            raise ValueError(f"delta_f must be positive, got {self.delta_f}")
        bad = [m for m in self.guard_set if not 0 <= m < self.M]
        if bad:
            raise ValueError(f"guard subcarriers out of range [0, {self.M - 1}]: {bad}")
        object.__setattr__(self, "guard_set", frozenset(self.guard_set))

    @property
    def T(self) -> float:
        """Symbol duration in seconds (T * delta_f = 1 exactly)."""
        return 1.0 / self.delta_f

    @property
    def frame_size(self) -> int:
        return self.M * self.N

    @property
    def sample_rate(self) -> float:
        return self.M * self.delta_f

    @property
    def max_doppler(self) -> float:
        """Maximum Doppler shift in Hz for the configured speed and carrier."""
        return self.speed * self.carrier_freq / SPEED_OF_LIGHT


def dd_index(k: int, l: int, N: int) -> int:
    """Flat index of Doppler bin k, delay bin l in the delay-Doppler vector."""
    if not 0 <= k < N:
        raise ValueError(f"Doppler index k={k} out of range [0, {N - 1}]")
    if l < 0:
        raise ValueError(f"delay index l={l} must be >= 0")
    return l * N + k


def dd_unindex(i: int, N: int) -> tuple[int, int]:
    """Inverse of :func:`dd_index`: flat index -> (k, l)."""
    if i < 0:
        raise ValueError(f"flat index i={i} must be >= 0")
    return i % N, i // N


def tf_index(n: int, m: int, M: int) -> int:
    """Flat index of slot n, subcarrier m in the time-frequency vector."""
    if not 0 <= m < M:
        raise ValueError(f"subcarrier index m={m} out of range [0, {M - 1}]")
    if n < 0:
        raise ValueError(f"slot index n={n} must be >= 0")
    return n * M + m


def tf_unindex(j: int, M: int) -> tuple[int, int]:
    """Inverse of :func:`tf_index`: flat index -> (n, m)."""
    if j < 0:
        raise ValueError(f"flat index j={j} must be >= 0")
    return j // M, j % M


def permutation_indices(M: int, N: int, printed_formula: bool = False) -> np.ndarray:
    """Index vector pi of the MN x MN interleaving permutation P.

    The induced matrix has P[s, pi(s)] = 1, i.e. applying P gathers:
    ``(P x)[s] = x[pi(s)]``.  With ``pi(s) = (s mod M) * N + floor(s / M)``
    this is the standard M x N transpose-stride interleave and P is
    orthogonal (P P^T = I).

    ``printed_formula=True`` selects the variant
    ``pi(s) = (s mod M) * (N - 1) + floor(s / M)``, which appears in print
    but is not a bijection for general M, N.  It exists only as a negative
    control for the verification suite.
    """
    if M < 1 or N < 1:
        raise ValueError(f"M and N must be >= 1, got M={M}, N={N}")
    s = np.arange(M * N)
    if printed_formula:
        return (s % M) * (N - 1) + s // M
    return (s % M) * N + s // M


def apply_permutation(x: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """Apply P to a vector: ``y[s] = x[pi(s)]``."""
    return np.asarray(x)[pi]


def apply_permutation_t(x: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """Apply P^T to a vector: ``y[pi(s)] = x[s]``."""
    y = np.empty_like(np.asarray(x))
    y[pi] = x
    return y


def permutation_matrix(M: int, N: int, printed_formula: bool = False) -> np.ndarray:
    """Dense P for oracle tests; P[s, pi(s)] = 1."""
    pi = permutation_indices(M, N, printed_formula)
    MN = M * N
    P = np.zeros((MN, MN))
    P[np.arange(MN), pi] = 1.0
    return P


class DelayDopplerGrid:
    """MN data symbols on the delay-Doppler lattice, delay-major storage."""

    def __init__(self, data: np.ndarray, M: int, N: int):
        data = np.asarray(data, dtype=complex)
        if data.shape != (M * N,):
            raise ValueError(f"expected {M * N} symbols, got shape {data.shape}")
        self.data = data
        self.M = M
        self.N = N

    @classmethod
    def from_matrix(cls, mat: np.ndarray) -> "DelayDopplerGrid":
        """Build from an (M, N) matrix indexed [delay l, Doppler k]."""
        mat = np.asarray(mat, dtype=complex)
        M, N = mat.shape
        return cls(mat.reshape(M * N), M, N)

    def to_matrix(self) -> np.ndarray:
        """(M, N) view indexed [delay l, Doppler k]."""
        return self.data.reshape(self.M, self.N)

    def __getitem__(self, kl: tuple[int, int]) -> complex:
        k, l = kl
        return self.data[dd_index(k, l, self.N)]


class TimeFrequencyGrid:
    """MN symbols on the time-frequency lattice, slot-major storage."""

    def __init__(self, data: np.ndarray, M: int, N: int):
        data = np.asarray(data, dtype=complex)
        if data.shape != (M * N,):
            raise ValueError(f"expected {M * N} symbols, got shape {data.shape}")
        self.data = data
        self.M = M
        self.N = N

    @classmethod
    def from_matrix(cls, mat: np.ndarray) -> "TimeFrequencyGrid":
        """Build from an (N, M) matrix indexed [slot n, subcarrier m]."""
        mat = np.asarray(mat, dtype=complex)
        N, M = mat.shape
        return cls(mat.reshape(M * N), M, N)

    def to_matrix(self) -> np.ndarray:
        """(N, M) view indexed [slot n, subcarrier m]."""
        return self.data.reshape(self.N, self.M)

    def __getitem__(self, nm: tuple[int, int]) -> complex:
        n, m = nm
        return self.data[tf_index(n, m, self.M)]
