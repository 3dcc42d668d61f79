"""DFT operators, ISFFT, pulse shaping matrix, and the factorization oracle."""

import numpy as np
import pytest

import cpsotfs.transforms as transforms
from cpsotfs.params import permutation_matrix
from cpsotfs.pulse import dirichlet_pulse, rect_pulse
from cpsotfs.transforms import (
    ModulationOperator,
    StructureError,
    build_a_dd,
    build_a_g,
    characteristic_diagonal,
    dft_matrix,
    doppler_block_idft,
    idft_matrix,
    isfft,
    oracle_characteristic_diagonal,
    sfft,
    subcarrier_block_idft,
)


def _random(MN, seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(MN) + 1j * rng.standard_normal(MN)


# ---------------------------------------------------------------------------
# DFT matrices
# ---------------------------------------------------------------------------


def test_idft_matrix_small():
    np.testing.assert_allclose(idft_matrix(1), [[1.0]], atol=1e-15)
    np.testing.assert_allclose(
        idft_matrix(2), np.array([[1, 1], [1, -1]]) / np.sqrt(2), atol=1e-15
    )


def test_idft_matrix_unitarity():
    W = idft_matrix(8)
    np.testing.assert_allclose(W @ W.conj().T, np.eye(8), atol=1e-12)
    np.testing.assert_allclose(dft_matrix(8), W.conj().T, atol=0)


def test_idft_matrix_rejects_zero():
    with pytest.raises(ValueError):
        idft_matrix(0)


# ---------------------------------------------------------------------------
# ISFFT / SFFT
# ---------------------------------------------------------------------------


def test_isfft_impulse_spreads_uniformly():
    M, N = 4, 3
    d = np.zeros(M * N, dtype=complex)
    d[0] = 1.0  # (k=0, l=0)
    np.testing.assert_allclose(isfft(d, M, N), np.full(M * N, 1 / np.sqrt(M * N)), atol=1e-14)


def test_isfft_zeros():
    assert not isfft(np.zeros(12), 4, 3).any()


@pytest.mark.parametrize("M,N", [(2, 2), (3, 2), (4, 5)])
def test_isfft_matches_double_sum(M, N):
    # brute-force evaluation of the defining double sum
    d = _random(M * N, seed=M * 100 + N)
    X = np.zeros(M * N, dtype=complex)
    for n in range(N):
        for m in range(M):
            acc = 0.0
            for k in range(N):
                for l in range(M):
                    acc += d[l * N + k] * np.exp(2j * np.pi * (n * k / N - m * l / M))
            X[n * M + m] = acc / np.sqrt(N * M)
    np.testing.assert_allclose(isfft(d, M, N), X, atol=1e-12)


def test_sfft_inverts_isfft():
    M, N = 4, 4
    d = _random(M * N, seed=3)
    np.testing.assert_allclose(sfft(isfft(d, M, N), M, N), d, atol=1e-12)


def test_sfft_constant_gives_impulse():
    M, N = 4, 3
    X = np.full(M * N, 1 / np.sqrt(N * M), dtype=complex)
    d = sfft(X, M, N)
    expect = np.zeros(M * N, dtype=complex)
    expect[0] = 1.0
    np.testing.assert_allclose(d, expect, atol=1e-13)


def test_isfft_equals_a_dd():
    for M, N in [(2, 2), (4, 3), (8, 4)]:
        d = _random(M * N, seed=M + N)
        np.testing.assert_allclose(isfft(d, M, N), build_a_dd(M, N) @ d, atol=1e-12)


def test_isfft_length_validation():
    with pytest.raises(ValueError):
        isfft(np.zeros(5), 2, 3)
    with pytest.raises(ValueError):
        sfft(np.zeros(5), 2, 3)


@pytest.mark.parametrize("M", range(1, 17))
@pytest.mark.parametrize("N", [1, 2, 3, 4, 8, 16])
def test_a_dd_unitary(M, N):
    if M * N > 256:
        pytest.skip("dense check kept small per cell; larger sizes covered elsewhere")
    A = build_a_dd(M, N)
    np.testing.assert_allclose(A @ A.conj().T, np.eye(M * N), atol=1e-10)


# ---------------------------------------------------------------------------
# Pulse shaping matrix A_g
# ---------------------------------------------------------------------------


def test_a_g_rect_n1_is_idft():
    # One slot: the shaping matrix is exactly the M-point IDFT
    g = rect_pulse(4, 1)
    np.testing.assert_allclose(build_a_g(g.samples, 4, 1), idft_matrix(4), atol=1e-14)


def test_a_g_impulse_m1_is_shift():
    # M = 1: columns are pure time shifts of the prototype
    N = 4
    g = np.zeros(N, dtype=complex)
    g[0] = 1.0
    np.testing.assert_allclose(build_a_g(g, 1, N), np.eye(N), atol=0)


def test_a_g_matches_scalar_loop():
    M, N = 2, 2
    MN = M * N
    rng = np.random.default_rng(5)
    g = rng.standard_normal(MN) + 1j * rng.standard_normal(MN)
    x = _random(MN, seed=6)
    A = build_a_g(g, M, N)
    # scalar evaluation: s(r) = sum_{n,m} x[nM+m] g((r-nM) mod MN) e^{2j pi m r / M}
    s = np.zeros(MN, dtype=complex)
    for r in range(MN):
        for n in range(N):
            for m in range(M):
                s[r] += x[n * M + m] * g[(r - n * M) % MN] * np.exp(2j * np.pi * m * r / M)
    np.testing.assert_allclose(A @ x, s, atol=1e-12)


def test_a_g_length_validation():
    with pytest.raises(ValueError):
        build_a_g(np.zeros(5), 2, 3)


# ---------------------------------------------------------------------------
# Characteristic diagonal and factorization
# ---------------------------------------------------------------------------


def test_rect_diagonal_is_identity():
    for M, N in [(2, 2), (4, 4), (8, 4), (16, 8)]:
        g = rect_pulse(M, N)
        np.testing.assert_allclose(
            characteristic_diagonal(g.samples, M, N), np.ones(M * N), atol=1e-12
        )


def test_dirichlet_diagonal_unimodular():
    lam = characteristic_diagonal(dirichlet_pulse(4, 4).samples, 4, 4)
    np.testing.assert_allclose(np.abs(lam), np.ones(16), atol=1e-12)


def test_diagonal_linearity():
    M, N = 4, 3
    rng = np.random.default_rng(7)
    g = rng.standard_normal(M * N) + 1j * rng.standard_normal(M * N)
    np.testing.assert_allclose(
        characteristic_diagonal(2.0 * g, M, N),
        2.0 * characteristic_diagonal(g, M, N),
        atol=1e-12,
    )


@pytest.mark.parametrize("M", [2, 3, 4])
@pytest.mark.parametrize("N", [2, 3, 4])
@pytest.mark.parametrize("make", [rect_pulse, dirichlet_pulse])
def test_closed_form_matches_oracle(M, N, make):
    g = make(M, N)
    lam = characteristic_diagonal(g.samples, M, N)
    lam_oracle = oracle_characteristic_diagonal(g.samples, M, N)
    np.testing.assert_allclose(lam, lam_oracle, atol=1e-10)


@pytest.mark.parametrize("M,N", [(2, 2), (3, 4), (4, 3), (8, 4), (16, 8)])
@pytest.mark.parametrize("make", [rect_pulse, dirichlet_pulse])
def test_factorization_identity_dense(M, N, make):
    g = make(M, N)
    MN = M * N
    P = permutation_matrix(M, N)
    UN = doppler_block_idft(M, N)
    UM = subcarrier_block_idft(M, N)
    D = np.diag(characteristic_diagonal(g.samples, M, N))
    lhs = build_a_g(g.samples, M, N)
    rhs = P @ UN @ D @ UN.conj().T @ P.T @ UM
    rel = np.linalg.norm(lhs - rhs) / np.linalg.norm(np.eye(MN))
    assert rel < 1e-10


def test_oracle_detects_broken_permutation(monkeypatch):
    # Swapping in the non-bijective interleave rule must trip the
    # structural check, not silently return a wrong diagonal.
    def bad_permutation_matrix(M, N, printed_formula=False):
        return permutation_matrix(M, N, printed_formula=True)

    monkeypatch.setattr(transforms, "permutation_matrix", bad_permutation_matrix)
    g = dirichlet_pulse(4, 4)
    with pytest.raises(StructureError):
        oracle_characteristic_diagonal(g.samples, 4, 4)


def test_dense_cap_enforced():
    with pytest.raises(ValueError):
        build_a_dd(128, 64)


# ---------------------------------------------------------------------------
# Matrix-free operators
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("make", [rect_pulse, dirichlet_pulse])
def test_apply_a_g_matches_dense(make):
    M, N = 8, 4
    g = make(M, N)
    lam = characteristic_diagonal(g.samples, M, N)
    x = _random(M * N, seed=11)
    np.testing.assert_allclose(
        transforms.apply_a_g(x, lam, M, N), build_a_g(g.samples, M, N) @ x, atol=1e-12
    )


@pytest.mark.parametrize("make", [rect_pulse, dirichlet_pulse])
def test_modulation_operator_roundtrip_and_dense(make):
    M, N = 8, 4
    g = make(M, N)
    lam = characteristic_diagonal(g.samples, M, N)
    op = ModulationOperator(lam, M, N)
    d = _random(M * N, seed=13)
    A = op.dense()
    np.testing.assert_allclose(op.apply(d), A @ d, atol=1e-12)
    np.testing.assert_allclose(op.apply_adjoint(d), A.conj().T @ d, atol=1e-12)
    # adjoint inverts apply (A is unitary for both shipped pulses)
    np.testing.assert_allclose(op.apply_adjoint(op.apply(d)), d, atol=1e-10)


def test_modulation_operator_validation():
    lam = np.ones(8, dtype=complex)
    op = ModulationOperator(lam, 4, 2)
    with pytest.raises(ValueError):
        op.apply(np.zeros(7))
    with pytest.raises(ValueError):
        ModulationOperator(np.ones(7), 4, 2)
