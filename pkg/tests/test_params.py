"""Index maps, permutation, and parameter validation."""

import numpy as np
import pytest

from cpsotfs.params import (
    DelayDopplerGrid,
    OtfsParams,
    TimeFrequencyGrid,
    apply_permutation,
    apply_permutation_t,
    dd_index,
    dd_unindex,
    permutation_indices,
    permutation_matrix,
    tf_index,
    tf_unindex,
)


# ---------------------------------------------------------------------------
# OtfsParams
# ---------------------------------------------------------------------------


def test_params_basic_properties():
    p = OtfsParams(M=64, N=16, delta_f=15e3, alpha_prime=8)
    assert p.T * p.delta_f == 1.0  # exact, T is derived
    assert p.frame_size == 1024
    assert p.sample_rate == 64 * 15e3


def test_params_max_doppler():
    p = OtfsParams(M=4, N=4, carrier_freq=4e9, speed=500 / 3.6)
    assert p.max_doppler == pytest.approx((500 / 3.6) * 4e9 / 299_792_458.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"M": 0, "N": 4},
        {"M": 4, "N": 0},
        {"M": 4, "N": 4, "alpha_prime": -1},
        {"M": 4, "N": 4, "qam_order": 8},
        {"M": 4, "N": 4, "delta_f": 0.0},
        {"M": 4, "N": 4, "guard_set": frozenset({4})},
        {"M": 4, "N": 4, "guard_set": frozenset({-1})},
    ],
)
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        OtfsParams(**kwargs)


# ---------------------------------------------------------------------------
# Index maps
# ---------------------------------------------------------------------------


def test_dd_index_examples():
    assert dd_index(k=0, l=0, N=4) == 0
    assert dd_index(k=2, l=1, N=4) == 6
    M, N = 7, 4
    assert dd_index(k=N - 1, l=M - 1, N=N) == M * N - 1


def test_dd_index_range_errors():
    with pytest.raises(ValueError):
        dd_index(k=4, l=0, N=4)
    with pytest.raises(ValueError):
        dd_index(k=-1, l=0, N=4)
    with pytest.raises(ValueError):
        dd_index(k=0, l=-1, N=4)


@pytest.mark.parametrize("M", range(1, 17))
@pytest.mark.parametrize("N", [1, 2, 3, 8, 16])
def test_index_roundtrip_exhaustive(M, N):
    seen = set()
    for l in range(M):
        for k in range(N):
            i = dd_index(k, l, N)
            assert dd_unindex(i, N) == (k, l)
            seen.add(i)
    assert seen == set(range(M * N))
    seen = set()
    for n in range(N):
        for m in range(M):
            j = tf_index(n, m, M)
            assert tf_unindex(j, M) == (n, m)
            seen.add(j)
    assert seen == set(range(M * N))


# ---------------------------------------------------------------------------
# Permutation
# ---------------------------------------------------------------------------


def test_permutation_identity_for_m_equals_1():
    for N in (1, 2, 5, 9):
        assert permutation_indices(1, N).tolist() == list(range(N))


def test_permutation_small_examples():
    assert permutation_indices(2, 2).tolist() == [0, 2, 1, 3]
    assert permutation_indices(2, 3).tolist() == [0, 3, 1, 4, 2, 5]


@pytest.mark.parametrize("M", range(1, 17))
@pytest.mark.parametrize("N", range(1, 17))
def test_permutation_bijection_all_sizes(M, N):
    pi = permutation_indices(M, N)
    assert sorted(pi.tolist()) == list(range(M * N))


def test_printed_formula_is_not_a_bijection():
    # Negative control: the uncorrected interleave rule maps two sources
    # to the same destination already at M = N = 2.
    pi = permutation_indices(2, 2, printed_formula=True)
    assert sorted(pi.tolist()) != list(range(4))


def test_permutation_orthogonality():
    rng = np.random.default_rng(0)
    for M, N in [(2, 2), (3, 5), (8, 4)]:
        pi = permutation_indices(M, N)
        x = rng.standard_normal(M * N) + 1j * rng.standard_normal(M * N)
        assert np.array_equal(apply_permutation_t(apply_permutation(x, pi), pi), x)
        assert np.array_equal(apply_permutation(apply_permutation_t(x, pi), pi), x)
        P = permutation_matrix(M, N)
        np.testing.assert_allclose(P @ P.T, np.eye(M * N), atol=0)
        # dense P agrees with the vector forms
        np.testing.assert_array_equal(P @ x, apply_permutation(x, pi))
        np.testing.assert_array_equal(P.T @ x, apply_permutation_t(x, pi))


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


def test_grid_roundtrip_and_lookup():
    M, N = 3, 4
    rng = np.random.default_rng(1)
    d = rng.standard_normal(M * N) + 1j * rng.standard_normal(M * N)
    grid = DelayDopplerGrid(d, M, N)
    np.testing.assert_array_equal(
        DelayDopplerGrid.from_matrix(grid.to_matrix()).data, d
    )
    assert grid[(2, 1)] == d[dd_index(2, 1, N)]

    x = rng.standard_normal(M * N) + 1j * rng.standard_normal(M * N)
    tf = TimeFrequencyGrid(x, M, N)
    np.testing.assert_array_equal(
        TimeFrequencyGrid.from_matrix(tf.to_matrix()).data, x
    )
    assert tf[(3, 2)] == x[tf_index(3, 2, M)]


def test_grid_length_validation():
    with pytest.raises(ValueError):
        DelayDopplerGrid(np.zeros(5), 2, 3)
    with pytest.raises(ValueError):
        TimeFrequencyGrid(np.zeros(7), 2, 3)
