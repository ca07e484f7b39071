import itertools
import math

import numpy as np
import pytest

from hexotoc.fock import (
    FockBasis,
    QuantumState,
    annihilation_matrix,
    apply_annihilation,
    apply_creation,
    basis_state,
    enumerate_basis,
    sector_dimension,
)


def test_two_sites_two_bosons_lexicographic():
    b = enumerate_basis(2, 2)
    assert b.dim == 3
    assert [b.occupation(k) for k in range(3)] == [(0, 2), (1, 1), (2, 0)]


def test_known_sector_dimensions():
    assert enumerate_basis(6, 6).dim == 462
    assert sector_dimension(10, 10) == 92378
    assert sector_dimension(10, 10) == math.comb(19, 9)


def test_dimension_matches_stars_and_bars_exhaustively():
    for L in range(1, 9):
        for N in range(0, 9):
            assert sector_dimension(L, N) == math.comb(N + L - 1, N)


def test_rank_endpoints():
    b = enumerate_basis(4, 3)
    assert b.rank(b.occupation(0)) == 0
    assert b.rank(b.occupation(b.dim - 1)) == b.dim - 1
    assert b.occupation(0) == (0, 0, 0, 3)
    assert b.occupation(b.dim - 1) == (3, 0, 0, 0)


def test_rank_unrank_round_trip_sampled():
    b = enumerate_basis(8, 8)
    rng = np.random.default_rng(7)
    for k in rng.integers(0, b.dim, size=1000):
        assert b.rank(b.occupation(int(k))) == int(k)


def test_rank_array_matches_scalar_rank():
    b = enumerate_basis(6, 4)
    occs = b.states.copy()
    ranks = b.rank_array(occs)
    assert list(ranks) == [b.rank(tuple(row)) for row in occs]


def test_full_enumeration_is_sorted_and_complete():
    b = enumerate_basis(5, 3)
    rows = [tuple(r) for r in b.states]
    assert rows == sorted(rows)
    expect = {
        occ
        for occ in itertools.product(range(4), repeat=5)
        if sum(occ) == 3
    }
    assert set(rows) == expect


def test_annihilation_on_fock_state():
    b2 = enumerate_basis(2, 2)
    psi = basis_state(b2, (1, 1))
    out = apply_annihilation(psi, 0)
    assert out.basis.sector == (2, 1, 2)
    expect = np.zeros(out.basis.dim, dtype=complex)
    expect[out.basis.rank((0, 1))] = 1.0
    np.testing.assert_allclose(out.amplitudes, expect, atol=1e-15)

    # sqrt(n) amplitude: a|2,0> = sqrt(2)|1,0>
    out2 = apply_annihilation(basis_state(b2, (2, 0)), 0)
    assert abs(out2.amplitudes[out2.basis.rank((1, 0))] - math.sqrt(2)) < 1e-15


def test_annihilation_of_empty_site_gives_zero_vector():
    b = enumerate_basis(3, 2)
    out = apply_annihilation(basis_state(b, (0, 2, 0)), 0)
    assert out.norm() == 0.0


def test_creation_on_fock_state():
    b = enumerate_basis(2, 1, n_max=2)
    out = apply_creation(basis_state(b, (1, 0)), 0)
    assert abs(out.amplitudes[out.basis.rank((2, 0))] - math.sqrt(2)) < 1e-15
    vac = enumerate_basis(2, 0, n_max=1)
    up = apply_creation(basis_state(vac, (0, 0)), 1)
    assert abs(up.amplitudes[up.basis.rank((0, 1))] - 1.0) < 1e-15


def test_creation_annihilation_adjoint():
    # the lowering matrix sector N -> N-1 must be the adjoint of raising
    for L, N in [(3, 3), (4, 2), (6, 6)]:
        hi = enumerate_basis(L, N)
        lo = enumerate_basis(L, N - 1, n_max=N)
        for site in range(L):
            a = annihilation_matrix(hi, lo, site).toarray()
            # raise each lo basis vector and read off matrix elements
            adag = np.zeros((hi.dim, lo.dim))
            for k in range(lo.dim):
                v = apply_creation(basis_state(lo, lo.occupation(k)), site, dst=hi)
                adag[:, k] = v.amplitudes.real
            np.testing.assert_allclose(a.T, adag, atol=1e-14)


def test_number_operator_from_ladder_pair():
    # a_i^dag a_i must be diagonal with the occupations on the diagonal
    b = enumerate_basis(4, 3)
    lo = enumerate_basis(4, 2, n_max=3)
    for site in range(4):
        a = annihilation_matrix(b, lo, site)
        n_op = (a.conj().T @ a).toarray()
        np.testing.assert_allclose(
            np.diag(n_op), b.states[:, site].astype(float), atol=1e-14
        )
        assert np.max(np.abs(n_op - np.diag(np.diag(n_op)))) == 0.0


def test_truncated_sector():
    b = enumerate_basis(4, 4, n_max=2)
    assert b.truncated
    assert all(b.states.max(axis=0) <= 2)
    assert b.dim == sector_dimension(4, 4, n_max=2)
    full = enumerate_basis(4, 4)
    assert not full.truncated
    assert b.dim < full.dim


def test_creation_flags_truncation_loss():
    b = enumerate_basis(2, 2, n_max=2)
    psi = basis_state(b, (2, 0))
    out = apply_creation(psi, 0)  # would need n=3 at site 0: weight dropped
    assert out.truncated
    assert out.norm() == 0.0
    kept = apply_creation(basis_state(b, (0, 2)), 0)
    assert not kept.truncated


def test_state_normalization_and_overlap():
    b = enumerate_basis(2, 2)
    x = basis_state(b, (1, 1))
    y = basis_state(b, (2, 0))
    assert x.norm() == 1.0
    assert x.overlap(y) == 0.0
    z = QuantumState((x.amplitudes + 1j * y.amplitudes) / math.sqrt(2), b)
    assert abs(z.norm() - 1.0) < 1e-15
    assert abs(x.overlap(z) - 1 / math.sqrt(2)) < 1e-15


def test_sector_mismatch_rejected():
    hi = enumerate_basis(3, 3)
    with pytest.raises(ValueError):
        annihilation_matrix(hi, enumerate_basis(3, 3), 0)
    with pytest.raises(ValueError):
        annihilation_matrix(hi, enumerate_basis(4, 2), 0)
    with pytest.raises(IndexError):
        apply_annihilation(basis_state(hi, (1, 1, 1)), 5)


def test_invalid_sector_arguments():
    with pytest.raises(ValueError):
        enumerate_basis(0, 2)
    with pytest.raises(ValueError):
        enumerate_basis(3, -1)
    with pytest.raises(ValueError):
        enumerate_basis(2, 5, n_max=2)  # 5 bosons cannot fit under cap 2
    with pytest.raises(ValueError):
        b = enumerate_basis(2, 0)
        apply_annihilation(basis_state(b, (0, 0)), 0)


def test_rank_rejects_foreign_occupation():
    b = enumerate_basis(3, 2)
    with pytest.raises(ValueError):
        b.rank((1, 1, 1))  # wrong total
    with pytest.raises(ValueError):
        b.rank((3, -1, 0))
