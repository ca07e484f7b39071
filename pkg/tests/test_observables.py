import numpy as np
import pytest

from hexotoc.hamiltonian import BoseHubbardParams
from hexotoc.lattice import OperatorSitePair, build_preset, load_graph
from hexotoc.observables import (
    OTOCSeries,
    SectorSet,
    TimeGrid,
    compute_otoc_series,
    default_grid,
    departure_time,
    otoc_table,
)
from hexotoc.oracle import dense_otoc_series


def test_time_grid_validation():
    TimeGrid(np.array([0.0]))
    TimeGrid(np.array([0.0, 0.5, 1.0]))
    with pytest.raises(ValueError):
        TimeGrid(np.array([]))
    with pytest.raises(ValueError):
        TimeGrid(np.array([-0.1, 0.5]))
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0, 0.5, 0.5]))
    with pytest.raises(ValueError):
        TimeGrid(np.array([[0.0, 1.0]]))


def test_time_grid_unit_conversion():
    g = TimeGrid(np.array([0.0, 2.0, 4.0]))
    np.testing.assert_allclose(g.times(4.0), [0.0, 0.5, 1.0], atol=0)
    assert len(g) == 3


def test_default_grid_shape():
    g = default_grid()
    assert len(g) == 201
    assert g.jt[0] == 0.0 and g.jt[-1] == 10.0


def test_otoc_at_time_zero_is_exactly_one():
    # F(0) = <psi| a_j^dag a_i^dag a_j a_i |psi> / normalization reduces to
    # n_i n_j for distinct sites of a Fock state; with unit filling it is 1
    g = build_preset("hex_strip", 1)
    series = compute_otoc_series(
        g,
        BoseHubbardParams(hopping=4.0, interaction=16.0),
        (1, 1, 1, 1, 1, 1),
        OperatorSitePair(0, 5),
        TimeGrid(np.array([0.0])),
    )
    assert series.values[0] == 1.0 + 0.0j
    assert series.decay()[0] == 0.0


def test_matches_dense_reference_free_bosons():
    # U = 0 keeps the dynamics cheap and nontrivial
    g = load_graph({"sites": 2, "edges": [[0, 1]]})
    params = BoseHubbardParams(hopping=1.0, interaction=0.0)
    grid = TimeGrid(np.linspace(0.0, 5.0, 41))
    series = compute_otoc_series(g, params, (1, 1), OperatorSitePair(0, 1), grid)
    ref = dense_otoc_series(g, (1, 1), 0, 1, params, grid.times(params.hopping))
    assert np.max(np.abs(series.values - ref)) < 1e-10


def test_matches_dense_reference_hexagon():
    g = build_preset("hex_strip", 1)
    params = BoseHubbardParams(hopping=4.0, interaction=16.0)
    grid = TimeGrid(np.linspace(0.0, 4.0, 17))
    series = compute_otoc_series(g, params, (1,) * 6, OperatorSitePair(0, 5), grid)
    ref = dense_otoc_series(g, (1,) * 6, 0, 5, params, grid.times(params.hopping))
    assert np.max(np.abs(series.values - ref)) < 1e-8


def test_hexagon_series_decays(hex1_series):
    # distant-pair OTOC on the hexagon: plateau near 1, then a sharp fall
    re = hex1_series.values.real
    assert re[0] == 1.0
    assert np.all(re[hex1_series.grid.jt <= 0.5] > 0.9)
    assert np.min(re) < 0.2
    assert hex1_series.hop_distance == 3
    assert not hex1_series.truncated


def test_otoc_table_columns(hex1_series):
    table = otoc_table(hex1_series)
    assert list(table) == ["jt", "re_otoc", "im_otoc", "abs_otoc"]
    np.testing.assert_array_equal(table["jt"], hex1_series.grid.jt)
    np.testing.assert_allclose(
        table["abs_otoc"], np.abs(hex1_series.values), atol=0
    )
    assert table["re_otoc"][0] == 1.0
    assert table["im_otoc"][0] == 0.0


def test_sector_set_reuse_matches_fresh_build(params):
    g = build_preset("hex_strip", 1)
    sectors = SectorSet.build(g, params, 6)
    grid = TimeGrid(np.linspace(0.0, 1.0, 5))
    a = compute_otoc_series(g, params, (1,) * 6, OperatorSitePair(0, 5), grid,
                            sectors=sectors)
    b = compute_otoc_series(g, params, (1,) * 6, OperatorSitePair(0, 5), grid)
    np.testing.assert_array_equal(a.values, b.values)


def test_sector_set_requires_two_bosons(params):
    g = load_graph({"sites": 2, "edges": [[0, 1]]})
    with pytest.raises(ValueError):
        SectorSet.build(g, params, 1)


def test_departure_time_synthetic():
    grid = TimeGrid(np.linspace(0.0, 1.0, 11))
    a = np.ones(11)
    b = np.ones(11)
    assert departure_time(grid, a, b) is None
    b2 = b.copy()
    b2[7:] = 0.9  # gap 0.1 > default threshold from jt = 0.7 on
    assert departure_time(grid, a, b2) == pytest.approx(0.7)
    assert departure_time(grid, a, b2, threshold=0.2) is None
    with pytest.raises(ValueError):
        departure_time(grid, a, np.ones(5))


def test_truncation_flag_propagates(params):
    g = build_preset("hex_strip", 1)
    grid = TimeGrid(np.array([0.0, 0.5]))
    series = compute_otoc_series(
        g, params, (1,) * 6, OperatorSitePair(0, 5), grid, n_max=2
    )
    assert series.truncated
    full = compute_otoc_series(g, params, (1,) * 6, OperatorSitePair(0, 5), grid)
    assert not full.truncated


def test_error_estimates_are_small_and_monotone(hex1_series):
    err = hex1_series.error_estimates
    assert np.all(err >= 0.0)
    assert err[0] == 0.0
    assert np.max(err) < 1e-6


def test_pair_validated_against_graph(params):
    g = build_preset("hex_strip", 1)
    grid = TimeGrid(np.array([0.0]))
    with pytest.raises(ValueError):
        compute_otoc_series(g, params, (1,) * 6, OperatorSitePair(0, 6), grid)
