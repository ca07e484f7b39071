"""Shared fixtures.

The hexagon OTOC series (462-dim sector, 201-point grid) takes a few
seconds and is reused by the fitting and acceptance tests, so it is
computed once per session.
"""

import numpy as np
import pytest

from hexotoc import (
    BoseHubbardParams,
    compute_otoc_series,
    default_grid,
    preset_entry,
)


@pytest.fixture(scope="session")
def params():
    # U/J = 4 at J = 4, the parameter point all reference runs use
    return BoseHubbardParams(hopping=4.0, interaction=16.0)


@pytest.fixture(scope="session")
def hex1_entry():
    return preset_entry("hex_strip", 1)


@pytest.fixture(scope="session")
def hex1_series(hex1_entry, params):
    return compute_otoc_series(
        hex1_entry.graph, params, (1,) * 6, hex1_entry.pair, default_grid()
    )


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260825)
