import numpy as np
import pytest

from matchcast.data import build_season
from matchcast.selftest import simulate_played_season


@pytest.fixture
def rng():
    return np.random.default_rng(2014)


@pytest.fixture
def small_season(rng):
    """Fully played 4-team double round robin (6 rounds, 12 matches)."""
    return simulate_played_season([f"t{k}" for k in range(4)], 2014, rng)


@pytest.fixture
def mid_season(rng):
    """Fully played 6-team double round robin (10 rounds, 30 matches)."""
    return simulate_played_season([f"t{k}" for k in range(6)], 2014, rng)


@pytest.fixture
def two_seasons(rng):
    teams = [f"t{k}" for k in range(6)]
    return [
        simulate_played_season(teams, 2013, rng),
        simulate_played_season(teams, 2014, rng),
    ]


def make_season(records):
    return build_season(records)
