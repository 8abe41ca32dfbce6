"""Shared fixtures: a reusable Brownian corpus so the slow tests build it once."""

import numpy as np
import pytest

from pathcalc import brownian_path

MASTER_SEED = 42
N_EXP = 16
N_PATHS = 200


@pytest.fixture(scope="session")
def brownian_corpus():
    """200 unit-horizon Brownian paths on the 2^16 dyadic grid, fixed seed."""
    return [brownian_path(MASTER_SEED, i, n_exp=N_EXP) for i in range(N_PATHS)]


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
