import numpy as np
import pytest

from surfsim import LeafConfig, LeafPool, TableDist, simulate

from helpers import build_corpus


@pytest.fixture(scope="session")
def corpus():
    """200 small trajectories spanning regimes, configs, and k in {2, 3}."""
    return build_corpus(200)


@pytest.fixture(scope="session")
def small_corpus():
    return build_corpus(24)


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # compile the jitted kernels once so per-test timings stay honest
    pool = LeafPool(LeafConfig.IID_UNIFORM, 1)
    simulate(TableDist((1.0,)), 2, 4, pool, 1)
