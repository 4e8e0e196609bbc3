import numpy as np
import pytest

from mdnre import synthgen
from mdnre.core import TuningBank


def random_bank(rng, L, M, neutral=0, zero_prob=0.1):
    """Random unit directions with some exact zeros; neutral column all zero."""
    dirs = rng.standard_normal((L, M, 2))
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    dirs[rng.random((L, M)) < zero_prob] = 0.0
    dirs[:, neutral] = 0.0
    calib = rng.uniform(0.5, 2.0, M)
    calib[neutral] = 0.0
    return TuningBank(dirs, calib, tuple(f"c{m}" for m in range(M)), neutral)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def bfs():
    return synthgen.generate(synthgen.bfs_spec())[0]


@pytest.fixture(scope="session")
def bfs_pool(bfs):
    return bfs.subset(synthgen.bfs_training_split(bfs, "human"))


@pytest.fixture(scope="session")
def bfsl():
    return synthgen.generate(synthgen.bfsl_spec())[0]
