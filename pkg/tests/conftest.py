import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gframeloc import GFrame, IndexSet  # noqa: E402


def complex_normal(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_frame(rng, count=12, n=8, index_set=None):
    if index_set is None:
        index_set = IndexSet.line(count)
    return GFrame(index_set, complex_normal(rng, (len(index_set), n, n)))


def low_rank(rng, rows, cols, rank):
    return complex_normal(rng, (rows, rank)) @ complex_normal(rng, (rank, cols))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
