import numpy as np
import pytest

from acquimech import paper_registry


@pytest.fixture(scope="session")
def registry():
    return paper_registry()


@pytest.fixture(scope="session")
def example1(registry):
    return registry["example1"]


@pytest.fixture(scope="session")
def example1_matrix():
    from acquimech.experiments import EXAMPLE1_ACQUIRING_MATRIX
    return np.array(EXAMPLE1_ACQUIRING_MATRIX)
