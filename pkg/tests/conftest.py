import numpy as np
import pytest

from fbmlab import (
    CovarianceModel,
    TimeGrid,
    build_partition,
    construction_grid,
    sample_fbm,
)


@pytest.fixture(scope="session")
def model():
    # shared so the Cholesky factors are computed once per grid
    return CovarianceModel()


@pytest.fixture(scope="session")
def scheme():
    return build_partition(2.2, 3.0, 10, 0.7)


@pytest.fixture(scope="session")
def cgrid(scheme):
    return construction_grid(scheme)


@pytest.fixture(scope="session")
def fbm_path(cgrid, model):
    return sample_fbm(0.7, cgrid, 42, model)


@pytest.fixture(scope="session")
def uniform_grid():
    return TimeGrid.uniform(513)
