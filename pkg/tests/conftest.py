import numpy as np
import pytest

from syssampling import Population, forest_summary, moments_from_summary


@pytest.fixture
def pop4():
    """y = x = 1, 2, 3, 4; with n=2 the samples are {1, 3} and {2, 4}."""
    v = np.array([1.0, 2.0, 3.0, 4.0])
    return Population(v, v.copy())


@pytest.fixture
def forest():
    """Forest-block summary statistics with a common intraclass correlation of 0.5."""
    return moments_from_summary(forest_summary(0.5))
