import numpy as np
import pytest

from setquery.filters import FilterCache


@pytest.fixture(scope="session")
def filter_cache():
    """One shared cache so expensive windows build once per test session."""
    return FilterCache()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240901)


def complex_vector(rng, n, scale=1.0):
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
