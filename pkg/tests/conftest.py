import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# numba compilation on first call can exceed hypothesis' default deadline
settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def gaussian_series(rng):
    from matcpd.core import MatrixSeries

    return MatrixSeries(rng.standard_normal((60, 3, 4)))
