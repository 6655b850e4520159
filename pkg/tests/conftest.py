import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def rel_err(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def u_from_first_row(row):
    """Parameter vector whose ``T(u)`` has the given first row."""
    row = np.asarray(row, dtype=complex)
    return np.concatenate([[row[0].real / 2], row[1:].real, row[1:].imag])
