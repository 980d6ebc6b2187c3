import numpy as np
import pytest

from nccpa.scenario import ScenarioConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_config():
    """M=32, K=8, near-field range scaled to the 5.12 m Rayleigh distance."""
    return ScenarioConfig(num_antennas=32, num_uts=8, num_covariance_draws=200,
                          ut_distance_range=(1.0, 5.0), pilot_length=2, num_rate_trials=20)


def random_psd(rng, M, rank=None):
    rank = M if rank is None else rank
    A = (rng.standard_normal((M, rank)) + 1j * rng.standard_normal((M, rank))) / np.sqrt(2)
    return A @ A.conj().T / rank
