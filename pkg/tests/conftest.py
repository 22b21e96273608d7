import numpy as np
import pytest

from gainkf import NoiseSpec, ssm


@pytest.fixture
def linear2(scope="session"):
    """Canonical 2x2 linear system with exchange observations."""
    return ssm.linear_model(ssm.canonical_F(2), ssm.exchange_H(2))


@pytest.fixture
def noise_20db():
    return NoiseSpec.from_db(20.0, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
