import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from paucopt.dataset import BinaryDataset, SyntheticSpec, generate_synthetic

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synth_50_500():
    return generate_synthetic(SyntheticSpec(n_pos=50, n_neg=500, d=2, separation=4.0,
                                            noise=1.0, seed=0))


@pytest.fixture
def toy_2x3():
    pos = np.array([[1.0, 0.5], [-0.3, 1.2]])
    neg = np.array([[0.2, -0.7], [-1.1, 0.4], [0.6, 0.9]])
    return BinaryDataset(pos, neg, source="toy-2x3")


def random_binary(rng, n_pos, n_neg, d, scale=1.0):
    return BinaryDataset(scale * rng.standard_normal((n_pos, d)),
                         scale * rng.standard_normal((n_neg, d)) + 0.5)
