import numpy as np
import pytest

from eca.config import config_default
from eca.dataset import benchmark_spec, render_synthetic


@pytest.fixture
def cfg():
    return config_default()


@pytest.fixture(scope="session")
def clean_frame():
    """One deterministic clean synthetic frame with its ground truth circle."""
    rng = np.random.default_rng(7)
    spec = benchmark_spec("clean", rng, 640, 480)
    frame, annotation = render_synthetic(spec, rng_seed=123)
    return frame, annotation.area
