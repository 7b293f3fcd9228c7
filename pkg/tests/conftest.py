import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ssbsl.bayes import ClassPosteriorState, accumulate_stats, update_posterior  # noqa: E402

DATA_DIR = Path(__file__).parent / "data"


def random_state(rng: np.random.Generator, num_classes: int, dim: int, n_data: int = 20) -> ClassPosteriorState:
    """A posterior obtained by updating a random prior with random data."""
    a = rng.normal(size=(dim, dim))
    w_inv = a @ a.T + dim * np.eye(dim)
    prior = ClassPosteriorState.shared_prior(
        m=rng.normal(size=dim),
        beta=rng.uniform(0.5, 3.0),
        nu=dim + rng.uniform(1.0, 4.0),
        w_inv=w_inv,
        alpha=rng.uniform(0.5, 3.0, size=num_classes),
    )
    x = rng.normal(scale=2.0, size=(n_data, dim))
    y = rng.integers(0, num_classes, size=n_data)
    return update_posterior(prior, accumulate_stats(x, y, num_classes, dim))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
