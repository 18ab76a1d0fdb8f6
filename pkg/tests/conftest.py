import numpy as np
import pytest

from gmlangevin.mixture import GaussianComponent, MixtureModel


def make_synthetic(dim: int, mean_scale: float = 1.0) -> MixtureModel:
    """0.2 N(0, 3I) + 0.4 N(+s*1, I) + 0.4 N(-s*1, I) in the given dimension.

    mean_scale=1 is the standard three-mode benchmark; mean_scale=0.4 gives
    the well-separated variant whose means sit inside the trapping bounds.
    """
    comps = (
        GaussianComponent(np.zeros(dim), 3.0),
        GaussianComponent(np.full(dim, mean_scale), 1.0),
        GaussianComponent(np.full(dim, -mean_scale), 1.0),
    )
    return MixtureModel(dim, comps, np.array([0.2, 0.4, 0.4]))


@pytest.fixture
def synthetic2() -> MixtureModel:
    return make_synthetic(2)


@pytest.fixture
def synthetic100() -> MixtureModel:
    return make_synthetic(100)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
