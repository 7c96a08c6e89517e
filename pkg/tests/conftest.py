import numpy as np
import pytest

from src.geometry.exactlaw import ModelParams


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(20240611)))


@pytest.fixture
def critical_params() -> ModelParams:
    return ModelParams.critical(d=1024, x=1.0)

