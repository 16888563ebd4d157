import numpy as np
import pytest
from loguru import logger

from ere.core.data import Dataset
from ere.core.glm import GlmFamily
from ere.enums import FamilyKind


@pytest.fixture(autouse=True)
def quiet_logger():
    logger.remove()
    yield


@pytest.fixture
def gaussian() -> GlmFamily:
    return GlmFamily(FamilyKind.GAUSSIAN)


@pytest.fixture
def logistic() -> GlmFamily:
    return GlmFamily(FamilyKind.LOGISTIC)


def linear_data(seed: int, n: int, beta: list[float], *, noise: float = 1.0, intercept: bool = False) -> Dataset:
    """Гауссовская выборка с независимыми стандартными ковариатами."""
    rng = np.random.default_rng(seed)
    beta = np.asarray(beta, dtype=float)
    X = rng.standard_normal((n, beta.size))
    y = X @ beta + noise * rng.standard_normal(n)
    return Dataset(X=X, y=y, intercept=intercept)
