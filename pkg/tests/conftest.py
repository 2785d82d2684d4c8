from __future__ import annotations

import numpy as np
import pytest

from covroc import Population, SamplePairs
from covroc.simulation import SimScenario, generate


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def model1_data() -> tuple[SamplePairs, SamplePairs]:
    """One n = m = 40 draw from the normal-noise benchmark model."""
    return generate(SimScenario("normal"), 7)


@pytest.fixture
def line_data() -> SamplePairs:
    z = np.linspace(0.0, 4.0, 21)
    return SamplePairs(z, 2.0 + 3.0 * z, Population.X)


def wls_intercept(z_obs, values, z0, p, h, kernel) -> float:
    """Normal-equations oracle: solve (X'WX) b = X'W y with raw (z_i - z0)^k columns."""
    d = np.asarray(z_obs, float) - z0
    w = kernel(d / h) / h
    X = np.vander(d, p + 1, increasing=True)
    A = X.T @ (w[:, None] * X)
    b = X.T @ (w * np.asarray(values, float))
    return float(np.linalg.solve(A, b)[0])
