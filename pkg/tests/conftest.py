import numpy as np
import pytest

from gnsstab.gnscore import make_params
from gnsstab.gridfn import GridFunction
from gnsstab.radialopt import OptimizerModel, minimize_radial

TUPLE_2D = (2, 1.5, 1.5, 3)
TUPLE_2D_S1 = (2, 1.5, 1.0, 3)
TUPLE_3D = (3, 2, 2, 4)


def _model(tup, resolution=2048):
    params = make_params(*tup)
    return OptimizerModel.from_solution(params, minimize_radial(params, resolution=resolution), 0)


@pytest.fixture(scope="session")
def model_2d():
    return _model(TUPLE_2D)


@pytest.fixture(scope="session")
def model_2d_s1():
    return _model(TUPLE_2D_S1)


@pytest.fixture(scope="session")
def model_3d():
    return _model(TUPLE_3D)


def random_bumps(template: GridFunction, rng, max_bumps=3, spread=2.0):
    """Sum of 1..max_bumps positive Gaussians with random centers, widths and heights."""
    vals = np.zeros(template.shape)
    for _ in range(int(rng.integers(1, max_bumps + 1))):
        c = rng.uniform(-spread, spread, template.dim)
        w = rng.uniform(0.6, 1.6)
        vals += rng.uniform(0.3, 1.5) * np.exp(-template.radius_squared(c) / w**2)
    return template.with_values(vals)


def symmetric_bumps(template: GridFunction, rng):
    """Random positive function symmetric under every coordinate reflection."""
    vals = np.zeros(template.shape)
    for _ in range(int(rng.integers(1, 3))):
        c = np.abs(rng.uniform(0.0, 2.0, template.dim))
        w = rng.uniform(0.6, 1.4)
        amp = rng.uniform(0.3, 1.5)
        for signs in np.ndindex(*(2,) * template.dim):
            s = np.where(np.array(signs) == 0, 1.0, -1.0)
            vals += amp * np.exp(-template.radius_squared(s * c) / w**2)
    return template.with_values(vals)
