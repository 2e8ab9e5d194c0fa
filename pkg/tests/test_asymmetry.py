import numpy as np
import pytest

from conftest import TUPLE_2D, random_bumps
from gnsstab import gridfn
from gnsstab.asymmetry import (
    AffineRestriction,
    SearchConfig,
    asymmetry,
    reflection_distance,
    relative_asymmetry,
)
from gnsstab.errors import DomainError, ParameterError, ShapeError
from gnsstab.gnscore import make_params
from gnsstab.gridfn import GridFunction, Hyperplane
from gnsstab.radialopt import eval_witness

P2 = make_params(*TUPLE_2D)
T = GridFunction.on_box((96, 96), 6.0)
FAST = SearchConfig(restarts=2, budget=400)


@pytest.mark.parametrize("a,b,x0", [(1.0, 1.0, (0.0, 0.0)), (1.7, 1.3, (0.41, -0.29)), (0.6, 0.8, (-1.1, 0.7))])
def test_recovers_witness(model_2d, a, b, x0):
    u = eval_witness(model_2d.witness(a, b, x0), T)
    res = asymmetry(u, P2, model_2d, FAST)
    assert res.lambda_value <= 1e-4
    assert res.witness.b == pytest.approx(b, rel=1e-2)
    assert np.max(np.abs(np.array(res.witness.x0) - x0)) <= T.spacing[0]
    assert res.witness.a == pytest.approx(a, rel=1e-2)
    assert res.constraint_residual < 1e-12


def test_scale_invariance_and_range(model_2d):
    rng = np.random.default_rng(3)
    u = random_bumps(T, rng)
    lam = asymmetry(u, P2, model_2d, FAST).lambda_value
    assert 0 < lam <= 2**P2.q
    assert asymmetry(u * 3.5, P2, model_2d, FAST).lambda_value == pytest.approx(lam, rel=1e-6, abs=1e-10)


def test_restriction_can_only_increase(model_2d):
    u = eval_witness(model_2d.witness(1.0, 1.0, (0.75, 0.0)), T)
    free = asymmetry(u, P2, model_2d, FAST).lambda_value
    pinned = relative_asymmetry(u, AffineRestriction.origin(2), P2, model_2d, FAST)
    assert pinned.lambda_value > free + 1e-3
    assert pinned.witness.x0 == (0.0, 0.0)
    half = relative_asymmetry(u, AffineRestriction({1: 0.0}), P2, model_2d, FAST)
    assert half.lambda_value <= 1e-4 and half.witness.x0[1] == 0.0


def test_box_boundary_is_reported(model_2d):
    u = eval_witness(model_2d.witness(1.0, 3.0), T)
    with pytest.warns(RuntimeWarning, match="boundary"):
        res = asymmetry(u, P2, model_2d, SearchConfig(restarts=0, b_min=0.5, b_max=2.0))
    assert res.at_box_boundary and res.lambda_value > 1e-3


def test_input_errors(model_2d, model_3d):
    with pytest.raises(DomainError):
        asymmetry(T, P2, model_2d)
    with pytest.raises(ParameterError):
        asymmetry(T, P2, model_3d)
    with pytest.raises(ShapeError):
        asymmetry(GridFunction.on_box((8, 8, 8), 2.0), P2, model_2d)
    with pytest.raises(ShapeError):
        relative_asymmetry(random_bumps(T, np.random.default_rng(0)), AffineRestriction({5: 0.0}), P2, model_2d)


def test_search_config_round_trip(tmp_path):
    cfg = SearchConfig(restarts=3, budget=50, b_min=0.1, b_max=10.0, seed=9, tol=1e-5)
    path = tmp_path / "cfg.json"
    path.write_text(cfg.to_json())
    assert SearchConfig.load(path) == cfg
    for bad in ({"restarts": -1}, {"b_min": 2.0, "b_max": 1.0}, {"tol": 0.0}, {"budget": 0}):
        with pytest.raises(ParameterError):
            SearchConfig(**bad)


def test_seeded_search_is_deterministic(model_2d):
    u = random_bumps(T, np.random.default_rng(5))
    cfg = SearchConfig(restarts=3, seed=11)
    assert asymmetry(u, P2, model_2d, cfg).lambda_value == asymmetry(u, P2, model_2d, cfg).lambda_value


def test_reflection_distance():
    u = T.with_values(np.exp(-T.radius_squared((0.5, 0.0))))
    assert reflection_distance(u, Hyperplane.axis_plane(1), 3.0) == 0.0
    assert reflection_distance(u, Hyperplane.axis_plane(0), 3.0) > 0.1
    with pytest.raises(ShapeError):
        reflection_distance(u, Hyperplane.axis_plane(0, 0.01), 3.0)
    moved = gridfn.reflect(u, Hyperplane.axis_plane(0))
    assert reflection_distance(u, Hyperplane.axis_plane(0), 3.0) == pytest.approx(gridfn.lr_power(moved - u, 3.0))
