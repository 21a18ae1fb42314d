import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaitspeed import svr
from gaitspeed.features import Scaler
from gaitspeed.svr import (
    DEFAULT_C_GRID,
    SvrConvergenceError,
    SvrModel,
    SvrParams,
    TrainingSet,
    dual_objective,
    epsilon_loss,
    grid_search_C,
    kkt_violation,
    predict,
    primal_objective,
    slacks,
    train,
)
from oracles import oracle_predictions, random_svr_instances, svr_dual_oracle, svr_primal_oracle


def _model(w, b, C=1.0, eps=0.1, n=0):
    return SvrModel(w=w, b=b, alphas=np.zeros((n, 2)), params=SvrParams(C=C, epsilon=eps))


# ---------------------------------------------------------------------------
# loss and objective


def test_loss_examples():
    assert epsilon_loss(0.05, 0.1) == 0.0
    assert epsilon_loss(-0.3, 0.1) == pytest.approx(0.2, abs=1e-15)
    assert epsilon_loss(0.1, 0.1) == 0.0 and epsilon_loss(-0.1, 0.1) == 0.0
    assert np.array_equal(epsilon_loss(np.array([0.0, 2.0]), 0.5), [0.0, 1.5])
    with pytest.raises(ValueError):
        epsilon_loss(1.0, -0.1)


@given(st.floats(-1e3, 1e3, allow_nan=False), st.floats(0, 10, allow_nan=False))
def test_loss_shape(r, eps):
    loss = epsilon_loss(r, eps)
    assert loss >= 0.0
    if abs(r) <= eps:
        assert loss == 0.0
    else:
        assert loss == abs(r) - eps
    # continuity at the tube edge: the nearest floats either side of eps give ~0
    assert epsilon_loss(np.nextafter(eps, math.inf), eps) <= 4 * np.finfo(float).eps * max(eps, 1.0)


def test_primal_objective_examples():
    y = np.array([1.0, 1.05, 0.97])
    data = TrainingSet(np.array([-1.0, 0.0, 1.0]), y)
    assert primal_objective(_model(0.0, float(y.mean())), data) == 0.0
    # hand computation: w = 1, b = 0, residuals (2, 0.05, -0.03), eps 0.1, C 2
    # 0.5 * 1 + 2 * (1.9 + 0.95 + 0) = 6.2
    assert primal_objective(_model(1.0, 0.0, C=2.0), data) == pytest.approx(6.2, abs=1e-12)


@given(st.floats(-10, 10), st.floats(-10, 10), st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=2, max_size=10))
def test_primal_nonnegative(w, b, pts):
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    m = _model(w, b)
    data = TrainingSet(x, y)
    assert primal_objective(m, data) >= 0.0
    xi, xi_star = slacks(m, data)
    assert np.all(xi >= 0) and np.all(xi_star >= 0) and np.all(xi * xi_star == 0)


# ---------------------------------------------------------------------------
# training


def test_realizable_line_stays_in_tube():
    x = np.linspace(-1, 1, 21)
    data = TrainingSet(x, 2 * x + 1)
    m = train(data, SvrParams(C=1000.0, epsilon=0.1))
    r = np.abs(data.y - m.decision(x))
    assert r.max() <= 0.1 + 1e-6
    # the tube lets w shrink by at most eps / max|x| from the true slope
    assert 2.0 - 0.1 - 1e-6 <= m.w <= 2.0 + 1e-9
    m.scaler = Scaler(-1.0, 1.0)
    assert abs(predict(m, 0.5) - 2.0) <= 0.1 + 1e-6


def test_tiny_C_gives_flat_model():
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, 30)
    data = TrainingSet(x, 3 * x + rng.normal(0, 0.1, 30))
    m = train(data, SvrParams(C=1e-9))
    assert abs(m.w) < 1e-7
    assert np.ptp(m.decision(x)) < 1e-6


def test_degenerate_and_invalid_inputs():
    with pytest.raises(ValueError):
        train(TrainingSet(np.ones(5), np.arange(5.0)), SvrParams())
    with pytest.raises(ValueError):
        TrainingSet(np.array([1.0]), np.array([2.0]))
    with pytest.raises(ValueError):
        TrainingSet(np.array([1.0, np.nan]), np.array([2.0, 3.0]))
    for bad in ({"C": 0}, {"epsilon": -1}, {"tolerance": 0}, {"max_iter": 0}):
        with pytest.raises(ValueError):
            SvrParams(**bad)


def test_max_iter_error_carries_violation():
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, 200)
    with pytest.raises(SvrConvergenceError) as info:
        train(TrainingSet(x, x + rng.normal(0, 1, 200)), SvrParams(C=64.0, max_iter=3))
    assert info.value.violation >= 1e-6 and "KKT violation" in str(info.value)


def test_small_instances_match_dense_oracle():
    inst = random_svr_instances(12, 4, seed=42)
    dual, w_oracle = svr_dual_oracle(inst, 0.1)
    for (x, y, C), d, wo in zip(inst, dual, w_oracle):
        data = TrainingSet(x, y)
        m = train(data, SvrParams(C=C, epsilon=0.1))
        assert abs(dual_objective(m, data) - d) <= 1e-6
        w, lo, hi, wx = oracle_predictions(x, y, C, 0.1, x)
        assert abs(m.w - w) <= 1e-5
        b_ref = min(max(m.b, lo), hi)
        assert np.abs(m.decision(x) - (wx + b_ref)).max() <= 1e-5


@st.composite
def instances(draw):
    n = draw(st.integers(2, 25))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, n)
    y = draw(st.floats(-3, 3)) * x + rng.normal(0, draw(st.floats(0.01, 2)), n)
    C = 2.0 ** draw(st.integers(-5, 15))
    eps = draw(st.sampled_from([0.0, 0.05, 0.1, 0.5]))
    return TrainingSet(x, y), SvrParams(C=C, epsilon=eps)


@given(instances())
def test_kkt_gap_and_invariants(inst):
    data, params = inst
    m = train(data, params)
    a, a_star = m.alphas[:, 0], m.alphas[:, 1]
    assert np.all(a >= 0) and np.all(a <= params.C) and np.all(a_star >= 0) and np.all(a_star <= params.C)
    assert np.abs(a * a_star).max() <= 1e-9 * params.C ** 2
    assert abs(np.sum(a - a_star)) <= 1e-9 * params.C * len(data)
    assert m.w == pytest.approx(float(np.dot(a - a_star, data.x)), abs=1e-9 * max(1.0, abs(m.w)))
    assert kkt_violation(m, data) < 1e-6
    p, d = primal_objective(m, data), dual_objective(m, data)
    assert p - d <= 1e-4 * (1 + abs(p))
    assert p - d >= -1e-9 * (1 + abs(p))


@given(st.integers(2, 30), st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 1000))
def test_tube_property(n, slope, icpt, seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, n)
    y = slope * x + icpt + rng.uniform(-0.05, 0.05, n)
    m = train(TrainingSet(x, y), SvrParams(C=2.0 ** 15, epsilon=0.1))
    assert np.abs(y - m.decision(x)).max() <= 0.1 + 1e-6


def test_determinism_bit_identical():
    rng = np.random.default_rng(5)
    x = rng.uniform(-1, 1, 80)
    data = TrainingSet(x, x + rng.normal(0, 0.3, 80))
    a = train(data, SvrParams(C=32.0))
    b = train(data, SvrParams(C=32.0))
    assert a.w == b.w and a.b == b.b and np.array_equal(a.alphas, b.alphas)


def test_warm_start_reaches_same_optimum():
    rng = np.random.default_rng(6)
    x = rng.uniform(-1, 1, 60)
    data = TrainingSet(x, 0.5 * x + rng.normal(0, 0.5, 60))
    cold = train(data, SvrParams(C=256.0))
    warm = train(data, SvrParams(C=256.0), warm_start=train(data, SvrParams(C=8.0)))
    assert dual_objective(warm, data) == pytest.approx(dual_objective(cold, data), abs=1e-6 * 256)
    assert warm.w == pytest.approx(cold.w, abs=1e-5)


def test_matches_primal_oracle_on_larger_sets():
    rng = np.random.default_rng(7)
    for _ in range(5):
        n = 40
        x = rng.uniform(-1, 1, n)
        y = rng.normal(0, 1, n) + x
        C = 4.0
        m = train(TrainingSet(x, y), SvrParams(C=C))
        val, w, _ = svr_primal_oracle(x, y, C, 0.1)
        assert primal_objective(m, TrainingSet(x, y)) == pytest.approx(val, rel=1e-7, abs=1e-9)
        assert m.w == pytest.approx(w, abs=1e-5)


def test_agrees_with_sklearn_linear_svr():
    sk = pytest.importorskip("sklearn.svm")
    rng = np.random.default_rng(8)
    x = rng.uniform(-1, 1, 50)
    y = 1.5 * x + rng.normal(0, 0.4, 50)
    ref = sk.SVR(kernel="linear", C=4.0, epsilon=0.1, tol=1e-10).fit(x[:, None], y)
    m = train(TrainingSet(x, y), SvrParams(C=4.0))
    assert m.w == pytest.approx(float(ref.coef_[0, 0]), abs=1e-4)
    assert np.abs(m.decision(x) - ref.predict(x[:, None])).max() < 1e-3


# ---------------------------------------------------------------------------
# prediction, persistence, grid search


def test_predict_examples():
    m = _model(0.0, 3.5)
    m.scaler = Scaler(0.0, 10.0)
    assert predict(m, 123.0) == 3.5
    m = _model(2.0, 1.0)
    m.scaler = Scaler(0.0, 10.0)
    xs = np.linspace(0, 20, 9)
    assert np.all(np.diff(predict(m, xs)) > 0)
    with pytest.raises(ValueError):
        predict(_model(1.0, 0.0), 1.0)


def test_fit_standardises_and_round_trips_json():
    rng = np.random.default_rng(9)
    x_raw = rng.uniform(3, 9, 40)
    y = 120 - 5 * x_raw + rng.normal(0, 2, 40)
    m = svr.fit(x_raw, y, SvrParams(C=8.0))
    back = SvrModel.from_json(m.to_json())
    assert np.array_equal(predict(back, x_raw), predict(m, x_raw))
    doc = m.to_dict()
    assert {"w", "b", "alphas", "scaler", "params", "target_standardizer"} <= set(doc)
    assert svr.rmse(predict(m, x_raw), y) < 3.0


def test_default_grid():
    assert len(DEFAULT_C_GRID) == 11
    assert DEFAULT_C_GRID[0] == 2.0 ** -5 and DEFAULT_C_GRID[-1] == 2.0 ** 15
    assert all(b / a == 4.0 for a, b in zip(DEFAULT_C_GRID, DEFAULT_C_GRID[1:]))


def test_grid_single_element_and_empty():
    rng = np.random.default_rng(10)
    x = rng.uniform(0, 1, 20)
    assert grid_search_C(x, 2 * x + 1, grid=(8.0,)).best_C == 8.0
    with pytest.raises(ValueError):
        grid_search_C(x, x, grid=())


def test_grid_cv_curve_on_toy_line():
    rng = np.random.default_rng(11)
    x = rng.uniform(-1, 1, 100)
    y = 2 * x + 1 + rng.normal(0, 0.05, 100)
    res = grid_search_C(x, y, folds=5, seed=0)
    curve = [res.cv_rmse[c] for c in sorted(res.cv_rmse)]
    assert all(b <= a + 1e-3 for a, b in zip(curve, curve[1:]))
    assert curve[-1] == pytest.approx(curve[-2], rel=1e-3)
    assert res.best_C == min(c for c in res.cv_rmse if res.cv_rmse[c] == min(curve))


def test_grid_tie_goes_to_smaller_C():
    x = np.linspace(0, 1, 10)
    y = np.full(10, 5.0)
    res = grid_search_C(x, y, grid=(4.0, 1.0, 16.0))
    assert set(res.cv_rmse.values()) == {0.0} and res.best_C == 1.0
