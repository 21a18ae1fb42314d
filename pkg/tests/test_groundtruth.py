import datetime as dt
import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaitspeed.groundtruth import (
    ClusterError,
    ClusterSplit,
    Component,
    DailyVelocity,
    LineWalk,
    VelocityEstimate,
    daily_mean,
    estimate_line_velocity,
    estimate_velocities,
    filter_two_sd,
    group_line_walks,
    qq_diagnostic,
    read_daily_csv,
    split_clusters,
    write_daily_csv,
)
from gaitspeed.ingest import AreaMotion, DayStream, LineElement, LineGeometry, SensorEvent, parse_timestamp

DAY = dt.date(2010, 3, 1)
T0 = parse_timestamp("2010-03-01T08:00:00.000Z")


def _walk(points):
    return LineWalk("P1", DAY, tuple((T0 + int(round(t * 1000)), x) for t, x in points))


def _mixture(seed, n=2000):
    rng = np.random.default_rng(seed)
    labels = rng.random(n) < 0.5
    v = np.where(labels, rng.normal(80.0, 10.0, n), rng.normal(0.0, 5.0, n))
    return v, labels


# ---------------------------------------------------------------------------
# line velocity


def test_exact_lines():
    assert estimate_line_velocity(_walk([(0, 0), (1, 1), (2, 2)])).velocity == pytest.approx(100.0, abs=1e-12)
    assert estimate_line_velocity(_walk([(0, 0), (2, 1), (4, 2), (6, 3)])).velocity == pytest.approx(50.0, abs=1e-12)


def test_jittered_slope_matches_normal_equations():
    rng = np.random.default_rng(2)
    for _ in range(20):
        x = np.array([0.0, 0.6, 1.2, 1.8])
        t = x / 0.9 + rng.uniform(-0.05, 0.05, 4)
        t = np.round(t, 3)  # millisecond timestamps
        A = np.column_stack([t - t[0], np.ones(4)])
        slope = np.linalg.solve(A.T @ A, A.T @ x)[0]
        got = estimate_line_velocity(_walk(list(zip(t - t[0], x)))).velocity
        assert got == pytest.approx(abs(slope) * 100.0, rel=1e-9)


def test_identical_timestamps_rejected():
    with pytest.raises(ValueError):
        estimate_line_velocity(_walk([(1, 0), (1, 1)]))
    with pytest.raises(ValueError):
        LineWalk("P1", DAY, ((T0, 0.0),))


@given(st.lists(st.tuples(st.integers(0, 20_000), st.floats(0, 5, allow_nan=False)), min_size=2, max_size=8))
def test_direction_invariance(points):
    ts = sorted(t for t, _ in points)
    if ts[0] == ts[-1]:
        return
    xs = [x for _, x in points]
    fwd = _walk([(t / 1000.0, x) for t, x in zip(ts, xs)])
    back = _walk([(t / 1000.0, 5.0 - x) for t, x in zip(ts, xs)])
    a = estimate_line_velocity(fwd).velocity
    b = estimate_line_velocity(back).velocity
    assert a == pytest.approx(b, rel=1e-9, abs=1e-9)
    assert estimate_velocities([fwd])[0].velocity == pytest.approx(a, rel=1e-9, abs=1e-9)


def test_group_line_walks():
    geo = LineGeometry((0.0, 0.6, 1.2, 1.8))
    ev = []
    for t, i in [(0.0, 0), (0.6, 1), (1.2, 2), (1.8, 3), (100.0, 3), (100.6, 2), (101.2, 1), (300, 0), (301, 2), (302, 1)]:
        ev.append(SensorEvent("P1", T0 + int(t * 1000), f"L{i}", LineElement(i, 9.9)))
    ev.insert(3, SensorEvent("P1", T0 + 1500, "M", AreaMotion("hall")))
    walks = group_line_walks(DayStream("P1", DAY, tuple(ev)), geo)
    assert [len(w.firings) for w in walks] == [4, 3, 2]
    assert [p for _, p in walks[0].firings] == [0.0, 0.6, 1.2, 1.8]
    assert [round(e.velocity, 6) for e in estimate_velocities(walks[:2])] == [100.0, 100.0]


# ---------------------------------------------------------------------------
# clustering


def test_mixture_recovery_single_seed():
    v, labels = _mixture(0)
    split = split_clusters(v, seed=0)
    assert abs(split.gait.mean - 80.0) <= 2.0 and abs(split.noise.mean) <= 2.0
    assert np.mean(split.is_gait != labels) < 0.01
    assert 0 < split.gait.weight < 1 and split.gait.weight + split.noise.weight == pytest.approx(1.0)


def test_ll_trace_monotone():
    v, _ = _mixture(1)
    tr = split_clusters(v, seed=3).ll_trace
    assert np.all(np.diff(tr) >= -1e-9 * np.abs(tr[1:]))


def test_too_few_and_degenerate():
    with pytest.raises(ClusterError):
        split_clusters(np.arange(19.0))
    with pytest.raises(ClusterError):
        split_clusters(np.full(50, 70.0))


def test_larger_mean_is_gait():
    rng = np.random.default_rng(5)
    v = np.concatenate([rng.normal(120, 8, 300), rng.normal(0, 4, 300)])
    for seed in range(5):
        s = split_clusters(v, seed=seed)
        assert s.gait.mean == pytest.approx(120, abs=2) and s.gait.mean > s.noise.mean


def test_order_invariance():
    v, _ = _mixture(7, n=500)
    perm = np.random.default_rng(1).permutation(v.size)
    a = split_clusters(v, seed=4)
    b = split_clusters(v[perm], seed=4)
    assert a.gait == b.gait and a.noise == b.noise
    assert np.array_equal(a.is_gait[perm], b.is_gait)


def test_filter_two_sd_boundaries():
    split = ClusterSplit(Component(0.0, 5.0, 0.5), Component(80.0, 10.0, 0.5), np.empty(0), np.empty(0), 0)
    ests = [VelocityEstimate("P1", DAY, v) for v in (100.0, 100.01, 60.0, 59.99, 0.3, -2.0, 81.0)]
    assert [e.velocity for e in filter_two_sd(split, ests)] == [100.0, 60.0, 81.0]


def test_filter_two_sd_matches_naive_and_refit_shrinks():
    v, _ = _mixture(2)
    ests = [VelocityEstimate("P1", DAY, float(x)) for x in v]
    split = split_clusters(v, seed=0)
    kept = filter_two_sd(split, ests)
    naive = []
    for e in ests:
        if split.gait.mean - 2 * split.gait.sd <= e.velocity <= split.gait.mean + 2 * split.gait.sd:
            naive.append(e)
    assert kept == naive
    again = filter_two_sd(split_clusters([e.velocity for e in kept], seed=0), kept)
    assert len(again) <= len(kept) and all(e in kept for e in again)


# ---------------------------------------------------------------------------
# daily means and Q-Q


def test_daily_mean_examples():
    (one,) = daily_mean([VelocityEstimate("P1", DAY, 73.0)])
    assert one == DailyVelocity("P1", DAY, 73.0, 1, 0.0)
    (three,) = daily_mean([VelocityEstimate("P1", DAY, v) for v in (70.0, 80.0, 90.0)])
    assert three.mean_velocity == 80.0 and three.n == 3 and three.sd == pytest.approx(10.0)


def test_daily_mean_thirty_days_matches_grouping():
    rng = np.random.default_rng(8)
    ests = []
    for _ in range(600):
        d = DAY + dt.timedelta(days=int(rng.integers(30)))
        ests.append(VelocityEstimate(str(rng.choice(["P1", "P2"])), d, float(rng.normal(80, 10))))
    out = daily_mean(ests)
    groups = {}
    for e in ests:
        groups.setdefault((e.participant, e.date), []).append(e.velocity)
    assert len(out) == len(groups)
    for row in out:
        vals = groups[(row.participant, row.date)]
        assert row.n == len(vals)
        assert row.mean_velocity == pytest.approx(sum(vals) / len(vals), rel=1e-12)
    buf = io.StringIO()
    write_daily_csv(out, buf)
    assert read_daily_csv(buf.getvalue()) == out


def test_qq_normal_and_heavy_tail():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        normal = qq_diagnostic(rng.normal(80, 10, 1000))
        heavy = qq_diagnostic(80 + 10 * rng.standard_t(2, 1000))
        assert normal.r_squared >= 0.99
        assert normal.r_squared > heavy.r_squared
        assert normal.slope == pytest.approx(10, rel=0.1) and normal.intercept == pytest.approx(80, abs=1.5)


def test_qq_matches_scipy_probplot():
    stats = pytest.importorskip("scipy.stats")
    x = np.random.default_rng(3).normal(0, 1, 50)
    q = qq_diagnostic(x)
    n = x.size
    ref = stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    assert np.allclose(q.theoretical, ref, atol=1e-12)
    r = np.corrcoef(ref, np.sort(x))[0, 1]
    assert q.r_squared == pytest.approx(r * r, rel=1e-12)


def test_qq_errors():
    with pytest.raises(ValueError):
        qq_diagnostic(np.arange(9.0))
    with pytest.raises(ValueError):
        qq_diagnostic(np.full(20, 3.0))
