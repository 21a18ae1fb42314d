import datetime as dt
import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaitspeed import simulator
from gaitspeed.features import (
    ALL_KINDS,
    FeatureKind,
    Scaler,
    Window,
    apply_scaler,
    compute_feature,
    daily_features,
    fit_scaler,
    invert_scaler,
    parse_kind,
    percentile,
    read_features_csv,
    window_features,
    write_features_csv,
)
from gaitspeed.transitions import TransitionRecord
from oracles import naive_quantile

DAY = dt.date(2010, 3, 1)
finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_exactly_six_kinds():
    assert [k.value for k in ALL_KINDS] == ["P10", "P15", "P20", "Q1", "Mean", "Median"]
    assert parse_kind("p20") is FeatureKind.P20 and parse_kind("MEAN") is FeatureKind.MEAN
    with pytest.raises(ValueError):
        parse_kind("P30")


def test_percentile_examples():
    assert percentile([5.0], 0.37) == 5.0
    assert percentile([1, 2, 3, 4, 5], 0.5) == 3.0
    assert percentile(np.arange(1, 101), 0.2) == 20.8
    assert compute_feature(np.arange(1, 101), FeatureKind.P20) == 20.8
    assert compute_feature([2, 4, 6], FeatureKind.MEAN) == 4.0
    assert compute_feature([4, 1, 3, 2], FeatureKind.Q1) == 1.75
    assert compute_feature([4, 1, 3, 2], FeatureKind.MEDIAN) == 2.5


@pytest.mark.parametrize("p", [-0.01, 1.01, float("nan")])
def test_percentile_rejects_fraction(p):
    with pytest.raises(ValueError):
        percentile([1.0, 2.0], p)


def test_percentile_empty():
    with pytest.raises(ValueError):
        percentile([], 0.5)


def test_percentile_random_oracle():
    rng = np.random.default_rng(0)
    for _ in range(200):
        v = rng.lognormal(1.0, 0.8, 1000)
        for p in (0.10, 0.15, 0.20, 0.25):
            assert abs(percentile(v, p) - naive_quantile(v, p)) <= 1e-12


@given(st.lists(finite, min_size=1, max_size=30), st.floats(0, 1), st.floats(0, 1))
def test_percentile_monotone_in_p(values, p, q):
    lo, hi = sorted((p, q))
    assert percentile(values, lo) <= percentile(values, hi) + 1e-9 * (1 + max(abs(x) for x in values))


@given(st.lists(st.floats(0.1, 100, allow_nan=False), min_size=1, max_size=30),
       st.floats(-50, 50, allow_nan=False), st.sampled_from(ALL_KINDS))
def test_translation_equivariance(values, c, kind):
    base = compute_feature(values, kind)
    shifted = compute_feature(np.asarray(values) + c, kind)
    assert shifted == pytest.approx(base + c, abs=1e-9)


def _records(durations, pair=("a", "b"), day=DAY, pid="P1"):
    return [TransitionRecord(pid, day, pair[0], pair[1], float(d)) for d in durations]


def test_daily_features_min_count():
    recs = _records([3, 4, 5]) + _records([2, 9], pair=("b", "a"))
    samples = daily_features(recs)
    assert {s.pair for s in samples} == {("a", "b")}
    assert len(samples) == 6
    assert {s.kind: s.value for s in samples}[FeatureKind.MEAN] == 4.0


def test_kind_ordering_on_contaminated_simulation():
    res = simulator.simulate(simulator.default_config(p_dwell=0.5), 60, 3)
    recs = [TransitionRecord(t.participant, t.date, t.from_room, t.to_room, t.duration)
            for t in res.truth.records if t.duration <= 60]
    by_pair = {}
    for r in recs:
        by_pair.setdefault(r.pair, []).append(r.duration)
    checked = 0
    for durations in by_pair.values():
        if len(durations) < 200:
            continue
        vals = [compute_feature(durations, k) for k in
                (FeatureKind.P10, FeatureKind.P15, FeatureKind.P20, FeatureKind.Q1, FeatureKind.MEDIAN, FeatureKind.MEAN)]
        assert vals == sorted(vals)
        assert vals[-1] > vals[-2]  # mean above median for right-skewed durations
        checked += 1
    assert checked >= 4
    for s in daily_features(recs):
        assert s.value > 0


def test_window_features():
    recs = []
    for k in range(40):
        recs += _records([10 + k], day=DAY + dt.timedelta(days=k))
    center = DAY + dt.timedelta(days=20)
    samples = window_features(recs, {"P1": [center]}, 15)
    by_kind = {s.kind: s for s in samples}
    assert by_kind[FeatureKind.MEAN].scope == Window(center, 7)
    assert by_kind[FeatureKind.MEAN].value == pytest.approx(np.mean(np.arange(23, 38)))
    wide = {s.kind: s.value for s in window_features(recs, {"P1": [center]}, 30)}
    assert wide[FeatureKind.MEAN] == pytest.approx(np.mean(np.arange(15, 46)))
    assert window_features(recs, {"P1": [DAY - dt.timedelta(days=30)]}, 15) == []
    with pytest.raises(ValueError):
        window_features(recs, {}, 20)


def test_features_csv_round_trip():
    recs = _records([3, 4, 5, 6])
    samples = daily_features(recs) + window_features(recs * 3, {"P1": [DAY]}, 15)
    buf = io.StringIO()
    write_features_csv(samples, buf)
    assert read_features_csv(buf.getvalue()) == samples


# ---------------------------------------------------------------------------
# scaler


def test_scaler_endpoints_and_midpoint():
    s = fit_scaler([3.0, 7.0, 5.0])
    assert apply_scaler(s, 3.0) == -1.0 and apply_scaler(s, 7.0) == 1.0 and apply_scaler(s, 5.0) == 0.0
    assert apply_scaler(s, 9.0) == 2.0  # not clipped


def test_scaler_degenerate():
    with pytest.raises(ValueError):
        fit_scaler([2.0, 2.0])
    with pytest.raises(ValueError):
        Scaler(1.0, 1.0)


def test_scaler_round_trip():
    rng = np.random.default_rng(1)
    for _ in range(50):
        v = rng.lognormal(1, 1, 40)
        train, test = v[:30], v[30:]
        s = fit_scaler(train)
        assert np.all(np.abs(apply_scaler(s, train)) <= 1.0)
        for part in (train, test):
            assert np.allclose(invert_scaler(s, apply_scaler(s, part)), part, rtol=1e-12, atol=1e-12)


@given(st.lists(st.integers(0, 10**6), min_size=2, max_size=20, unique=True))
def test_scaler_strictly_increasing(ints):
    values = [i / 100.0 for i in ints]
    s = fit_scaler(values)
    scaled = apply_scaler(s, values)
    assert np.argmax(scaled) == np.argmax(values) and np.argmin(scaled) == np.argmin(values)
    order = np.argsort(values)
    assert np.all(np.diff(scaled[order]) > 0)
