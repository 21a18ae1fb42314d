"""Transition-time summary features and the [-1, +1] feature scaler."""

import csv
import datetime as dt
import io
import math
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum

import numpy as np

MIN_DAILY_COUNT = 3
MIN_WINDOW_COUNT = 10
# window length in days -> half-width either side of the clinic date
WINDOW_HALF_WIDTH = {15: 7, 30: 15}


class FeatureKind(str, Enum):
    P10 = "P10"
    P15 = "P15"
    P20 = "P20"
    Q1 = "Q1"
    MEAN = "Mean"
    MEDIAN = "Median"


ALL_KINDS = tuple(FeatureKind)
_KIND_FRACTION = {
    FeatureKind.P10: 0.10,
    FeatureKind.P15: 0.15,
    FeatureKind.P20: 0.20,
    FeatureKind.Q1: 0.25,
    FeatureKind.MEDIAN: 0.50,
}


def parse_kind(label):
    for kind in FeatureKind:
        if kind.value.lower() == label.lower() or kind.name.lower() == label.lower():
            return kind
    raise ValueError(f"unknown feature kind {label!r}; expected one of {[k.value for k in FeatureKind]}")


@dataclass(frozen=True, order=True)
class Window:
    center: dt.date
    half_width: int

    def contains(self, day):
        return abs((day - self.center).days) <= self.half_width

    def __str__(self):
        return f"{self.center.isoformat()}/{self.half_width}"


@dataclass(frozen=True)
class FeatureSample:
    participant: str
    scope: object  # datetime.date for daily samples, Window for clinic windows
    pair: tuple
    kind: FeatureKind
    value: float

    def __post_init__(self):
        if not self.value > 0.0:
            raise ValueError(f"feature value must be positive seconds, got {self.value}")

    @property
    def scope_date(self):
        return self.scope.center if isinstance(self.scope, Window) else self.scope


def percentile(values, p):
    """Linear-interpolation quantile between the closest order statistics.

    With the sorted sample ``v`` and ``h = (n - 1) * p`` the result is
    ``v[floor(h)] + (h - floor(h)) * (v[floor(h) + 1] - v[floor(h)])``.
    """
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise ValueError(f"percentile fraction must lie in [0, 1], got {p}")
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise ValueError("percentile of an empty sample")
    return _interp_sorted(v, p)


def _interp_sorted(v, p):
    h = (v.size - 1) * p
    lo = math.floor(h)
    frac = h - lo
    if lo + 1 >= v.size or frac == 0.0:
        return float(v[lo])
    return float(v[lo] + frac * (v[lo + 1] - v[lo]))


def compute_feature(durations, kind):
    """Value of one feature kind over a set of transition durations (seconds)."""
    v = np.sort(np.asarray(durations, dtype=np.float64))
    if v.size == 0:
        raise ValueError("no durations to summarise")
    kind = FeatureKind(kind)
    if kind is FeatureKind.MEAN:
        return float(v.mean())
    return _interp_sorted(v, _KIND_FRACTION[kind])


def _summaries(durations, kinds):
    v = np.sort(np.asarray(durations, dtype=np.float64))
    out = {}
    for kind in kinds:
        out[kind] = float(v.mean()) if kind is FeatureKind.MEAN else _interp_sorted(v, _KIND_FRACTION[kind])
    return out


def daily_features(records, kinds=ALL_KINDS, min_count=MIN_DAILY_COUNT):
    """One sample per (participant, day, ordered pair, kind) with at least ``min_count`` records."""
    groups = defaultdict(list)
    for r in records:
        groups[(r.participant, r.date, r.from_room, r.to_room)].append(r.duration)
    samples = []
    for (pid, day, a, b), durations in sorted(groups.items()):
        if len(durations) < min_count:
            continue
        for kind, value in _summaries(durations, kinds).items():
            samples.append(FeatureSample(pid, day, (a, b), kind, value))
    return samples


def window_features(records, clinic_dates, window_days, kinds=ALL_KINDS, min_count=MIN_WINDOW_COUNT):
    """Features over windows centred on clinic dates.

    ``clinic_dates`` maps participant -> iterable of assessment dates.
    """
    if window_days not in WINDOW_HALF_WIDTH:
        raise ValueError(f"window length must be one of {sorted(WINDOW_HALF_WIDTH)}, got {window_days}")
    half = WINDOW_HALF_WIDTH[window_days]
    by_pair = defaultdict(list)
    for r in records:
        by_pair[(r.participant, r.from_room, r.to_room)].append((r.date, r.duration))
    samples = []
    for (pid, a, b), rows in sorted(by_pair.items()):
        days = np.array([d.toordinal() for d, _ in rows])
        secs = np.array([s for _, s in rows])
        for center in sorted(set(clinic_dates.get(pid, ()))):
            sel = np.abs(days - center.toordinal()) <= half
            if sel.sum() < min_count:
                continue
            scope = Window(center, half)
            for kind, value in _summaries(secs[sel], kinds).items():
                samples.append(FeatureSample(pid, scope, (a, b), kind, value))
    return samples


# ---------------------------------------------------------------------------
# feature scaling


@dataclass(frozen=True)
class Scaler:
    min: float
    max: float

    def __post_init__(self):
        if not self.max > self.min:
            raise ValueError(f"degenerate feature range [{self.min}, {self.max}]")

    def to_dict(self):
        return {"min": self.min, "max": self.max}


def fit_scaler(values):
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("cannot fit a scaler on no values")
    return Scaler(float(v.min()), float(v.max()))


def apply_scaler(scaler, value):
    """Map the fitted range onto [-1, +1]; values outside the range are not clipped."""
    return 2.0 * (np.asarray(value, dtype=np.float64) - scaler.min) / (scaler.max - scaler.min) - 1.0


def invert_scaler(scaler, scaled):
    return (np.asarray(scaled, dtype=np.float64) + 1.0) * (scaler.max - scaler.min) / 2.0 + scaler.min


# ---------------------------------------------------------------------------
# CSV

FEATURE_HEADER = ["participant", "scope", "from", "to", "kind", "seconds"]


def parse_scope(text):
    if "/" in text:
        center, half = text.split("/", 1)
        return Window(dt.date.fromisoformat(center), int(half))
    return dt.date.fromisoformat(text)


def write_features_csv(samples, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(FEATURE_HEADER)
    for s in samples:
        w.writerow([s.participant, str(s.scope) if isinstance(s.scope, Window) else s.scope.isoformat(),
                    s.pair[0], s.pair[1], s.kind.value, repr(float(s.value))])


def read_features_csv(fh):
    if isinstance(fh, (bytes, str)):
        fh = io.StringIO(fh.decode("utf-8") if isinstance(fh, bytes) else fh)
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None:
        return []
    if header != FEATURE_HEADER:
        raise ValueError(f"features CSV header must be {','.join(FEATURE_HEADER)}, got {','.join(header)}")
    out = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(FEATURE_HEADER):
            raise ValueError(f"line {lineno}: expected {len(FEATURE_HEADER)} fields, got {len(row)}")
        pid, scope, a, b, kind, secs = row
        out.append(FeatureSample(pid, parse_scope(scope), (a, b), parse_kind(kind), float(secs)))
    return out
