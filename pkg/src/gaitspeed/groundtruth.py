"""Ground-truth gait velocity from sensor-line walks and clinic assessments.

Line walks are grouped from consecutive in-order element firings, turned into
speeds by a least-squares slope, cleaned by a two-component Gaussian mixture
(keeping the larger-mean cluster within two standard deviations), and
averaged per day.
"""

import csv
import datetime as dt
import io
import math
import statistics
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from . import kernels
from .ingest import ClinicWalk, LineElement, _text, local_date

DEFAULT_MAX_GAP = 90.0  # seconds between consecutive firings of one walk
MIN_CLUSTER_POINTS = 20
MIN_QQ_POINTS = 10
MAX_WALK_VELOCITY = 500.0  # cm/s; faster line estimates come from overlapping traversals
EM_SD_FLOOR = 1e-3
EM_RTOL = 1e-8
EM_MAX_ITER = 500
EM_RESTARTS = 10

DAILY_HEADER = ["participant", "date", "mean_cm_s", "n", "sd_cm_s"]
CLINIC_HEADER = ["participant", "date", "velocity_cm_s"]


class ClusterError(RuntimeError):
    pass


@dataclass(frozen=True)
class LineWalk:
    participant: str
    date: dt.date
    firings: tuple  # ((t_ms, position_m), ...) in time order

    def __post_init__(self):
        if len(self.firings) < 2:
            raise ValueError("a line walk needs at least two firings")


@dataclass(frozen=True)
class VelocityEstimate:
    participant: str
    date: dt.date
    velocity: float  # cm/s


@dataclass(frozen=True)
class Component:
    mean: float
    sd: float
    weight: float


@dataclass
class ClusterSplit:
    noise: Component
    gait: Component
    is_gait: np.ndarray  # per estimate, input order
    ll_trace: np.ndarray
    n_iter: int


@dataclass(frozen=True)
class DailyVelocity:
    participant: str
    date: dt.date
    mean_velocity: float
    n: int
    sd: float


@dataclass(frozen=True)
class QQResult:
    r_squared: float
    slope: float
    intercept: float
    theoretical: np.ndarray
    ordered: np.ndarray


@dataclass(frozen=True)
class ClinicTarget:
    participant: str
    date: dt.date
    velocity: float


# ---------------------------------------------------------------------------
# walks and speeds


def group_line_walks(day, geometry=None, max_gap=DEFAULT_MAX_GAP):
    """Split a day's line firings into walks.

    A walk is a run of consecutive line firings whose element indices move
    strictly in one direction, with no gap longer than ``max_gap`` seconds.
    When ``geometry`` is given positions come from it by index.
    """
    walks = []
    run = []
    direction = 0
    limit = max_gap * 1000.0

    def close():
        if len(run) >= 2:
            walks.append(LineWalk(day.participant, day.date, tuple((t, p) for t, _, p in run)))

    for e in day.events:
        kind = e.kind
        if not isinstance(kind, LineElement):
            continue
        if geometry is not None:
            if kind.index >= len(geometry):
                raise ValueError(f"line element index {kind.index} outside a {len(geometry)}-element line")
            pos = geometry.positions[kind.index]
        else:
            pos = kind.position
        if run:
            step = kind.index - run[-1][1]
            gap = e.t_ms - run[-1][0]
            same_way = step != 0 and (direction == 0 or (step > 0) == (direction > 0))
            if gap <= limit and same_way:
                direction = 1 if step > 0 else -1
                run.append((e.t_ms, kind.index, pos))
                continue
            close()
        run = [(e.t_ms, kind.index, pos)]
        direction = 0
    close()
    return walks


def estimate_line_velocity(walk):
    """Absolute least-squares slope of position on time, in cm/s."""
    t0 = walk.firings[0][0]
    t = np.array([(f[0] - t0) / 1000.0 for f in walk.firings])
    x = np.array([f[1] for f in walk.firings])
    if np.ptp(t) == 0.0:
        raise ValueError("all firings of the walk share one timestamp; slope undefined")
    tc = t - t.mean()
    slope = float(np.dot(tc, x - x.mean()) / np.dot(tc, tc))
    return VelocityEstimate(walk.participant, walk.date, abs(slope) * 100.0)


def estimate_velocities(walks):
    """Batch form of :func:`estimate_line_velocity`; walks with no time spread are dropped."""
    if not walks:
        return []
    sizes = [len(w.firings) for w in walks]
    starts = np.concatenate([[0], np.cumsum(sizes)])
    t = np.empty(starts[-1])
    pos = np.empty(starts[-1])
    for w, a in zip(walks, starts[:-1]):
        t0 = w.firings[0][0]
        for q, (tm, p) in enumerate(w.firings):
            t[a + q] = (tm - t0) / 1000.0
            pos[a + q] = p
    slopes = kernels.segment_slopes(t, pos, starts)
    return [VelocityEstimate(w.participant, w.date, abs(s) * 100.0) for w, s in zip(walks, slopes) if math.isfinite(s)]


# ---------------------------------------------------------------------------
# two-cluster split


def _kmeanspp_start(v, rng):
    # two seeds: one uniform draw, one drawn proportional to squared distance
    c0 = v[rng.integers(v.size)]
    d2 = (v - c0) ** 2
    c1 = v[rng.choice(v.size, p=d2 / d2.sum())]
    lo, hi = min(c0, c1), max(c0, c1)
    near_hi = np.abs(v - hi) < np.abs(v - lo)
    mu = np.empty(2)
    sd = np.empty(2)
    wt = np.empty(2)
    for c, mask in enumerate((~near_hi, near_hi)):
        part = v[mask]
        mu[c] = part.mean()
        sd[c] = max(part.std(), EM_SD_FLOOR)
        wt[c] = part.size / v.size
    return mu, sd, wt


def split_clusters(estimates, seed=0, max_iter=EM_MAX_ITER, rtol=EM_RTOL, sd_floor=EM_SD_FLOOR,
                   n_init=EM_RESTARTS):
    """Two-component 1-D Gaussian mixture by EM; the larger-mean component is gait.

    ``n_init`` seeded starts are run and the converged fit with the highest
    final log-likelihood is kept (first one on ties). Values are sorted
    before seeding so the result does not depend on input order.
    """
    v_in = np.array([e.velocity if isinstance(e, VelocityEstimate) else float(e) for e in estimates])
    if v_in.size < MIN_CLUSTER_POINTS:
        raise ClusterError(f"need at least {MIN_CLUSTER_POINTS} velocity estimates to cluster, got {v_in.size}")
    if not np.isfinite(v_in).all():
        raise ClusterError("velocity estimates must be finite")
    if np.ptp(v_in) == 0.0:
        raise ClusterError("all velocity estimates are identical; no two-cluster split exists")
    order = np.argsort(v_in, kind="stable")
    v = v_in[order]
    if n_init < 1:
        raise ValueError(f"n_init must be at least 1, got {n_init}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        mu0, sd0, w0 = _kmeanspp_start(v, rng)
        fit = kernels.em_fit(v, mu0, sd0, w0, sd_floor, rtol, max_iter)
        if fit[6] and (best is None or fit[3][-1] > best[3][-1]):
            best = fit
    if best is None:
        raise ClusterError(f"EM did not converge in {max_iter} iterations from any of {n_init} starts")
    mu, sd, wt, trace, resp, n_iter, _ = best
    g = int(np.argmax(mu))
    is_gait_sorted = resp[:, g] >= resp[:, 1 - g]
    is_gait = np.empty(v.size, dtype=bool)
    is_gait[order] = is_gait_sorted
    return ClusterSplit(
        noise=Component(float(mu[1 - g]), float(sd[1 - g]), float(wt[1 - g])),
        gait=Component(float(mu[g]), float(sd[g]), float(wt[g])),
        is_gait=is_gait,
        ll_trace=trace,
        n_iter=n_iter,
    )


def filter_two_sd(split, estimates):
    """Keep estimates within two gait-cluster standard deviations (boundary inclusive)."""
    bound = 2.0 * split.gait.sd
    return [e for e in estimates if abs(e.velocity - split.gait.mean) <= bound]


def daily_mean(retained):
    groups = defaultdict(list)
    for e in retained:
        groups[(e.participant, e.date)].append(e.velocity)
    out = []
    for (pid, day), vals in sorted(groups.items()):
        a = np.array(vals)
        sd = float(a.std(ddof=1)) if a.size > 1 else 0.0
        out.append(DailyVelocity(pid, day, float(a.mean()), int(a.size), sd))
    return out


def qq_diagnostic(values):
    """Normal Q-Q fit: order statistics against standard-normal quantiles at (i - 0.5)/n."""
    y = np.sort(np.asarray(values, dtype=np.float64))
    n = y.size
    if n < MIN_QQ_POINTS:
        raise ValueError(f"Q-Q diagnostic needs at least {MIN_QQ_POINTS} values, got {n}")
    if np.ptp(y) == 0.0:
        raise ValueError("constant sample: Q-Q correlation undefined")
    nd = statistics.NormalDist()
    q = np.array([nd.inv_cdf((i - 0.5) / n) for i in range(1, n + 1)])
    qc = q - q.mean()
    yc = y - y.mean()
    slope = float(np.dot(qc, yc) / np.dot(qc, qc))
    r = float(np.dot(qc, yc) / math.sqrt(np.dot(qc, qc) * np.dot(yc, yc)))
    return QQResult(r * r, slope, float(y.mean() - slope * q.mean()), q, y)


# ---------------------------------------------------------------------------
# per-participant pipeline


@dataclass
class ParticipantTruth:
    participant: str
    n_walks: int
    estimates: list
    split: ClusterSplit | None
    retained: list
    daily: list
    skipped: str | None = None


def ground_truth(days, geometry=None, seed=0, max_gap=DEFAULT_MAX_GAP):
    """Daily velocity targets per participant from day streams.

    Participants with too few walks to cluster are reported with a reason
    instead of raising. Estimates above ``MAX_WALK_VELOCITY`` are discarded
    before clustering.
    """
    walks = defaultdict(list)
    for day in days:
        walks[day.participant].extend(group_line_walks(day, geometry, max_gap))
    out = {}
    for pid in sorted(walks):
        est = [e for e in estimate_velocities(walks[pid]) if e.velocity <= MAX_WALK_VELOCITY]
        try:
            split = split_clusters(est, seed=seed)
        except ClusterError as exc:
            out[pid] = ParticipantTruth(pid, len(walks[pid]), est, None, [], [], skipped=str(exc))
            continue
        kept = filter_two_sd(split, est)
        out[pid] = ParticipantTruth(pid, len(walks[pid]), est, split, kept, daily_mean(kept))
    return out


def clinic_targets(events, tz_offset=0):
    out = []
    for e in events:
        if isinstance(e.kind, ClinicWalk):
            out.append(ClinicTarget(e.participant, local_date(e.t_ms, tz_offset), e.kind.velocity))
    return sorted(out, key=lambda c: (c.participant, c.date))


# ---------------------------------------------------------------------------
# CSV


def write_daily_csv(rows, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(DAILY_HEADER)
    for r in rows:
        w.writerow([r.participant, r.date.isoformat(), repr(r.mean_velocity), r.n, repr(r.sd)])


def read_daily_csv(data):
    reader = csv.reader(io.StringIO(_text(data)))
    header = next(reader, None)
    if header is None:
        return []
    if header != DAILY_HEADER:
        raise ValueError(f"daily velocity CSV header must be {','.join(DAILY_HEADER)}, got {','.join(header)}")
    out = []
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            pid, day, mean, n, sd = row
            out.append(DailyVelocity(pid, dt.date.fromisoformat(day), float(mean), int(n), float(sd)))
        except ValueError as exc:
            raise ValueError(f"line {line}: {exc}") from None
    return out


def write_clinic_csv(rows, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CLINIC_HEADER)
    for r in rows:
        w.writerow([r.participant, r.date.isoformat(), repr(r.velocity)])


def read_clinic_csv(data):
    reader = csv.reader(io.StringIO(_text(data)))
    header = next(reader, None)
    if header is None:
        return []
    if header != CLINIC_HEADER:
        raise ValueError(f"clinic CSV header must be {','.join(CLINIC_HEADER)}, got {','.join(header)}")
    out = []
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            pid, day, vel = row
            out.append(ClinicTarget(pid, dt.date.fromisoformat(day), float(vel)))
        except ValueError as exc:
            raise ValueError(f"line {line}: {exc}") from None
    return out


def write_qq_csv(participant, qq, fh, header=True):
    w = csv.writer(fh, lineterminator="\n")
    if header:
        w.writerow(["participant", "normal_quantile", "velocity_cm_s"])
    for q, y in zip(qq.theoretical, qq.ordered):
        w.writerow([participant, repr(float(q)), repr(float(y))])
