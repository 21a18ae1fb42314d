"""Cross-validated RMSE per (participant, room pair, feature kind) and cohort summaries."""

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import svr
from .features import ALL_KINDS, WINDOW_HALF_WIDTH, FeatureKind, Window
from .splits import kfold_split, train_indices

__all__ = [
    "EvalCell", "SkippedCell", "EvalReport", "PopulationReport", "LineFit",
    "kfold_split", "cross_validate", "join_samples", "evaluate_daily", "clinical_evaluate",
    "best_pair_table", "population_aggregate", "predicted_vs_true", "participant_mean_points", "oof_points",
]

DEFAULT_FOLDS = 5
MIN_CLINIC_POINTS = 3


class CellError(RuntimeError):
    pass


def pair_label(pair):
    return f"{pair[0]} to {pair[1]}"


@dataclass
class EvalCell:
    participant: str
    pair: tuple
    kind: FeatureKind
    rmse_mean: float
    rmse_sd: float
    n_samples: int
    fold_rmse: tuple
    best_C: tuple
    method: str  # "kfold" or "loo"
    dates: tuple = ()
    targets: np.ndarray = field(default_factory=lambda: np.empty(0))
    predictions: np.ndarray = field(default_factory=lambda: np.empty(0))  # out-of-fold

    def summary(self):
        return {
            "participant": self.participant,
            "pair": list(self.pair),
            "kind": self.kind.value,
            "rmse_mean": self.rmse_mean,
            "rmse_sd": self.rmse_sd,
            "n_samples": self.n_samples,
            "fold_rmse": list(self.fold_rmse),
            "best_C": list(self.best_C),
            "method": self.method,
        }


@dataclass(frozen=True)
class SkippedCell:
    participant: str
    pair: tuple
    kind: FeatureKind
    reason: str

    def summary(self):
        return {"participant": self.participant, "pair": list(self.pair), "kind": self.kind.value, "reason": self.reason}


@dataclass
class CVResult:
    fold_rmse: tuple
    best_C: tuple
    predictions: np.ndarray


def cross_validate(x, y, k=DEFAULT_FOLDS, seed=0, params=None, grid=svr.DEFAULT_C_GRID,
                   inner_folds=DEFAULT_FOLDS, folds=None, on_fit=None):
    """Outer CV with an inner grid search over C on each training portion.

    ``on_fit(stage, indices)`` is called with the global sample indices used
    for every fitted quantity: ``"grid"`` for inner-search training sets,
    ``"scaler"`` and ``"standardizer"`` for the final fold fit.
    """
    params = params or svr.SvrParams()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    if folds is None:
        folds = kfold_split(n, k, seed)
    oof = np.full(n, np.nan)
    fold_rmse = []
    chosen = []
    for f, test in enumerate(folds):
        tr = train_indices(n, test)
        if tr.size < 2:
            raise CellError("a training fold has fewer than two samples")
        inner = min(inner_folds, tr.size)
        hook = None if on_fit is None else (lambda stage, idx, tr=tr: on_fit(stage, tr[idx]))
        inner_splits = kfold_split(tr.size, inner, seed + 1 + f)
        gs = svr.grid_search_C(x[tr], y[tr], inner_splits, grid=grid, params=params, on_fit=hook)
        if on_fit is not None:
            on_fit("scaler", tr)
            on_fit("standardizer", tr)
        try:
            model = svr.fit(x[tr], y[tr], params.with_C(gs.best_C))
        except (ValueError, svr.SvrConvergenceError) as exc:
            raise CellError(f"fold {f}: {exc}") from None
        pred = np.atleast_1d(svr.predict(model, x[test]))
        oof[test] = pred
        fold_rmse.append(svr.rmse(pred, y[test]))
        chosen.append(gs.best_C)
    return CVResult(tuple(fold_rmse), tuple(chosen), oof)


def _fold_stats(values):
    a = np.asarray(values)
    return float(a.mean()), float(a.std(ddof=1)) if a.size > 1 else 0.0


# ---------------------------------------------------------------------------
# joining features to targets


def join_samples(samples, targets):
    """Pair feature samples with same-scope targets.

    ``targets`` maps ``(participant, date)`` to a velocity. Returns
    ``({(participant, pair, kind): (dates, x, y)}, n_unmatched_samples)``.
    """
    rows = defaultdict(list)
    unmatched = 0
    for s in samples:
        key = (s.participant, s.scope_date)
        if key not in targets:
            unmatched += 1
            continue
        rows[(s.participant, s.pair, s.kind)].append((s.scope_date, s.value, targets[key]))
    out = {}
    for key in sorted(rows, key=lambda k: (k[0], k[1], ALL_KINDS.index(k[2]))):
        r = sorted(rows[key])
        out[key] = (tuple(d for d, _, _ in r), np.array([v for _, v, _ in r]), np.array([t for _, _, t in r]))
    return out, unmatched


@dataclass
class EvalReport:
    mode: str
    cells: list
    skipped: list
    n_unmatched: int
    window_days: int | None = None

    def by_participant(self):
        out = defaultdict(list)
        for c in self.cells:
            out[c.participant].append(c)
        return dict(sorted(out.items()))


def _evaluate(joined, mode, k, seed, params, grid, min_points, on_fit=None):
    cells, skipped = [], []
    for (pid, pair, kind), (dates, x, y) in joined.items():
        n = y.size
        if n < min_points:
            skipped.append(SkippedCell(pid, pair, kind, f"only {n} matched samples (need {min_points})"))
            continue
        use_k, method = (k, "kfold") if n >= k else (n, "loo")
        try:
            res = cross_validate(x, y, use_k, seed, params, grid, on_fit=on_fit)
        except CellError as exc:
            skipped.append(SkippedCell(pid, pair, kind, str(exc)))
            continue
        mean, sd = _fold_stats(res.fold_rmse)
        cells.append(EvalCell(pid, pair, kind, mean, sd, n, res.fold_rmse, res.best_C, method,
                              dates, y, res.predictions))
    return cells, skipped


def evaluate_daily(samples, daily, k=DEFAULT_FOLDS, seed=0, params=None, grid=svr.DEFAULT_C_GRID, on_fit=None):
    """Daily features against same-date daily mean velocities."""
    targets = {(d.participant, d.date): d.mean_velocity for d in daily}
    joined, unmatched = join_samples([s for s in samples if not isinstance(s.scope, Window)], targets)
    if not joined:
        raise CellError("no matched samples")
    cells, skipped = _evaluate(joined, "daily", k, seed, params, grid, min_points=k, on_fit=on_fit)
    return EvalReport("daily", cells, skipped, unmatched)


def clinical_evaluate(samples, clinic, window_days, k=DEFAULT_FOLDS, seed=0, params=None,
                      grid=svr.DEFAULT_C_GRID, on_fit=None):
    """Window features against clinic velocities measured on the window's centre date.

    Cells with fewer than ``k`` assessments fall back to leave-one-out; cells
    with fewer than three are skipped.
    """
    if window_days not in WINDOW_HALF_WIDTH:
        raise ValueError(f"window length must be one of {sorted(WINDOW_HALF_WIDTH)}, got {window_days}")
    half = WINDOW_HALF_WIDTH[window_days]
    targets = {(c.participant, c.date): c.velocity for c in clinic}
    windows = [s for s in samples if isinstance(s.scope, Window) and s.scope.half_width == half]
    joined, unmatched = join_samples(windows, targets)
    if not joined:
        raise CellError("no matched samples")
    cells, skipped = _evaluate(joined, "clinical", k, seed, params, grid, min_points=MIN_CLINIC_POINTS, on_fit=on_fit)
    return EvalReport("clinical", cells, skipped, unmatched, window_days)


# ---------------------------------------------------------------------------
# summaries


def best_pair_table(cells):
    """Per kind, the cell with the lowest mean RMSE; ties go to the lexicographically smaller pair."""
    best = {}
    for c in cells:
        cur = best.get(c.kind)
        if cur is None or (c.rmse_mean, c.pair) < (cur.rmse_mean, cur.pair):
            best[c.kind] = c
    return {kind: best[kind] for kind in ALL_KINDS if kind in best}


@dataclass
class PopulationReport:
    per_kind: dict  # kind -> mean over participants of their best-pair RMSE
    n_participants: dict  # kind -> participants contributing
    ordering: list  # kinds, lowest population RMSE first
    best: dict  # participant -> (pair, kind, rmse_mean)

    def to_dict(self):
        return {
            "per_kind": {k.value: v for k, v in self.per_kind.items()},
            "n_participants": {k.value: v for k, v in self.n_participants.items()},
            "ordering": [k.value for k in self.ordering],
            "best": {p: {"pair": list(b[0]), "kind": b[1].value, "rmse_mean": b[2]} for p, b in self.best.items()},
        }


def population_aggregate(cells_by_participant):
    if not cells_by_participant:
        raise ValueError("population aggregate needs at least one participant")
    mins = defaultdict(list)
    best = {}
    for pid in sorted(cells_by_participant):
        table = best_pair_table(cells_by_participant[pid])
        for kind, cell in table.items():
            mins[kind].append(cell.rmse_mean)
        if table:
            top = min(table.values(), key=lambda c: (c.rmse_mean, ALL_KINDS.index(c.kind), c.pair))
            best[pid] = (top.pair, top.kind, top.rmse_mean)
    per_kind = {kind: float(np.mean(mins[kind])) for kind in ALL_KINDS if mins[kind]}
    ordering = sorted(per_kind, key=lambda kd: (per_kind[kd], ALL_KINDS.index(kd)))
    return PopulationReport(per_kind, {kd: len(mins[kd]) for kd in per_kind}, ordering, best)


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    r_squared: float
    n: int

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared, "n": self.n}


def predicted_vs_true(predictions, truths):
    """Least-squares line of predicted on true, with squared Pearson correlation."""
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(truths, dtype=np.float64)
    if p.shape != t.shape or p.size < 3:
        raise ValueError("need at least three (prediction, truth) pairs of matching length")
    tc = t - t.mean()
    pc = p - p.mean()
    stt = float(np.dot(tc, tc))
    spp = float(np.dot(pc, pc))
    if stt == 0.0:
        raise ValueError("true values are constant; regression undefined")
    sxy = float(np.dot(tc, pc))
    slope = sxy / stt
    # constant predictions carry no linear information
    r2 = sxy * sxy / (stt * spp) if spp > 0.0 else 0.0
    return LineFit(slope, float(p.mean() - slope * t.mean()), r2, int(p.size))


def oof_points(report, kind=FeatureKind.P20):
    """Out-of-fold daily predictions from each participant's best pair for ``kind``.

    Rows are ``(participant, date, truth, prediction)``.
    """
    rows = []
    for pid, cells in report.by_participant().items():
        cell = best_pair_table(cells).get(kind)
        if cell is None:
            continue
        for d, t, p in zip(cell.dates, cell.targets, cell.predictions):
            if math.isfinite(p):
                rows.append((pid, d, float(t), float(p)))
    return rows


def participant_mean_points(report, kind=FeatureKind.P20):
    """Per participant: mean true and mean out-of-fold predicted velocity for ``kind``.

    Each participant contributes one point from their best pair for that kind.
    Rows are ``(participant, pair, n, mean_true, mean_predicted)``.
    """
    rows = []
    for pid, cells in report.by_participant().items():
        cell = best_pair_table(cells).get(kind)
        if cell is None:
            continue
        ok = np.isfinite(cell.predictions)
        if not ok.any():
            continue
        rows.append((pid, cell.pair, int(ok.sum()), float(np.mean(cell.targets[ok])),
                     float(np.mean(cell.predictions[ok]))))
    return rows
