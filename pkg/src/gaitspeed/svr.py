"""Linear epsilon-insensitive support vector regression on a scalar feature.

The model is ``f(x) = w * x + b`` fitted by minimising
``0.5 * w**2 + C * sum(loss_eps(y_i - f(x_i)))``. Training solves the dual with
the SMO kernel in :mod:`gaitspeed.kernels`.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .features import Scaler, apply_scaler, fit_scaler
from .splits import kfold_split, train_indices

DEFAULT_C_GRID = tuple(2.0 ** e for e in range(-5, 16, 2))
# cold starts above this C go through a x4 continuation path
CONTINUATION_FROM = 1.0
CONTINUATION_STEP = 4.0


class SvrConvergenceError(RuntimeError):
    def __init__(self, violation, n_iter):
        super().__init__(f"SMO stopped after {n_iter} iterations with KKT violation {violation:.3e}")
        self.violation = violation
        self.n_iter = n_iter


@dataclass(frozen=True)
class SvrParams:
    C: float = 1.0
    epsilon: float = 0.1
    tolerance: float = 1e-6
    max_iter: int = 100_000

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")

    def with_C(self, C):
        return SvrParams(C=float(C), epsilon=self.epsilon, tolerance=self.tolerance, max_iter=self.max_iter)


@dataclass(frozen=True)
class TrainingSet:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64).ravel()
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if x.shape != y.shape:
            raise ValueError(f"x and y lengths differ: {x.size} vs {y.size}")
        if x.size < 2:
            raise ValueError("a training set needs at least two points")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise ValueError("training data must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.x.size


@dataclass(frozen=True)
class Standardizer:
    """Zero-mean, unit-variance map for targets; a constant target keeps unit scale."""

    mean: float
    sd: float

    @classmethod
    def fit(cls, y):
        y = np.asarray(y, dtype=np.float64)
        sd = float(y.std())
        return cls(float(y.mean()), sd if sd > 0.0 else 1.0)

    def forward(self, y):
        return (np.asarray(y, dtype=np.float64) - self.mean) / self.sd

    def inverse(self, z):
        return np.asarray(z, dtype=np.float64) * self.sd + self.mean

    def to_dict(self):
        return {"mean": self.mean, "sd": self.sd}


@dataclass
class SvrModel:
    w: float
    b: float
    alphas: np.ndarray  # shape (n, 2): columns alpha, alpha_star
    params: SvrParams
    scaler: Scaler | None = None
    standardizer: Standardizer | None = None
    n_iter: int = 0
    violation: float = 0.0
    meta: dict = field(default_factory=dict)

    def decision(self, x_scaled):
        """Affine output in the training space (scaled feature, standardised target)."""
        return self.w * np.asarray(x_scaled, dtype=np.float64) + self.b

    def to_dict(self):
        return {
            "w": self.w,
            "b": self.b,
            "alphas": self.alphas.tolist(),
            "scaler": None if self.scaler is None else self.scaler.to_dict(),
            "params": {"C": self.params.C, "epsilon": self.params.epsilon,
                       "tolerance": self.params.tolerance, "max_iter": self.params.max_iter},
            "target_standardizer": None if self.standardizer is None else self.standardizer.to_dict(),
            "n_iter": self.n_iter,
            "violation": self.violation,
            **({"meta": self.meta} if self.meta else {}),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            w=float(d["w"]),
            b=float(d["b"]),
            alphas=np.asarray(d["alphas"], dtype=np.float64).reshape(-1, 2),
            params=SvrParams(**d["params"]),
            scaler=None if d.get("scaler") is None else Scaler(**d["scaler"]),
            standardizer=None if d.get("target_standardizer") is None else Standardizer(**d["target_standardizer"]),
            n_iter=int(d.get("n_iter", 0)),
            violation=float(d.get("violation", 0.0)),
            meta=dict(d.get("meta", {})),
        )

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def epsilon_loss(residual, epsilon):
    """Zero inside the closed tube ``|r| <= epsilon``, ``|r| - epsilon`` outside."""
    if epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    r = np.abs(np.asarray(residual, dtype=np.float64))
    out = np.where(r <= epsilon, 0.0, r - epsilon)
    return float(out) if out.ndim == 0 else out


def primal_objective(model, data):
    residual = data.y - model.decision(data.x)
    return 0.5 * model.w ** 2 + model.params.C * float(np.sum(epsilon_loss(residual, model.params.epsilon)))


def dual_objective(model, data):
    """Dual value in maximisation form, so ``primal - dual >= 0``."""
    a, a_star = model.alphas[:, 0], model.alphas[:, 1]
    eps = model.params.epsilon
    coef = a - a_star
    w = float(np.dot(coef, data.x))
    return -0.5 * w * w - eps * float(np.sum(a + a_star)) + float(np.dot(data.y, coef))


def slacks(model, data):
    """Recovered slack pairs ``(xi, xi_star)`` for points above and below the tube."""
    r = data.y - model.decision(data.x)
    eps = model.params.epsilon
    return np.maximum(0.0, r - eps), np.maximum(0.0, -r - eps)


def kkt_violation(model, data):
    """Largest breach of the residual form of the optimality conditions."""
    a, a_star = model.alphas[:, 0], model.alphas[:, 1]
    C, eps = model.params.C, model.params.epsilon
    r = data.y - model.decision(data.x)
    worst = 0.0
    # alpha > 0 needs r >= eps; alpha < C needs r <= eps; mirrored for alpha_star with -r
    for coef, res in ((a, r), (a_star, -r)):
        lo = np.where(coef > 0.0, np.maximum(0.0, eps - res), 0.0)
        hi = np.where(coef < C, np.maximum(0.0, res - eps), 0.0)
        worst = max(worst, float(lo.max(initial=0.0)), float(hi.max(initial=0.0)))
    return worst


def _continuation(C):
    if C <= CONTINUATION_FROM:
        return [C]
    k = math.ceil(math.log(C / CONTINUATION_FROM, CONTINUATION_STEP))
    return [C / CONTINUATION_STEP ** j for j in range(k, 0, -1)] + [C]


def _rescale(beta, C_old, C_new):
    # alpha/C stays feasible for the new box; pin values rounding moved off the edges
    out = beta * (C_new / C_old)
    out[beta >= C_old] = C_new
    out[beta <= 0.0] = 0.0
    return out


def train(data, params, warm_start=None):
    """Fit on an already-scaled training set.

    ``warm_start`` may be a model trained on the same points with another C;
    its dual point is rescaled into the new box and used as the start.
    """
    if not isinstance(data, TrainingSet):
        data = TrainingSet(*data)
    if np.ptp(data.x) == 0.0:
        raise ValueError("degenerate training set: all feature values are identical")
    n = len(data)
    if warm_start is not None:
        if warm_start.alphas.shape != (n, 2):
            raise ValueError("warm start was trained on a different number of points")
        beta = _rescale(np.concatenate([warm_start.alphas[:, 0], warm_start.alphas[:, 1]]),
                        warm_start.params.C, params.C)
        path = [params.C]
    else:
        beta = None
        path = _continuation(params.C)

    total_iter = 0
    for stage, C in enumerate(path):
        if stage > 0:
            beta = _rescale(beta, path[stage - 1], C)
        beta, rho, n_iter, gap = kernels.smo_solve(
            data.x, data.y, C, params.epsilon, params.tolerance, params.max_iter - total_iter, beta
        )
        total_iter += n_iter
        if gap >= params.tolerance:
            raise SvrConvergenceError(gap, total_iter)

    alphas = np.column_stack([beta[:n], beta[n:]])
    # with epsilon = 0 both multipliers of a point may be positive; only their difference matters
    alphas -= np.minimum(alphas[:, 0], alphas[:, 1])[:, None]
    w = float(np.dot(alphas[:, 0] - alphas[:, 1], data.x))
    return SvrModel(w=w, b=-rho, alphas=alphas, params=params, n_iter=total_iter, violation=max(gap, 0.0))


def fit(x_raw, y, params, warm_start=None):
    """Scale features to [-1, 1], standardise targets, then train."""
    x_raw = np.asarray(x_raw, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    scaler = fit_scaler(x_raw)
    std = Standardizer.fit(y)
    model = train(TrainingSet(apply_scaler(scaler, x_raw), std.forward(y)), params, warm_start=warm_start)
    model.scaler = scaler
    model.standardizer = std
    return model


def predict(model, x_raw):
    """Velocity prediction for raw feature values (seconds)."""
    if model.scaler is None:
        raise ValueError("model has no feature scaler; use model.decision on scaled inputs")
    out = model.decision(apply_scaler(model.scaler, x_raw))
    if model.standardizer is not None:
        out = model.standardizer.inverse(out)
    return float(out) if np.ndim(out) == 0 else out


def rmse(pred, truth):
    d = np.asarray(pred, dtype=np.float64) - np.asarray(truth, dtype=np.float64)
    return float(np.sqrt(np.mean(d * d)))


@dataclass
class GridResult:
    best_C: float
    cv_rmse: dict  # C -> mean RMSE over folds (inf when a fold failed)


def cv_rmse_path(x_raw, y, folds, grid, params, on_fit=None):
    """Mean fold RMSE for every C, warm-starting along the ascending grid within each fold."""
    n = len(y)
    order = sorted(set(float(c) for c in grid))
    per_c = {c: [] for c in order}
    for test in folds:
        tr = train_indices(n, test)
        if on_fit is not None:
            on_fit("grid", tr)
        try:
            scaler = fit_scaler(x_raw[tr])
        except ValueError:
            for c in order:
                per_c[c].append(math.inf)
            continue
        std = Standardizer.fit(y[tr])
        data = TrainingSet(apply_scaler(scaler, x_raw[tr]), std.forward(y[tr]))
        x_test = apply_scaler(scaler, x_raw[test])
        prev = None
        for c in order:
            try:
                prev = train(data, params.with_C(c), warm_start=prev)
            except (SvrConvergenceError, ValueError):
                per_c[c].append(math.inf)
                prev = None
                continue
            per_c[c].append(rmse(std.inverse(prev.decision(x_test)), y[test]))
    return {c: float(np.mean(v)) if np.all(np.isfinite(v)) else math.inf for c, v in per_c.items()}


def grid_search_C(x_raw, y, folds=5, grid=DEFAULT_C_GRID, seed=0, params=None, on_fit=None):
    """Pick the C with the lowest cross-validated RMSE; ties go to the smaller C.

    ``folds`` is either a fold count or explicit test-index arrays.
    """
    if not grid:
        raise ValueError("empty C grid")
    params = params or SvrParams()
    x_raw = np.asarray(x_raw, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if isinstance(folds, int):
        folds = kfold_split(len(y), min(folds, len(y)), seed)
    scores = cv_rmse_path(x_raw, y, folds, grid, params, on_fit=on_fit)
    best = min(scores, key=lambda c: (scores[c], c))
    return GridResult(best_C=best, cv_rmse=scores)
