"""Slow, independent reference implementations used only by the tests."""

import math

import numpy as np


# ---------------------------------------------------------------------------
# epsilon-SVR dual: dense projected-gradient QP


def project_box_hyperplane(v, z, upper):
    """Exact Euclidean projection of each row of ``v`` onto {0 <= b <= upper, z.b = 0}.

    ``upper`` is per-entry (rows x cols); padded entries use upper = 0. The
    multiplier is found exactly from the sorted breakpoints of the piecewise
    linear map lambda -> z.clip(v - lambda z).
    """
    rows = v.shape[0]
    bps = np.concatenate([v / z, (v - upper) / z], axis=1)
    bps.sort(axis=1)

    def g(lam):
        b = np.clip(v[:, None, :] - lam[:, :, None] * z[:, None, :], 0.0, upper[:, None, :])
        return np.einsum("rkc,rc->rk", b, z)

    vals = g(bps)  # non-increasing along axis 1
    idx = np.argmax(vals <= 0.0, axis=1)
    idx = np.maximum(idx, 1)
    r = np.arange(rows)
    l0, l1 = bps[r, idx - 1], bps[r, idx]
    g0, g1 = vals[r, idx - 1], vals[r, idx]
    denom = g0 - g1
    safe = np.where(denom > 0, denom, 1.0)
    lam = np.where(denom > 0, l0 + g0 * (l1 - l0) / safe, l1)
    lam = np.where(vals[:, 0] <= 0.0, bps[:, 0], lam)
    return np.clip(v - lam[:, None] * z, 0.0, upper)


def svr_dual_oracle(instances, eps, iters=5_000):
    """Solve many small linear epsilon-SVR duals at once by FISTA with restarts.

    ``instances`` is a list of (x, y, C). Returns (dual values in max form, w values).
    """
    m = len(instances)
    L = max(len(x) for x, _, _ in instances)
    n2 = 2 * L
    u = np.zeros((m, n2))
    p = np.zeros((m, n2))
    z = np.tile(np.concatenate([np.ones(L), -np.ones(L)]), (m, 1))
    upper = np.zeros((m, n2))
    for r, (x, y, C) in enumerate(instances):
        k = len(x)
        u[r, :k], u[r, L:L + k] = x, -x
        p[r, :k], p[r, L:L + k] = eps - y, eps + y
        upper[r, :k] = C
        upper[r, L:L + k] = C
    lip = np.maximum((u * u).sum(axis=1), 1e-12)
    step = (1.0 / lip)[:, None]

    def obj(b):
        s = (u * b).sum(axis=1)
        return 0.5 * s * s + (p * b).sum(axis=1)

    beta = np.zeros((m, n2))
    yk = beta.copy()
    t = np.ones(m)
    f_prev = obj(beta)
    for _ in range(iters):
        grad = u * (u * yk).sum(axis=1)[:, None] + p
        nxt = project_box_hyperplane(yk - step * grad, z, upper)
        f_new = obj(nxt)
        restart = f_new > f_prev
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        mom = ((t - 1.0) / t_new)[:, None]
        yk = np.where(restart[:, None], nxt, nxt + mom * (nxt - beta))
        t = np.where(restart, 1.0, t_new)
        beta, f_prev = nxt, f_new
    w = (u * beta).sum(axis=1)
    return -obj(beta), w


# ---------------------------------------------------------------------------
# epsilon-SVR primal: exact minimisation over (w, b)


def _primal_in_w(w, x, y, C, eps):
    r = y - w * x
    cand = np.concatenate([r - eps, r + eps])
    loss = np.maximum(0.0, np.abs(r[None, :] - cand[:, None]) - eps).sum(axis=1)
    j = int(np.argmin(loss))
    return 0.5 * w * w + C * loss[j], cand[j]


def svr_primal_oracle(x, y, C, eps, iters=200):
    """Minimum of 0.5 w^2 + C sum max(0, |y - w x - b| - eps).

    For fixed w the optimum over b sits at a breakpoint; the resulting
    function of w is convex, so a golden-section search pins it down.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    hi = C * np.abs(x).sum() + 1.0  # |w| <= C * sum|x| at the optimum
    a, b = -hi, hi
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = _primal_in_w(c, x, y, C, eps)[0], _primal_in_w(d, x, y, C, eps)[0]
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = _primal_in_w(c, x, y, C, eps)[0]
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = _primal_in_w(d, x, y, C, eps)[0]
    w = 0.5 * (a + b)
    val, bias = _primal_in_w(w, x, y, C, eps)
    return val, w, bias


def optimal_bias_interval(x, y, w, eps, rtol=1e-12):
    """All optimal intercepts for a fixed optimal slope form an interval of breakpoints."""
    r = np.asarray(y, float) - w * np.asarray(x, float)
    cand = np.concatenate([r - eps, r + eps])
    loss = np.maximum(0.0, np.abs(r[None, :] - cand[:, None]) - eps).sum(axis=1)
    best = loss.min()
    hit = cand[loss <= best + rtol * (1.0 + best)]
    return float(hit.min()), float(hit.max())


# ---------------------------------------------------------------------------
# order statistics and mixtures


def naive_quantile(values, p):
    """Rank h = (n - 1) p on the sorted sample, linear between neighbours."""
    v = sorted(float(a) for a in values)
    h = (len(v) - 1) * p
    lo = int(math.floor(h))
    hi = min(lo + 1, len(v) - 1)
    return v[lo] + (h - lo) * (v[hi] - v[lo])


def naive_em(v, mu, sd, w, iters, sd_floor=1e-3):
    """Textbook two-component EM in plain Python floats, fixed iteration count."""
    mu, sd, w = list(mu), list(sd), list(w)
    trace = []
    for _ in range(iters):
        resp = []
        ll = 0.0
        for x in v:
            dens = [w[c] * math.exp(-0.5 * ((x - mu[c]) / sd[c]) ** 2) / (sd[c] * math.sqrt(2 * math.pi)) for c in (0, 1)]
            tot = dens[0] + dens[1]
            ll += math.log(tot)
            resp.append((dens[0] / tot, dens[1] / tot))
        trace.append(ll)
        for c in (0, 1):
            nk = sum(r[c] for r in resp)
            mu[c] = sum(r[c] * x for r, x in zip(resp, v)) / nk
            var = sum(r[c] * (x - mu[c]) ** 2 for r, x in zip(resp, v)) / nk
            sd[c] = max(math.sqrt(var), sd_floor)
            w[c] = nk / len(v)
    return mu, sd, w, trace


def random_svr_instances(count, max_len, seed=0, c_exponents=(-5, 5)):
    """Seeded (x, y, C) triples with 2..max_len points and C a power of two."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(2, max_len + 1))
        x = rng.uniform(-1.0, 1.0, n)
        y = rng.standard_normal(n)
        C = float(2.0 ** rng.integers(c_exponents[0], c_exponents[1] + 1))
        out.append((x, y, C))
    return out


def oracle_predictions(x, y, C, eps, x_eval):
    """Primal-oracle predictions, with the bias interval returned for non-unique intercepts."""
    _, w, _ = svr_primal_oracle(x, y, C, eps)
    lo, hi = optimal_bias_interval(x, y, w, eps, rtol=1e-9)
    return w, lo, hi, w * np.asarray(x_eval, float)
