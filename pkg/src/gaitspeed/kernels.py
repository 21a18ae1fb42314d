"""Hot numeric kernels, each with a numba loop version and a numpy version.

The public names (``smo_solve``, ``em_fit``, ``segment_slopes``) dispatch on
:data:`gaitspeed._accel.USE_NUMBA`. The ``*_numba`` and ``*_numpy`` variants
are exported so tests and the benchmark can call a specific path.
"""

import math

import numpy as np

from ._accel import USE_NUMBA, njit

TAU = 1e-12
# relative distance from a box edge treated as on the edge after a flat step
SNAP_RTOL = 1e-12
LOG_2PI = math.log(2.0 * math.pi)


# ---------------------------------------------------------------------------
# epsilon-SVR dual, linear kernel on scalar inputs
#
# Variables beta = [alpha; alpha_star] (length 2n), signs z = [+1; -1],
# Q_st = z_s z_t x_s x_t, p = [eps - y; eps + y]:
#
#     min 0.5 beta' Q beta + p' beta   s.t.  z' beta = 0,  0 <= beta <= C
#
# Because Q has rank one the gradient is G_t = z_t x_t w + p_t with
# w = sum_t z_t x_t beta_t, so an iteration costs O(n) and no Gram matrix is
# ever formed.
#
# The rank-one Hessian also means that any three variables span a direction d
# with z'd = 0 and (z*x)'d = 0 along which the objective is linear. Pure pair
# steps crawl when a few free variables sit on nearly parallel directions, so
# each iteration first tries such a flat step over the working pair plus one
# free variable and, if it descends, walks to the box edge. Otherwise the usual
# two-variable update runs.
# ---------------------------------------------------------------------------


def _box_step_py(b0, d0, b1, d1, b2, d2, C):
    """Longest step ``s`` keeping ``b + s * d`` in [0, C], and which of the three limits it."""
    step = np.inf
    lim = -1
    for q, (b, d) in enumerate(((b0, d0), (b1, d1), (b2, d2))):
        if d > 0.0:
            s = (C - b) / d
        elif d < 0.0:
            s = -b / d
        else:
            continue
        if s < step:
            step = s
            lim = q
    return step, lim


def _snap_py(beta, lim, i, j, k, d0, d1, d2, C):
    """Pin the limiting variable to its bound, and any other that rounding left a hair inside."""
    idx = (i, j, k)[lim]
    d = (d0, d1, d2)[lim]
    beta[idx] = C if d > 0.0 else 0.0
    tiny = C * SNAP_RTOL
    for t in (i, j, k):
        if beta[t] < tiny:
            beta[t] = 0.0
        elif beta[t] > C - tiny:
            beta[t] = C


_box_step = njit(_box_step_py)
_snap = njit(_snap_py)


def _smo_loop(x, y, C, eps, tol, max_iter, beta0):
    n = x.shape[0]
    m = 2 * n
    beta = beta0.copy()
    xx = np.empty(m)
    z = np.empty(m)
    p = np.empty(m)
    G = np.empty(m)
    free = np.empty(m, dtype=np.int64)
    for t in range(n):
        xx[t] = x[t]
        xx[t + n] = x[t]
        z[t] = 1.0
        z[t + n] = -1.0
        p[t] = eps - y[t]
        p[t + n] = eps + y[t]
    w = 0.0
    for t in range(m):
        w += z[t] * xx[t] * beta[t]
    for t in range(m):
        G[t] = z[t] * xx[t] * w + p[t]
    n_iter = 0
    gap = np.inf
    fresh = True
    while True:
        gmax = -np.inf
        gmin = np.inf
        i = -1
        j = -1
        nf = 0
        for t in range(m):
            v = -z[t] * G[t]
            if z[t] > 0.0:
                up = beta[t] < C
                low = beta[t] > 0.0
            else:
                up = beta[t] > 0.0
                low = beta[t] < C
            if up and v > gmax:
                gmax = v
                i = t
            if low and v < gmin:
                gmin = v
                j = t
            if up and low:
                free[nf] = t
                nf += 1
        gap = gmax - gmin
        if i < 0 or j < 0 or gap < tol:
            if fresh:
                break
            # re-derive w from beta so the stopping test is not an artefact
            # of accumulated rounding in the incremental update
            w = 0.0
            for t in range(m):
                w += z[t] * xx[t] * beta[t]
            for t in range(m):
                G[t] = z[t] * xx[t] * w + p[t]
            fresh = True
            continue
        if n_iter >= max_iter:
            break

        old_i = beta[i]
        old_j = beta[j]
        k = -1
        best = 0.0
        bd0 = 0.0
        bd1 = 0.0
        bd2 = 0.0
        bstep = 0.0
        blim = -1
        for q in range(nf):
            c = free[q]
            if c == i or c == j:
                continue
            d0 = z[j] * z[c] * (xx[c] - xx[j])
            d1 = z[c] * z[i] * (xx[i] - xx[c])
            d2 = z[i] * z[j] * (xx[j] - xx[i])
            s = G[i] * d0 + G[j] * d1 + G[c] * d2
            if s > 0.0:
                d0 = -d0
                d1 = -d1
                d2 = -d2
                s = -s
            if s == 0.0:
                continue
            step, lim = _box_step(beta[i], d0, beta[j], d1, beta[c], d2, C)
            if -s * step > best:
                best = -s * step
                k = c
                bd0 = d0
                bd1 = d1
                bd2 = d2
                bstep = step
                blim = lim
        if k >= 0:
            old_k = beta[k]
            beta[i] = min(C, max(0.0, old_i + bstep * bd0))
            beta[j] = min(C, max(0.0, old_j + bstep * bd1))
            beta[k] = min(C, max(0.0, old_k + bstep * bd2))
            _snap(beta, blim, i, j, k, bd0, bd1, bd2, C)
            w += z[i] * xx[i] * (beta[i] - old_i) + z[j] * xx[j] * (beta[j] - old_j) + z[k] * xx[k] * (beta[k] - old_k)
            for t in range(m):
                G[t] = z[t] * xx[t] * w + p[t]
            n_iter += 1
            fresh = False
            continue

        quad = (xx[i] - xx[j]) * (xx[i] - xx[j])
        if quad <= 0.0:
            quad = TAU
        if z[i] != z[j]:
            delta = (-G[i] - G[j]) / quad
            diff = beta[i] - beta[j]
            beta[i] += delta
            beta[j] += delta
            if diff > 0.0:
                if beta[j] < 0.0:
                    beta[j] = 0.0
                    beta[i] = diff
            else:
                if beta[i] < 0.0:
                    beta[i] = 0.0
                    beta[j] = -diff
            if diff > 0.0:
                if beta[i] > C:
                    beta[i] = C
                    beta[j] = C - diff
            else:
                if beta[j] > C:
                    beta[j] = C
                    beta[i] = C + diff
        else:
            delta = (G[i] - G[j]) / quad
            total = beta[i] + beta[j]
            beta[i] -= delta
            beta[j] += delta
            if total > C:
                if beta[i] > C:
                    beta[i] = C
                    beta[j] = total - C
            else:
                if beta[j] < 0.0:
                    beta[j] = 0.0
                    beta[i] = total
            if total > C:
                if beta[j] > C:
                    beta[j] = C
                    beta[i] = total - C
            else:
                if beta[i] < 0.0:
                    beta[i] = 0.0
                    beta[j] = total

        w += z[i] * xx[i] * (beta[i] - old_i) + z[j] * xx[j] * (beta[j] - old_j)
        for t in range(m):
            G[t] = z[t] * xx[t] * w + p[t]
        n_iter += 1
        fresh = False

    # bias from free variables, else the midpoint of the feasible interval
    ub = np.inf
    lb = -np.inf
    n_free = 0
    sum_free = 0.0
    for t in range(m):
        zg = z[t] * G[t]
        if beta[t] >= C:
            if z[t] < 0.0:
                ub = min(ub, zg)
            else:
                lb = max(lb, zg)
        elif beta[t] <= 0.0:
            if z[t] > 0.0:
                ub = min(ub, zg)
            else:
                lb = max(lb, zg)
        else:
            n_free += 1
            sum_free += zg
    if n_free > 0:
        rho = sum_free / n_free
    else:
        rho = 0.5 * (ub + lb)
    return beta, rho, n_iter, gap


smo_solve_numba = njit(_smo_loop)


def _exact_w(zx, beta):
    w = 0.0
    for t in range(beta.shape[0]):
        w += zx[t] * beta[t]
    return w


def smo_solve_numpy(x, y, C, eps, tol, max_iter, beta0):
    """Vectorised-selection twin of the compiled SMO loop (same arithmetic)."""
    n = x.shape[0]
    xx = np.concatenate([x, x])
    z = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([eps - y, eps + y])
    zx = z * xx
    beta = beta0.copy()
    pos = z > 0.0
    w = _exact_w(zx, beta)
    G = zx * w + p
    n_iter = 0
    fresh = True
    while True:
        v = -z * G
        at_upper = beta >= C
        at_lower = beta <= 0.0
        up = np.where(pos, ~at_upper, ~at_lower)
        low = np.where(pos, ~at_lower, ~at_upper)
        vu = np.where(up, v, -np.inf)
        vl = np.where(low, v, np.inf)
        i = int(np.argmax(vu))
        j = int(np.argmin(vl))
        gap = vu[i] - vl[j]
        if gap < tol:
            if fresh:
                break
            w = _exact_w(zx, beta)
            G = zx * w + p
            fresh = True
            continue
        if n_iter >= max_iter:
            break

        bi, bj = beta[i], beta[j]
        cand = np.flatnonzero(up & low)
        cand = cand[(cand != i) & (cand != j)]
        if cand.size:
            d0 = z[j] * z[cand] * (xx[cand] - xx[j])
            d1 = z[cand] * z[i] * (xx[i] - xx[cand])
            d2 = z[i] * z[j] * (xx[j] - xx[i])
            s = G[i] * d0 + G[j] * d1 + G[cand] * d2
            flip = s > 0.0
            d0 = np.where(flip, -d0, d0)
            d1 = np.where(flip, -d1, d1)
            d2 = np.where(flip, -d2, d2)
            s = np.where(flip, -s, s)
            bk = beta[cand]
            with np.errstate(divide="ignore", invalid="ignore"):
                lims = np.stack([
                    np.where(d > 0.0, (C - b) / d, np.where(d < 0.0, -b / d, np.inf))
                    for b, d in ((bi, d0), (bj, d1), (bk, d2))
                ])
            lim = np.argmin(lims, axis=0)
            step = lims[lim, np.arange(cand.size)]
            gain = np.where(s != 0.0, -s * step, 0.0)
            q = int(np.argmax(gain))
            if gain[q] > 0.0:
                k = int(cand[q])
                bk, e0, e1, e2, st = beta[k], d0[q], d1[q], d2[q], step[q]
                beta[i] = min(C, max(0.0, bi + st * e0))
                beta[j] = min(C, max(0.0, bj + st * e1))
                beta[k] = min(C, max(0.0, bk + st * e2))
                _snap_py(beta, int(lim[q]), i, j, k, e0, e1, e2, C)
                w += z[i] * xx[i] * (beta[i] - bi) + z[j] * xx[j] * (beta[j] - bj) + z[k] * xx[k] * (beta[k] - bk)
                G = zx * w + p
                n_iter += 1
                fresh = False
                continue

        quad = (xx[i] - xx[j]) * (xx[i] - xx[j])
        if quad <= 0.0:
            quad = TAU
        if z[i] != z[j]:
            delta = (-G[i] - G[j]) / quad
            diff = bi - bj
            ni, nj = bi + delta, bj + delta
            if diff > 0.0:
                if nj < 0.0:
                    nj, ni = 0.0, diff
            elif ni < 0.0:
                ni, nj = 0.0, -diff
            if diff > 0.0:
                if ni > C:
                    ni, nj = C, C - diff
            elif nj > C:
                nj, ni = C, C + diff
        else:
            delta = (G[i] - G[j]) / quad
            total = bi + bj
            ni, nj = bi - delta, bj + delta
            if total > C:
                if ni > C:
                    ni, nj = C, total - C
            elif nj < 0.0:
                nj, ni = 0.0, total
            if total > C:
                if nj > C:
                    nj, ni = C, total - C
            elif ni < 0.0:
                ni, nj = 0.0, total
        beta[i], beta[j] = ni, nj
        w += z[i] * xx[i] * (ni - bi) + z[j] * xx[j] * (nj - bj)
        G = zx * w + p
        n_iter += 1
        fresh = False

    zg = z * G
    free = (beta > 0.0) & (beta < C)
    if free.any():
        rho = float(zg[free].sum() / free.sum())
    else:
        ub_mask = np.where(pos, beta <= 0.0, beta >= C)
        lb_mask = np.where(pos, beta >= C, beta <= 0.0)
        ub = zg[ub_mask].min() if ub_mask.any() else np.inf
        lb = zg[lb_mask].max() if lb_mask.any() else -np.inf
        rho = 0.5 * (ub + lb)
    return beta, rho, n_iter, gap


def smo_solve(x, y, C, eps, tol, max_iter, beta0=None):
    """Solve the linear epsilon-SVR dual, optionally from a feasible ``beta0``.

    Returns ``(beta, rho, n_iter, violation)`` where ``beta`` stacks
    ``alpha`` over ``alpha_star``, the bias is ``-rho`` and ``violation`` is
    the final maximal-violating-pair gap.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if beta0 is None:
        beta0 = np.zeros(2 * x.shape[0])
    else:
        beta0 = np.ascontiguousarray(beta0, dtype=np.float64)
    fn = smo_solve_numba if USE_NUMBA else smo_solve_numpy
    beta, rho, n_iter, gap = fn(x, y, float(C), float(eps), float(tol), int(max_iter), beta0)
    return beta, float(rho), int(n_iter), float(gap)


# ---------------------------------------------------------------------------
# two-component 1-D Gaussian mixture, expectation-maximisation
# ---------------------------------------------------------------------------


def _em_loop(v, mu0, sd0, w0, sd_floor, rtol, max_iter):
    n = v.shape[0]
    mu = mu0.copy()
    sd = sd0.copy()
    wt = w0.copy()
    ll_trace = np.empty(max_iter + 1)
    resp = np.empty((n, 2))
    it = 0
    converged = False
    while True:
        ll = 0.0
        c0 = math.log(wt[0]) - math.log(sd[0]) - 0.5 * LOG_2PI
        c1 = math.log(wt[1]) - math.log(sd[1]) - 0.5 * LOG_2PI
        for k in range(n):
            d0 = (v[k] - mu[0]) / sd[0]
            d1 = (v[k] - mu[1]) / sd[1]
            a = c0 - 0.5 * d0 * d0
            b = c1 - 0.5 * d1 * d1
            top = max(a, b)
            lse = top + math.log(math.exp(a - top) + math.exp(b - top))
            ll += lse
            resp[k, 0] = math.exp(a - lse)
            resp[k, 1] = math.exp(b - lse)
        ll_trace[it] = ll
        if it > 0 and abs(ll - ll_trace[it - 1]) < rtol * abs(ll):
            converged = True
            break
        if it >= max_iter:
            break
        for c in range(2):
            nk = 0.0
            s1 = 0.0
            for k in range(n):
                nk += resp[k, c]
                s1 += resp[k, c] * v[k]
            if nk <= 0.0:
                return mu, sd, wt, ll_trace[: it + 1], resp, it, False
            m = s1 / nk
            s2 = 0.0
            for k in range(n):
                s2 += resp[k, c] * (v[k] - m) * (v[k] - m)
            mu[c] = m
            sd[c] = max(math.sqrt(s2 / nk), sd_floor)
            wt[c] = nk / n
        it += 1
    return mu, sd, wt, ll_trace[: it + 1], resp, it, converged


em_fit_numba = njit(_em_loop)


def em_fit_numpy(v, mu0, sd0, w0, sd_floor, rtol, max_iter):
    n = v.shape[0]
    mu, sd, wt = mu0.copy(), sd0.copy(), w0.copy()
    trace = []
    it = 0
    converged = False
    vcol = v[:, None]
    while True:
        logp = np.log(wt) - np.log(sd) - 0.5 * LOG_2PI - 0.5 * ((vcol - mu) / sd) ** 2
        top = logp.max(axis=1, keepdims=True)
        lse = top + np.log(np.exp(logp - top).sum(axis=1, keepdims=True))
        resp = np.exp(logp - lse)
        ll = float(lse.sum())
        trace.append(ll)
        if it > 0 and abs(ll - trace[-2]) < rtol * abs(ll):
            converged = True
            break
        if it >= max_iter:
            break
        nk = resp.sum(axis=0)
        if (nk <= 0.0).any():
            return mu, sd, wt, np.array(trace), resp, it, False
        mu = (resp * vcol).sum(axis=0) / nk
        sd = np.maximum(np.sqrt((resp * (vcol - mu) ** 2).sum(axis=0) / nk), sd_floor)
        wt = nk / n
        it += 1
    return mu, sd, wt, np.array(trace), resp, it, converged


def em_fit(v, mu0, sd0, w0, sd_floor=1e-3, rtol=1e-8, max_iter=500):
    """Run EM from the given start; returns ``(mu, sd, w, ll_trace, resp, n_iter, converged)``."""
    args = (
        np.ascontiguousarray(v, dtype=np.float64),
        np.asarray(mu0, dtype=np.float64).copy(),
        np.asarray(sd0, dtype=np.float64).copy(),
        np.asarray(w0, dtype=np.float64).copy(),
        float(sd_floor),
        float(rtol),
        int(max_iter),
    )
    fn = em_fit_numba if USE_NUMBA else em_fit_numpy
    mu, sd, wt, trace, resp, n_iter, converged = fn(*args)
    return mu, sd, wt, np.asarray(trace), resp, int(n_iter), bool(converged)


# ---------------------------------------------------------------------------
# least-squares slopes of many short (time, position) segments
# ---------------------------------------------------------------------------


def _slopes_loop(t, pos, starts):
    k = starts.shape[0] - 1
    out = np.empty(k)
    for s in range(k):
        a = starts[s]
        b = starts[s + 1]
        cnt = b - a
        tm = 0.0
        pm = 0.0
        for q in range(a, b):
            tm += t[q]
            pm += pos[q]
        tm /= cnt
        pm /= cnt
        sxy = 0.0
        sxx = 0.0
        for q in range(a, b):
            dt = t[q] - tm
            sxy += dt * (pos[q] - pm)
            sxx += dt * dt
        out[s] = sxy / sxx if sxx > 0.0 else np.nan
    return out


segment_slopes_numba = njit(_slopes_loop)


def segment_slopes_numpy(t, pos, starts):
    counts = np.diff(starts)
    heads = starts[:-1]
    tm = np.add.reduceat(t, heads) / counts
    pm = np.add.reduceat(pos, heads) / counts
    seg = np.repeat(np.arange(counts.size), counts)
    dt = t - tm[seg]
    sxy = np.add.reduceat(dt * (pos - pm[seg]), heads)
    sxx = np.add.reduceat(dt * dt, heads)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(sxx > 0.0, sxy / np.where(sxx > 0.0, sxx, 1.0), np.nan)


def segment_slopes(t, pos, starts):
    """Slope of position on time for each segment ``[starts[s], starts[s+1])``.

    Segments with no time spread give NaN.
    """
    t = np.ascontiguousarray(t, dtype=np.float64)
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    starts = np.ascontiguousarray(starts, dtype=np.int64)
    if starts.size < 2:
        return np.empty(0)
    fn = segment_slopes_numba if USE_NUMBA else segment_slopes_numpy
    return fn(t, pos, starts)
