#!/usr/bin/env python3
"""Time the compiled and pure-numpy variants of each hot kernel on the same inputs.

Both variants are always importable; the env flag only decides which one the
package dispatches to. Compilation happens in a warm-up call that is not timed.

    python benchmarks/bench_kernels.py [--repeat 5] [--sizes 100,400,1600]
"""

import argparse
import time

import numpy as np

from gaitspeed import kernels
from gaitspeed._accel import HAVE_NUMBA, backend_name


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _smo_case(n, rng):
    x = rng.uniform(-1.0, 1.0, n)
    y = 0.8 * x + 0.3 * rng.standard_normal(n)
    y = (y - y.mean()) / y.std()
    return x, y


def _em_case(n, rng):
    k = n // 6
    v = np.sort(np.concatenate([rng.normal(5.0, 3.0, k), rng.normal(80.0, 10.0, n - k)]))
    return v, np.array([5.0, 70.0]), np.array([5.0, 15.0]), np.array([0.5, 0.5])


def _slope_case(n, rng):
    sizes = rng.integers(2, 5, n)
    starts = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    t = np.concatenate([np.sort(rng.uniform(0, 3, s)) for s in sizes])
    pos = np.concatenate([np.linspace(0, 1.8, s) for s in sizes])
    return t, pos, starts


def run(sizes, repeat, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for n in sizes:
        x, y = _smo_case(n, rng)
        beta0 = np.zeros(2 * n)
        args = (x, y, 4.0, 0.1, 1e-6, 100_000, beta0)
        kernels.smo_solve_numba(*args)
        t_nb, r_nb = _best_of(lambda: kernels.smo_solve_numba(*args), repeat)
        t_np, r_np = _best_of(lambda: kernels.smo_solve_numpy(*args), repeat)
        rows.append(("smo_solve", n, t_nb, t_np, bool(np.array_equal(r_nb[0], r_np[0]))))

        em_args = (*_em_case(n * 10, rng), 1e-3, 1e-8, 500)
        kernels.em_fit_numba(*em_args)
        t_nb, r_nb = _best_of(lambda: kernels.em_fit_numba(*em_args), repeat)
        t_np, r_np = _best_of(lambda: kernels.em_fit_numpy(*em_args), repeat)
        rows.append(("em_fit", n * 10, t_nb, t_np, bool(np.allclose(r_nb[0], r_np[0], rtol=1e-12, atol=0))))

        sl_args = _slope_case(n * 10, rng)
        kernels.segment_slopes_numba(*sl_args)
        t_nb, r_nb = _best_of(lambda: kernels.segment_slopes_numba(*sl_args), repeat)
        t_np, r_np = _best_of(lambda: kernels.segment_slopes_numpy(*sl_args), repeat)
        rows.append(("segment_slopes", n * 10, t_nb, t_np, bool(np.allclose(r_nb, r_np, rtol=1e-12, atol=1e-12))))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="100,400,1600")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"package dispatch: {backend_name()}")
    print(f"{'kernel':<16}{'n':>8}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}  agree")
    for name, n, t_nb, t_np, same in run(sizes, args.repeat):
        print(f"{name:<16}{n:>8}{t_nb * 1e3:>12.3f}{t_np * 1e3:>12.3f}{t_np / t_nb:>9.1f}x  {same}")


if __name__ == "__main__":
    main()
