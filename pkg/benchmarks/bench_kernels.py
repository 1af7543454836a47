"""Timing of the compiled kernels against the numpy fallback.

Run ``python benchmarks/bench_kernels.py``; prints best-of-``repeat``
wall-clock times and the speed-up for the two hot loops.
"""

import argparse
import timeit

import numpy as np

from levycarma import discretize, simulate_gaussian, stationary_cov
from levycarma._backend import get_kernels
from levycarma.qml import BIVARIATE_TRUTH, bivariate_example


def _cases(n_obs, n_sub):
    ss = bivariate_example().build(BIVARIATE_TRUTH)
    ds = discretize(ss, 1.0)
    path = simulate_gaussian(ss, 1.0, n_obs - 1, seed=0)
    p0 = stationary_cov(ss)
    w = np.random.default_rng(0).standard_normal((n_sub, ss.N)) * 0.01
    phi_sub = discretize(ss, 1.0 / 64).phi
    return {
        "kalman_filter": lambda k: k.kalman_filter(ds.phi, ds.q_h, ds.c, p0, path.y),
        "state_recursion": lambda k: k.state_recursion(phi_sub, np.zeros(ss.N), w, 64),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-obs", type=int, default=2001)
    ap.add_argument("--n-sub", type=int, default=128_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    try:
        compiled = get_kernels("cython")
    except ImportError:
        print("compiled extension not built; nothing to compare")
        return 1
    pure = get_kernels("python")
    print(f"{'kernel':<16} {'cython [ms]':>12} {'python [ms]':>12} {'speed-up':>9}")
    for name, call in _cases(args.n_obs, args.n_sub).items():
        tc = min(timeit.repeat(lambda: call(compiled), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: call(pure), number=1, repeat=args.repeat))
        print(f"{name:<16} {1e3 * tc:>12.3f} {1e3 * tp:>12.3f} {tp / tc:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
