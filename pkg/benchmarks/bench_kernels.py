"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each case runs once to warm up (and compile), then reports the best of
`--repeat` timings for both paths.
"""

import argparse
import time

import numpy as np

from poisson_gmi import _kernels
from poisson_gmi.montecarlo import decode_trials, estimate_gmi_mc


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    x = 10.0 * rng.standard_normal((8192, 20)) ** 2
    y = rng.poisson(x[0]).astype(np.float64)
    xs = 10.0 * rng.standard_normal(1 << 20) ** 2
    ys = rng.poisson(xs)
    return {
        "codeword_distances 8192x20": lambda: _kernels.codeword_distances(x, y, 1.1, False),
        "first_not_worse (no hit)": lambda: _kernels.first_not_worse(x, y, 1.1, False, -1.0),
        "gmi_sample_values 2^20": lambda: _kernels.gmi_sample_values(xs, ys, 10.0, 1.1, 0.3, 0.0),
        "estimate_gmi_mc 10^6": lambda: estimate_gmi_mc(1.0, 2.0, 0.25, 10 ** 6, 1),
        "decode_trials n=16, 50 trials": lambda: decode_trials(10.0, 1.1, 0.6, 16, 50, 1),
    }


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    if not _kernels.USE_NUMBA:
        print("numba unavailable or disabled; timing the numpy path only")
    print(f"{'case':34s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}")
    for name, fn in cases().items():
        saved = _kernels.USE_NUMBA
        _kernels.USE_NUMBA = False
        t_np = best_of(fn, args.repeat)
        _kernels.USE_NUMBA = saved
        if saved:
            t_nb = best_of(fn, args.repeat)
            print(f"{name:34s} {1e3 * t_np:11.2f} {1e3 * t_nb:11.2f} {t_np / t_nb:7.1f}x")
        else:
            print(f"{name:34s} {1e3 * t_np:11.2f} {'-':>11s} {'-':>8s}")


if __name__ == "__main__":
    main()
