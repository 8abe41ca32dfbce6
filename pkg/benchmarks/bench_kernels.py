"""Time the prefix kernels: numba fast path against the numpy fallback.

Both routes accumulate in the same order, so outputs must be bit-identical;
the table reports that check next to the timings.  With PATHCALC_NO_NUMBA=1
(or numba missing) only the numpy route is timed, since the "compiled"
column would just be the interpreted loop.

    python benchmarks/bench_kernels.py --n 1048576 --d 3 --repeats 7
"""

import argparse
import time

import numpy as np

from pathcalc._kernels import HAS_NUMBA, KERNEL_PAIRS


def make_args(name, n, d, gen):
    t = np.concatenate([[0.0], np.cumsum(gen.uniform(0.5, 1.5, n - 1))])
    t /= t[-1]
    v = gen.normal(size=(n, d))
    dx = gen.normal(size=(n - 1, d)) * 1e-3
    if name in ("trapezoid_prefix", "left_prefix"):
        return (t, v)
    if name == "outer_increment_prefix":
        return (dx,)
    if name == "dot_increment_prefix":
        return (gen.normal(size=(n - 1, d)), dx)
    if name == "quad_form_prefix":
        h = gen.normal(size=(n - 1, d, d))
        return (h + h.transpose(0, 2, 1), dx)
    raise KeyError(name)


def median_time(fn, args, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - start)
    return float(np.median(times))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2 ** 20,
                    help="rows per kernel input")
    ap.add_argument("--d", type=int, default=3, help="columns / dimension")
    ap.add_argument("--repeats", type=int, default=7,
                    help="timed runs per kernel; the median is reported")
    ap.add_argument("--seed", type=int, default=0)
    opts = ap.parse_args()

    gen = np.random.default_rng(opts.seed)
    print(f"n={opts.n}, d={opts.d}, repeats={opts.repeats}, "
          f"numba={'on' if HAS_NUMBA else 'OFF (numpy fallback only)'}")
    header = f"{'kernel':<26} {'numpy':>10} {'numba':>10} {'speedup':>8} {'identical':>10}"
    print(header)
    print("-" * len(header))
    for name, (np_fn, nb_fn) in KERNEL_PAIRS.items():
        args = make_args(name, opts.n, opts.d, gen)
        ref = np_fn(*args)
        t_np = median_time(np_fn, args, opts.repeats)
        if not HAS_NUMBA:
            print(f"{name:<26} {t_np * 1e3:>8.2f}ms {'-':>10} {'-':>8} "
                  f"{'-':>10}")
            continue
        nb_fn(*args)  # compile outside the timed region
        same = np.array_equal(ref, nb_fn(*args))
        t_nb = median_time(nb_fn, args, opts.repeats)
        print(f"{name:<26} {t_np * 1e3:>8.2f}ms {t_nb * 1e3:>8.2f}ms "
              f"{t_np / t_nb:>7.1f}x {'yes' if same else 'NO':>10}")


if __name__ == "__main__":
    main()
