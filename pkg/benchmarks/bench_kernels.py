"""Time the compiled and numpy kernel backends on the brute-force hot loops.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 3]

Each case is run on every available backend and the best wall time of
``--repeat`` runs is reported together with the speedup over numpy.  The
results of the two backends are also compared.
"""
import argparse
import time

import numpy as np

from alphaproj.kernels import backends


def cases(rng):
    R4 = rng.dirichlet(np.ones(4))
    R5 = rng.dirichlet(np.ones(5))
    F4 = rng.normal(size=(1, 4))
    F5 = rng.normal(size=(2, 5))
    B4 = np.linalg.qr(rng.normal(size=(4, 2)))[0]
    P = rng.dirichlet(np.ones(6), size=20000)
    Q = rng.dirichlet(np.ones(6))
    return [
        ("lattice_min n=4 N=100", "lattice_min", (100, F4, 0.05, R4, 0.5)),
        ("lattice_min n=5 N=40", "lattice_min", (40, F5, 0.3, R5, 2.0)),
        ("box_min d=2 m=40", "box_min", (np.full(4, 0.25), B4, 1e-3, 40, R4, 0.5)),
        ("batch_divergence 20000x6 a=0.5", "batch_divergence", (P, Q, 0.5)),
        ("batch_divergence 20000x6 a=4", "batch_divergence", (P, Q, 4.0)),
    ]


def best_time(fn, args, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def _value(out):
    if isinstance(out, tuple):
        return float(out[1])
    return np.asarray(out, dtype=float)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    mods = backends()
    print(f"backends: {', '.join(sorted(mods))}")
    print(f"{'case':34s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s} {'max diff':>9s}")
    for name, fn, fargs in cases(np.random.default_rng(args.seed)):
        t_py, out_py = best_time(getattr(mods["python"], fn), fargs, args.repeat)
        if "cython" in mods:
            t_cy, out_cy = best_time(getattr(mods["cython"], fn), fargs, args.repeat)
            a, b = _value(out_py), _value(out_cy)
            diff = float(np.max(np.where(a == b, 0.0, np.abs(a - b))))
            print(f"{name:34s} {t_py:11.4f} {t_cy:11.4f} {t_py / t_cy:7.1f}x {diff:9.1e}")
        else:
            print(f"{name:34s} {t_py:11.4f} {'n/a':>11s}")


if __name__ == "__main__":
    main()
