"""Compare the compiled interval kernels against the numpy fallback.

Kernel timings call both implementations directly.  The end-to-end timing
runs the row-3 local certification in a subprocess per backend, since the
backend is fixed when the package is imported.

    python3 benchmarks/bench_kernels.py [--repeat N] [--skip-pipeline]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from burgerscap import _kernels

HERE = os.path.dirname(os.path.abspath(__file__))
ROW3 = os.path.join(HERE, os.pardir, "configs", "row3.cfg")

PIPELINE_SNIPPET = """
import time
from burgerscap import BACKEND, load_config
from burgerscap.fixedpoint import certify_local
cfg = load_config({path!r})
p, f = cfg.params(), cfg.forcing_set()
t0 = time.perf_counter()
loc = certify_local(p, f, M=cfg.M)
print(BACKEND, time.perf_counter() - t0, repr(float(loc.l_enlarged.hi)))
"""


def _interval_matrix(rng, n, k):
    mid = rng.normal(size=(n, k))
    rad = np.abs(rng.normal(scale=1e-3, size=(n, k)))
    return mid - rad, mid + rad


def _modes(rng, batch, m):
    parts = []
    for _ in range(2):
        mid = rng.normal(size=(batch, m)) / np.arange(1, m + 1)
        rad = np.abs(rng.normal(scale=1e-4, size=(batch, m)))
        parts += [mid - rad, mid + rad]
    return tuple(parts)


def time_call(fn, repeat):
    fn()
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_cases(rng):
    cases = []
    for n in (6, 12, 40):
        A = _interval_matrix(rng, n, n)
        B = _interval_matrix(rng, n, n)
        cases.append((f"imatmul {n}x{n}", "imatmul", (*A, *B)))
    for m, batch in ((5, 1), (20, 1), (40, 1), (20, 64)):
        a = _modes(rng, batch, m)
        a0 = (np.full(batch, 0.5), np.full(batch, 0.5))
        cases.append((f"cconv m={m} batch={batch}", "cconv", (a, a0, a, a0, 2 * m)))
    return cases


def bench_kernels(repeat):
    if _kernels.compiled is None:
        print("compiled core not available; only the fallback can be timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<24} {'numpy [ms]':>11} {'compiled [ms]':>14} {'speedup':>8} {'max diff':>10}")
    for label, name, args in kernel_cases(rng):
        slow = getattr(_kernels.fallback, name)
        t_slow = time_call(lambda: slow(*args), repeat)
        if _kernels.compiled is None:
            print(f"{label:<24} {1e3 * t_slow:11.3f} {'-':>14} {'-':>8} {'-':>10}")
            continue
        fast = getattr(_kernels.compiled, name)
        t_fast = time_call(lambda: fast(*args), repeat)
        diff = max(float(np.max(np.abs(np.asarray(x) - np.asarray(y))))
                   for x, y in zip(slow(*args), fast(*args)))
        print(f"{label:<24} {1e3 * t_slow:11.3f} {1e3 * t_fast:14.3f} "
              f"{t_slow / t_fast:8.2f} {diff:10.1e}")


def bench_pipeline():
    print()
    print("row-3 local certification (fresh interpreter per backend)")
    for backend in ("compiled", "numpy"):
        env = dict(os.environ, BURGERSCAP_BACKEND=backend)
        out = subprocess.run([sys.executable, "-c", PIPELINE_SNIPPET.format(path=ROW3)],
                             env=env, capture_output=True, text=True, check=True)
        used, secs, l = out.stdout.split()
        print(f"  requested {backend:<9} used {used:<9} {float(secs):7.3f} s   l = {l}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--skip-pipeline", action="store_true")
    args = ap.parse_args(argv)
    bench_kernels(args.repeat)
    if not args.skip_pipeline:
        bench_pipeline()


if __name__ == "__main__":
    main()
