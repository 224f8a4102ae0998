"""Compiled vs numpy kernels: raw primitives and one transform-heavy solve.

Usage::

    python3 benchmarks/bench_kernels.py --nodes 20000 --repeat 5
"""

from __future__ import annotations

import argparse
import time
from contextlib import contextmanager

import numpy as np

from nonlocal_heat import _kernels_py, kernels
from nonlocal_heat import transforms as tr
from nonlocal_heat.piecewise import SpaceSignal
from nonlocal_heat.weights import piecewise_linear_weight


@contextmanager
def backend(mod):
    saved = kernels.mono, kernels.tri
    kernels.mono, kernels.tri = mod.mono, mod.tri
    try:
        yield
    finally:
        kernels.mono, kernels.tri = saved


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n, rng):
    # mixes nodes inside and outside the series radius
    lam = rng.uniform(0.5, 60, n) * np.exp(1j * rng.uniform(-np.pi, np.pi, n))
    K = piecewise_linear_weight([0.0, 0.3, 0.7, 1.0], [1.0, 2.0, -0.5, 0.8])
    phi = SpaceSignal((0.0, 0.4, 1.0), ((1.0, 0.5, -2.0, 1.0), (0.2, -1.0, 0.3, 0.1)))
    return {
        "mono": lambda mod: mod.mono(1j * lam, 0.3, 3),
        "tri": lambda mod: mod.tri(1j * lam, -1j * lam, 0.3, 1, 3, False),
        "zeta_plus": lambda mod: tr.zeta_plus(K, phi, lam, True),
        "delta": lambda mod: tr.delta(K, lam, True),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    try:
        from nonlocal_heat import _kernels_ext
    except ImportError:
        print("compiled extension not built; run `pip install -e . --no-build-isolation`")
        return 1

    rng = np.random.default_rng(args.seed)
    print(f"{'case':<10} {'numpy [ms]':>12} {'compiled [ms]':>14} {'speedup':>8} {'max rel diff':>13}")
    for name, fn in cases(args.nodes, rng).items():
        results, timings = [], []
        for mod in (_kernels_py, _kernels_ext):
            with backend(mod):
                results.append(fn(mod))
                timings.append(best_of(lambda: fn(mod), args.repeat))
        a, b = (r[0] if isinstance(r, tuple) else r for r in results)
        diff = float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300)))
        print(f"{name:<10} {1e3 * timings[0]:>12.2f} {1e3 * timings[1]:>14.2f} {timings[0] / timings[1]:>8.2f} {diff:>13.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
