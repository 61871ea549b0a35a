"""Compare the numba kernels with their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from hyperspec import kernels
from hyperspec.shb import LevelScheme, predict_features


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not kernels.HAVE_NUMBA:
        print("numba unavailable or disabled; nothing to compare")
        return

    scheme = LevelScheme.from_splittings((5.99, 10.42, 7.3), (1.4, 2.9, 3.3))
    feats = predict_features(scheme)
    pos = np.array([f.detuning for f in feats])
    amp = np.array([f.amplitude for f in feats])
    g, e = np.asarray(scheme.ground), np.asarray(scheme.excited)
    S, b = scheme.strengths, scheme.branching

    cases = []
    for n in (4_001, 40_001, 400_001):
        x = np.linspace(-30, 30, n)
        cases.append((f"lorentzian_sum  n={n:>7} features={len(pos)}",
                      lambda x=x, nb=None: kernels.lorentzian_sum(x, pos, amp, 0.15, nb)))
    for n in (10_000, 100_000):
        delta = np.linspace(-60, 60, n)
        cases.append((f"burn_populations classes={n:>7}",
                      lambda d=delta, nb=None: kernels.burn_populations(d, g, e, S, b, 0.05, nb)))
        dp = kernels.burn_populations(delta, g, e, S, b, 0.05)
        probe = np.linspace(-30, 30, n // 2)
        cases.append((f"probe_absorption classes={n:>7}",
                      lambda d=delta, p=probe, dp=dp, nb=None: kernels.probe_absorption(p, d, dp, g, e, S, nb)))

    print(f"{'kernel':45s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}")
    for name, fn in cases:
        fn(nb=True)  # compile / warm cache
        t_np = best_of(lambda: fn(nb=False), args.repeat)
        t_nb = best_of(lambda: fn(nb=True), args.repeat)
        print(f"{name:45s} {t_np * 1e3:11.2f} {t_nb * 1e3:11.2f} {t_np / t_nb:8.1f}")


if __name__ == "__main__":
    main()
