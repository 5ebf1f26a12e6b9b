"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--samples 500] [--steps 20000] [--threads 1]

Prints nanoseconds per map step for batch iteration and the omega scan, and
the projected wall time of a full classification sweep (25 maps x 500 samples
x 110000 steps, about 1.4e9 steps).
"""
import argparse
import time

import numpy as np

from intervaldyn import kernels
from intervaldyn.zoo import make_logistic, make_lorenz

SWEEP_STEPS = 25 * 500 * 110_000


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=500)
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    maps = [make_logistic(3.9), make_lorenz(0.5, 2, 2, 0.9, 0.1)]
    xs = np.random.default_rng(0).random(args.samples)
    total = args.samples * args.steps
    print(f"{'backend':10s} {'map':45s} {'kernel':10s} {'ns/step':>9s} {'sweep':>10s}")
    for name in kernels.available_backends():
        with kernels.use_backend(name):
            for f in maps:
                tab = f.table()
                runs = {
                    "iterate": lambda: kernels.iterate(tab, xs, args.steps, threads=args.threads),
                    "omega": lambda: kernels.omega_scan(tab, xs, args.steps // 10, args.steps,
                                                        [1e-3, 1e-2, 5e-3, 2.5e-3],
                                                        threads=args.threads),
                }
                for kname, fn in runs.items():
                    steps = total if kname == "iterate" else total + args.samples * (args.steps // 10)
                    ns = 1e9 * best_of(fn, args.repeat) / steps
                    sweep = ns * SWEEP_STEPS * 1e-9
                    print(f"{name:10s} {f.name:45s} {kname:10s} {ns:9.1f} {sweep:9.0f}s")


if __name__ == "__main__":
    main()
