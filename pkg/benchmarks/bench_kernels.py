"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--size 255] [--repeat 5]

Prints best-of-N per-call times for the end-to-end upscaler and the BTV
value and gradient in each backend, and checks that both backends agree.
"""

import argparse
import time

import numpy as np

from misr import _kernels_py
from misr.operators import BlurKernel, Displacement

try:
    from misr import _kernels as _compiled
except ImportError:
    _compiled = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=255, help="HR side length (multiple of --scale)")
    ap.add_argument("--scale", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    from misr.upscaler import build_filter_bank

    rng = np.random.default_rng(0)
    x = rng.uniform(0, 255, (args.size, args.size))
    e = rng.standard_normal((args.size // args.scale, args.size // args.scale))
    bank = build_filter_bank(BlurKernel.gaussian(5, 1.2), args.scale, Displacement(1.3, -2.7))
    origins = bank.origins.astype(np.int64)

    backends = [("python", _kernels_py)]
    if _compiled is not None:
        backends.append(("cython", _compiled))
    else:
        print("compiled extension not built; showing the numpy backend only")

    cases = {
        "ete_upscale": lambda k: k.ete_upscale(e, bank.filters, origins),
        "btv_value": lambda k: k.btv_value(x, 2, 0.7),
        "btv_grad": lambda k: k.btv_grad(x, 2, 0.7),
    }
    print(f"{'kernel':<14}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'speedup':>10}")
    for case, fn in cases.items():
        row = [best_of(lambda: fn(k), args.repeat) for _, k in backends]
        speed = f"{row[0] / row[1]:>9.2f}x" if len(row) > 1 else ""
        print(f"{case:<14}" + "".join(f"{t * 1e3:>10.3f}ms" for t in row) + speed)
        if len(backends) > 1:
            a, b = fn(backends[0][1]), fn(backends[1][1])
            assert np.allclose(a, b, rtol=1e-12, atol=1e-9), f"{case}: backends disagree"


if __name__ == "__main__":
    main()
