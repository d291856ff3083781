"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--restarts 20] [--repeat 3]
"""
import argparse
import time

import numpy as np

from dickebell import _pykernels, bellpoly

try:
    from dickebell import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(kern, args):
    rng = np.random.default_rng(0)
    x16 = rng.uniform(0, 3, 16)
    x0 = rng.uniform(0, 3, 16)
    n = args.m3_qubits
    k = min(args.m3_keys, 2 ** n)
    bits = np.ascontiguousarray(
        ((rng.choice(2 ** n, k, replace=False)[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.uint8))
    cals = np.tile(np.array([[0.97, 0.04], [0.03, 0.96]]), (n, 1, 1))
    vec = rng.random(k)

    def optimize():
        saved = bellpoly.kernels
        bellpoly.kernels = kern
        try:
            bellpoly.optimize_dicke(restarts=args.restarts, seed=1)
        finally:
            bellpoly.kernels = saved

    return {
        "dicke_value x10000": lambda: [kern.dicke_value(x16) for _ in range(10000)],
        "nelder_mead (1 start)": lambda: kern.nelder_mead("dicke", x0, 1e-7, 1e-9, 5000, 10 ** 8),
        f"optimize_dicke({args.restarts})": optimize,
        f"m3_matvec k={k} n={n}": lambda: kern.m3_matvec(bits, cals, vec),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--restarts", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--m3-qubits", type=int, default=10)
    ap.add_argument("--m3-keys", type=int, default=1000)
    args = ap.parse_args(argv)

    backends = [("python", _pykernels)] + ([("compiled", _kernels)] if _kernels else [])
    results = {name: {label: best_of(fn, args.repeat) for label, fn in cases(k, args).items()}
               for name, k in backends}
    labels = list(results["python"])
    width = max(map(len, labels))
    print(f"{'case'.ljust(width)}  {'python [s]':>11}  {'compiled [s]':>12}  {'speed-up':>8}")
    for label in labels:
        py = results["python"][label]
        if "compiled" in results:
            c = results["compiled"][label]
            print(f"{label.ljust(width)}  {py:11.4f}  {c:12.4f}  {py / c:7.1f}x")
        else:
            print(f"{label.ljust(width)}  {py:11.4f}  {'n/a':>12}  {'':>8}")


if __name__ == "__main__":
    main()
