"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from noiseprop import _fallback

try:
    from noiseprop import _kernels
except ImportError:
    _kernels = None

CASES = {
    "normals 300x402": lambda m: m.normals(2024, 7, 2, 0, 300, 402),
    "normals 10000x2": lambda m: m.normals(2024, 0, 1, 0, 10000, 2),
    "mackey_glass 30k steps": lambda m: m.mackey_glass_rk4(0.2, 0.1, 10.0, 170, 0.1, 1.2, 30000),
}


def bench(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the fallback is timed")
    print(f"{'case':<26}{'fallback [ms]':>15}{'cython [ms]':>14}{'speedup':>10}{'max |diff|':>12}")
    for name, case in CASES.items():
        t_py = bench(lambda: case(_fallback), args.repeat)
        if _kernels is None:
            print(f"{name:<26}{t_py * 1e3:>15.3f}")
            continue
        t_cy = bench(lambda: case(_kernels), args.repeat)
        diff = np.max(np.abs(np.asarray(case(_fallback)) - np.asarray(case(_kernels))))
        print(f"{name:<26}{t_py * 1e3:>15.3f}{t_cy * 1e3:>14.3f}{t_py / t_cy:>10.1f}{diff:>12.1e}")


if __name__ == "__main__":
    main()
