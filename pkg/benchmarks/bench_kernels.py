"""Time the compiled kernels against the pure-Python ones.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

from icngame import _kernels_py

try:
    from icngame import _ckernels
except ImportError:
    _ckernels = None

CASES = {
    "best_response": lambda k: k.best_response(True, 5.0, 12.0, 1.0, 1.0, 0.5, 1000, 1e-12, 200),
    "brute_force_nash": lambda k: k.brute_force_nash(12.0, 1.0, 0.25, 1.0, 0.0, 0.0, 1000, 200, 1e-10),
    "max_deviation_gain": lambda k: k.max_deviation_gain(True, 3.0, 5.0, 12.0, 1.0, 0.0, 1.0, 1000),
    "congestion_fixed_point": lambda k: k.congestion_fixed_point(12.0, 20.0, 2.0, 0.3, 2, 0.5, 1e-13, 200),
}


def best_of(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if _ckernels is None:
        print("compiled kernels not built; only the pure-Python timings are shown")
    print(f"{'kernel':<24}{'python':>12}{'cython':>12}{'speedup':>10}")
    for name, call in CASES.items():
        py = best_of(lambda: call(_kernels_py), args.repeat)
        if _ckernels is None:
            print(f"{name:<24}{py * 1e6:>10.1f}us")
            continue
        cy = best_of(lambda: call(_ckernels), args.repeat)
        print(f"{name:<24}{py * 1e6:>10.1f}us{cy * 1e6:>10.1f}us{py / cy:>9.1f}x")


if __name__ == "__main__":
    main()
