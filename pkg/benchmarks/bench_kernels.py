"""Time the compiled kernels against the pure-Python fallback.

Run from the repository root after an editable install::

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from schurfit import _kernels_py
from schurfit.schur import _strip_graph

try:
    from schurfit import _kernels
except ImportError:
    _kernels = None


def cases():
    rng = np.random.default_rng(0)
    parts = (4, 3, 2, 1)
    graph = _strip_graph(parts)
    pts4 = rng.uniform(-2, 2, 4)
    exps4 = np.array([p + 3 - i for i, p in enumerate(parts)], dtype=np.float64)
    big = (6, 5, 3, 2, 2, 1)
    big_graph = _strip_graph(big)
    pts6 = rng.uniform(-2, 2, 6)
    exps6 = np.array([p + 5 - i for i, p in enumerate(big)], dtype=np.float64)
    m4 = rng.normal(size=(4, 4))
    m8 = rng.normal(size=(8, 8))
    return {
        "strip_sum |lambda|=10, k=4": lambda k: k.strip_sum(*graph, pts4, parts[0]),
        "strip_sum |lambda|=19, k=6": lambda k: k.strip_sum(*big_graph, pts6, big[0]),
        "det 4x4 (cofactor)": lambda k: k.det(m4),
        "det 8x8 (LU)": lambda k: k.det(m8),
        "bialternant k=4": lambda k: k.bialternant(exps4, pts4),
        "bialternant k=6": lambda k: k.bialternant(exps6, pts6),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the Python fallback is available")
    print(f"{'kernel':32s} {'python us':>11s} {'cython us':>11s} {'speedup':>8s}")
    for name, fn in cases().items():
        row = []
        for impl in (_kernels_py, _kernels):
            if impl is None:
                row.append(float("nan"))
                continue
            timer = timeit.Timer(lambda: fn(impl))
            number, _ = timer.autorange()
            best = min(timer.repeat(args.repeat, number)) / number
            row.append(best * 1e6)
        print(f"{name:32s} {row[0]:11.2f} {row[1]:11.2f} {row[0] / row[1]:7.1f}x")


if __name__ == "__main__":
    main()
