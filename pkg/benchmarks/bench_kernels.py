"""Compare the numba and numpy backends of the tree kernels.

Usage::

    python3 benchmarks/bench_kernels.py [--depth 12] [--repeat 20] [--seed 0]

Prints one line per kernel and backend with the best time of ``--repeat``
runs, and checks that both backends return the same numbers.
"""

import argparse
import timeit

import numpy as np

from treeshift import _kernels
from treeshift.generators import random_tree


def cases(tree, rng, cols):
    V = tree.n_vertices
    lam = rng.uniform(0.2, 2.0, size=V)
    X = rng.standard_normal((V, cols))
    return {
        "gather_scale": lambda b: _kernels.gather_scale(tree.parent[1:], lam[1:], X, backend=b),
        "segment_sum_scaled": lambda b: _kernels.segment_sum_scaled(tree.child_ptr, lam, X, backend=b),
        "power_norms_sq": lambda b: _kernels.power_norms_sq(tree.child_ptr, lam**2, 8, backend=b),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--depth", type=int, default=12)
    p.add_argument("--max-width", type=int, default=4096)
    p.add_argument("--cols", type=int, default=8)
    p.add_argument("--repeat", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    tree = random_tree(rng, args.depth, max_branching=4, max_width=args.max_width, p_branch=0.6)
    backends = list(_kernels.IMPLEMENTATIONS)
    print(f"tree: {tree.n_vertices} vertices, depth {tree.trunc_depth}; backends: {', '.join(backends)}")
    for name, fn in cases(tree, rng, args.cols).items():
        ref = fn("numpy")
        times = {}
        for b in backends:
            out = fn(b)  # also triggers compilation
            assert np.allclose(out, ref, rtol=1e-13, atol=1e-13), f"{name}: {b} disagrees with numpy"
            times[b] = min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat))
        line = "  ".join(f"{b} {t * 1e3:8.3f} ms" for b, t in times.items())
        if "numba" in times:
            line += f"  speedup {times['numpy'] / times['numba']:.1f}x"
        print(f"{name:20s} {line}")


if __name__ == "__main__":
    main()
