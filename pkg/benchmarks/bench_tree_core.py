"""Compare the compiled tree kernels with the NumPy fallback.

    python benchmarks/bench_tree_core.py --rows 400 --cols 72 --repeat 5

Both backends are fed identical inputs; the script checks that they grow
identical trees before reporting timings.
"""

import argparse
import time

import numpy as np

from trajtax.models import _tree_py

try:
    from trajtax.models import _tree_core
except ImportError:
    _tree_core = None


def make_data(rows, cols, classes, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(rows, cols))
    y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(np.intp) + 2 * (X[:, 2] > 0.3).astype(np.intp)
    y = np.minimum(y, classes - 1).astype(np.intp)
    return np.ascontiguousarray(X), y


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def run(rows, cols, repeat, seed=0):
    X, y = make_data(rows, cols, 4, seed)
    samples = np.random.default_rng(seed).integers(0, rows, size=rows).astype(np.intp)
    p = np.full(rows, 0.25)
    grad = np.ascontiguousarray(p - (y == 0))
    hess = np.ascontiguousarray(np.maximum(2 * p * (1 - p), 1e-16))
    k = int(np.sqrt(cols))

    cases = {
        "gini tree (depth unlimited, sqrt features)": lambda m: m.grow_gini_tree(X, y, samples, 4, -1, k, 2, 12345),
        "newton tree (depth 6)": lambda m: m.grow_newton_tree(X, grad, hess, samples, 6, 1.0, 1.0),
    }
    backends = [("python", _tree_py)] + ([("cython", _tree_core)] if _tree_core is not None else [])
    print(f"rows={rows} cols={cols} repeat={repeat}")
    for name, case in cases.items():
        timings, outputs = {}, {}
        for bname, mod in backends:
            timings[bname], outputs[bname] = best_of(lambda: case(mod), repeat)
        if "cython" in outputs:
            same = all(np.array_equal(a, b) for a, b in zip(outputs["python"], outputs["cython"]))
            speedup = timings["python"] / timings["cython"]
            print(f"  {name}: python {timings['python'] * 1e3:8.2f} ms  cython {timings['cython'] * 1e3:8.2f} ms"
                  f"  speedup {speedup:6.1f}x  identical={same}")
        else:
            print(f"  {name}: python {timings['python'] * 1e3:8.2f} ms  (extension not built)")

    tree = _tree_py.grow_gini_tree(X, y, samples, 4, -1, k, 2, 12345)
    for bname, mod in backends:
        t, _ = best_of(lambda: mod.apply_tree(X, *tree[:4]), repeat)
        print(f"  apply_tree [{bname}]: {t * 1e3:8.3f} ms")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=400)
    ap.add_argument("--cols", type=int, default=72)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    run(args.rows, args.cols, args.repeat)


if __name__ == "__main__":
    main()
