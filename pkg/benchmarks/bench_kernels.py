"""Time each hot kernel under numba and pure numpy.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Compilation is excluded: every kernel is called once before timing.
"""
from __future__ import annotations

import argparse
import json
import timeit

import numpy as np

from arena_surrogate import kernels
from arena_surrogate._backend import HAVE_NUMBA


def cases(rng: np.random.Generator):
    n_models, n_queries = 19, 100
    pairs = np.array([(a, b) for a in range(n_models) for b in range(a + 1, n_models)])
    q = np.repeat(np.arange(n_queries), len(pairs))
    a = np.tile(pairs[:, 0], n_queries)
    b = np.tile(pairs[:, 1], n_queries)
    s = rng.integers(0, 2, size=q.size).astype(float)
    w = rng.integers(0, 3, size=n_queries).astype(float)
    wins = kernels.tally_numpy(q, a, b, s, np.ones(n_queries), n_models) + 0.5
    np.fill_diagonal(wins, 0.0)
    tok_a = rng.integers(0, 50, size=300)
    tok_b = rng.integers(0, 50, size=300)
    x, y = rng.standard_normal(500), rng.standard_normal(500)
    X = rng.random((17, 11))
    yt = rng.standard_normal(17)
    keys = rng.random((33, 11))
    return {
        "tally (16k judgments)": (lambda k: k(q, a, b, s, w, n_models), kernels.tally_numba, kernels.tally_numpy),
        "bt_mm (19 models)": (lambda k: k(wins, 1e-8, 1000), kernels.bt_mm_numba, kernels.bt_mm_numpy),
        "lcs_length (300x300)": (lambda k: k(tok_a, tok_b), kernels.lcs_length_numba, kernels.lcs_length_numpy),
        "kendall_counts (n=500)": (lambda k: k(x, y), kernels.kendall_counts_numba, kernels.kendall_counts_numpy),
        "build_tree (17x11)": (lambda k: k(X, yt, keys, -1, 1, 4), kernels.build_tree_numba, kernels.build_tree_numpy),
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    rows = []
    print(f"{'kernel':<26}{'numba (us)':>12}{'numpy (us)':>12}{'speedup':>10}")
    for name, (call, nb, npy) in cases(rng).items():
        res = {"kernel": name}
        for label, fn in (("numba", nb if HAVE_NUMBA else None), ("numpy", npy)):
            if fn is None:
                res[label] = None
                continue
            call(fn)  # warm-up / compile
            timer = timeit.Timer(lambda: call(fn))
            n, _ = timer.autorange()
            res[label] = min(timer.repeat(args.repeat, n)) / n * 1e6
        speed = res["numpy"] / res["numba"] if res["numba"] else float("nan")
        nb_txt = f"{res['numba']:.1f}" if res["numba"] else "n/a"
        print(f"{name:<26}{nb_txt:>12}{res['numpy']:>12.1f}{speed:>9.1f}x")
        rows.append(res)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
