"""Compare the compiled and pure-Python batch rank kernels.

    python benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Each case ranks a stack of random matrices over one field with both
backends, checks that the answers agree and reports the best of
``--repeat`` timings.  A second section times an end-to-end exhaustive
max-rank computation with each backend selected.
"""

import argparse
import json
import sys
import time

import numpy as np

from mlrank import kernels
from mlrank.corpus import gen_random
from mlrank.field import field_of_order
from mlrank.ranks import grid_ranks

CASES = [
    # (q, N, a, b)
    (2, 20000, 4, 4),
    (3, 20000, 5, 5),
    (7, 10000, 6, 6),
    (8, 10000, 5, 5),
    (9, 5000, 8, 8),
]


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_kernel(repeat):
    rows = []
    rng = np.random.default_rng(0)
    for q, N, a, b in CASES:
        ctx = field_of_order(q)
        mats = rng.integers(0, q, size=(N, a, b), dtype=np.int64)
        t_py, r_py = best_of(lambda: kernels.rank_batch(ctx, mats, backend="python"), repeat)
        row = {"case": f"rank_batch F_{q} {N}x{a}x{b}", "python_s": t_py}
        if kernels._compiled is not None:
            t_cy, r_cy = best_of(lambda: kernels.rank_batch(ctx, mats, backend="cython"), repeat)
            if not (r_cy == r_py).all():
                raise SystemExit(f"backends disagree on {row['case']}")
            row.update(cython_s=t_cy, speedup=t_py / t_cy)
        rows.append(row)
    return rows


def bench_grid(repeat):
    rows = []
    for q, n, size in ((7, 2, 4), (5, 2, 5), (3, 3, 4)):
        M = gen_random(2, n, size, size, q, 0.5, seed=1)
        row = {"case": f"grid_ranks d=2 F_{q} n={n} {size}x{size} ({q ** (2 * n)} points)"}
        results = {}
        for backend in ("python", "cython"):
            if backend == "cython" and kernels._compiled is None:
                continue
            saved = kernels._rank_batch
            kernels._rank_batch = (kernels._kernels_py.rank_batch if backend == "python"
                                   else kernels._compiled.rank_batch)
            try:
                t, r = best_of(lambda: grid_ranks(M), repeat)
            finally:
                kernels._rank_batch = saved
            row[f"{backend}_s"] = t
            results[backend] = r
        if len(results) == 2:
            if not (results["python"] == results["cython"]).all():
                raise SystemExit(f"backends disagree on {row['case']}")
            row["speedup"] = row["python_s"] / row["cython_s"]
        rows.append(row)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="also write the results here")
    args = ap.parse_args(argv)
    if kernels._compiled is None:
        print("compiled kernels not built: timing the Python fallback only", file=sys.stderr)
    rows = bench_kernel(args.repeat) + bench_grid(args.repeat)
    width = max(len(r["case"]) for r in rows)
    print(f"{'case':<{width}}  {'python':>9}  {'cython':>9}  {'speedup':>8}")
    for r in rows:
        cy = f"{r['cython_s']:9.4f}" if "cython_s" in r else f"{'-':>9}"
        sp = f"{r['speedup']:7.1f}x" if "speedup" in r else f"{'-':>8}"
        print(f"{r['case']:<{width}}  {r['python_s']:9.4f}  {cy}  {sp}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"backend": kernels.BACKEND, "results": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
