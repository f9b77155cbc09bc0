"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``MLRANK_PURE_PYTHON=1`` to force the fallback.
"""

import os

import numpy as np

from . import _kernels_py
from .field import TABLE_LIMIT

BACKEND = "python"
_compiled = None
_rank_batch = _kernels_py.rank_batch

if os.environ.get("MLRANK_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    if _compiled is not None:
        _rank_batch = _compiled.rank_batch
        BACKEND = "cython"


def rank_batch(ctx, mats: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Ranks of a stack of code matrices, shape ``(N, a, b)``, over ``ctx``."""
    mats = np.ascontiguousarray(mats, dtype=np.int64)
    if mats.ndim != 3:
        raise ValueError("expected a (N, a, b) stack")
    if mats.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    if mats.shape[1] == 0 or mats.shape[2] == 0:
        return np.zeros(mats.shape[0], dtype=np.int64)
    if ctx.q > TABLE_LIMIT:
        return np.array([_rank_generic(ctx, m) for m in mats.tolist()], dtype=np.int64)
    add, mul, neg, inv = ctx.tables()
    fn = _rank_batch
    if backend == "python":
        fn = _kernels_py.rank_batch
    elif backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        fn = _compiled.rank_batch
    return fn(mats, ctx.p, ctx.k, add, mul, neg, inv)


def _rank_generic(ctx, w: list[list[int]]) -> int:
    a, b = len(w), len(w[0]) if w else 0
    r = 0
    for col in range(b):
        piv = next((i for i in range(r, a) if w[i][col]), None)
        if piv is None:
            continue
        w[r], w[piv] = w[piv], w[r]
        s = ctx.inv(w[r][col])
        w[r] = [ctx.mul(x, s) for x in w[r]]
        for i in range(r + 1, a):
            f = w[i][col]
            if f:
                w[i] = [ctx.sub(x, ctx.mul(f, y)) for x, y in zip(w[i], w[r])]
        r += 1
        if r == a:
            break
    return r
