"""Max-rank, average rank, commutative rank and the exact d=1 partition rank.

Exhaustive point enumerations evaluate the matrix on whole grids with numpy
and hand the resulting stacks to :func:`mlrank.kernels.rank_batch`.

Commutative rank has three exact-or-bounded routes:

``symbolic``
    certify a nonzero ``L x L`` minor and the vanishing of every
    ``(L+1) x (L+1)`` minor with exact polynomial determinants;
``exhaustive``
    maximum rank over all points of an extension ``F_{q^m}`` with
    ``q^m > min(a, b)``; an ``r x r`` minor has degree at most ``r`` in each
    variable, so it cannot vanish on that whole grid unless it is zero;
``probabilistic``
    maximum rank over random points of ``F_{q^m}`` with ``q^m > 2 d min(a, b)``
    (a lower bound, wrong with probability at most ``2^-trials``).
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from .errors import BudgetExceeded
from .field import FieldCtx, extension
from .kernels import rank_batch
from .mlmatrix import FormMatrix, ScalarMatrix, _pivot_sequence, all_vectors, eval_stack
from .polyops import det_poly

DEFAULT_BUDGET = 1 << 20
# evaluated entries held in memory at once
_CHUNK_ENTRIES = 1 << 22


def _lifted(M: FormMatrix, m: int):
    """Extension context and coefficient array of ``M`` over ``F_{q^m}``."""
    coef = M.coef_array()
    if m == 1:
        return M.ctx, coef
    ext = extension(M.ctx, m)
    table = np.array([ext.embed(c) for c in range(M.ctx.q)], dtype=np.int64)
    return ext.big, table[coef]


def grid_ranks(M: FormMatrix, m: int = 1, budget: int = DEFAULT_BUDGET,
               stop_at: int | None = None) -> np.ndarray:
    """Rank of ``M(p)`` for every ``p`` in ``(F_{q^m}^n)^d``, lexicographic order.

    With ``stop_at`` the scan may end early once that rank is seen; the
    returned array is then a prefix.
    """
    ctx, coef = _lifted(M, m)
    d, n = M.d, M.n
    a, b = M.shape
    total = ctx.q ** (d * n)
    if total > budget:
        raise BudgetExceeded(f"{ctx.q}^{d * n} = {total} points exceeds budget {budget}")
    if d == 0:
        return rank_batch(ctx, coef.reshape(1, a, b))
    vecs = all_vectors(ctx.q, n)
    rest = ctx.q ** (n * (d - 1))
    per_chunk = max(1, _CHUNK_ENTRIES // max(1, rest * a * b))
    out = []
    for start in range(0, len(vecs), per_chunk):
        grid = [vecs[start:start + per_chunk]] + [vecs] * (d - 1)
        ranks = rank_batch(ctx, eval_stack(M, grid, ctx=ctx, coef=coef))
        out.append(ranks)
        if stop_at is not None and ranks.size and ranks.max() >= stop_at:
            break
    return np.concatenate(out)


def sample_ranks(M: FormMatrix, count: int, seed: int = 0, m: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Ranks at ``count`` uniform points of ``(F_{q^m}^n)^d``; returns (points, ranks)."""
    ctx, coef = _lifted(M, m)
    a, b = M.shape
    rng = np.random.default_rng(seed)
    pts = rng.integers(0, ctx.q, size=(count, M.d, M.n), dtype=np.int64)
    if M.d == 0:
        mats = np.broadcast_to(coef.reshape(1, a, b), (count, a, b))
        return pts, rank_batch(ctx, mats)
    mats = np.empty((count, a, b), dtype=np.int64)
    for t in range(count):
        mats[t] = eval_stack(M, [pts[t, i][None, :] for i in range(M.d)], ctx=ctx, coef=coef)[0]
    return pts, rank_batch(ctx, mats)


def max_rank(M: FormMatrix, mode: str = "exhaustive", samples: int = 256, seed: int = 0,
             budget: int = DEFAULT_BUDGET) -> int:
    """Maximum rank of ``M(p)`` over ``p`` in ``(F^n)^d``.

    ``mode="sample"`` returns a lower bound from ``samples`` seeded points.
    """
    if M.is_zero():
        return 0
    if mode == "exhaustive":
        return int(grid_ranks(M, budget=budget, stop_at=min(M.shape)).max())
    if mode == "sample":
        return int(sample_ranks(M, samples, seed)[1].max())
    raise ValueError(f"unknown mode {mode!r}")


def max_rank_point(M: FormMatrix, budget: int = DEFAULT_BUDGET, samples: int = 4096,
                   seed: int = 0) -> tuple[int, tuple[tuple[int, ...], ...], bool]:
    """A point of maximal rank: ``(rank, point, exhaustive)``.

    Exhaustive (first maximiser in lexicographic order) when the grid fits
    in ``budget``, otherwise the best of ``samples`` seeded random points.
    """
    q, d, n = M.ctx.q, M.d, M.n
    if q ** (d * n) <= budget:
        ranks = grid_ranks(M, budget=budget, stop_at=min(M.shape))
        idx = int(np.argmax(ranks))
        vecs = list(itertools.product(range(q), repeat=n))
        digits = []
        rem = idx
        for _ in range(d):
            digits.append(rem % (q ** n))
            rem //= q ** n
        point = tuple(vecs[i] for i in reversed(digits))
        return int(ranks[idx]), point, True
    pts, ranks = sample_ranks(M, samples, seed)
    order = sorted(range(len(ranks)), key=lambda t: (-int(ranks[t]), pts[t].tolist()))
    t = order[0]
    return int(ranks[t]), tuple(tuple(int(x) for x in v) for v in pts[t]), False


def avg_rank(M: FormMatrix, budget: int = DEFAULT_BUDGET) -> Fraction:
    """Exact mean of ``rank M(p)`` over all ``p`` in ``(F^n)^d``."""
    ranks = grid_ranks(M, budget=budget)
    return Fraction(int(ranks.sum()), len(ranks))


def _ext_degree(q: int, bound: int) -> int:
    """Smallest ``m >= 1`` with ``q^m > bound``."""
    m = 1
    while q ** m <= bound:
        m += 1
    return m


def comm_rank(M: FormMatrix, mode: str = "auto", trials: int = 40, seed: int = 0,
              budget: int = DEFAULT_BUDGET, minor_budget: int = 2000) -> int:
    """Rank of ``M`` over the field of rational functions.

    ``mode`` is one of ``auto``, ``symbolic``, ``exhaustive``,
    ``probabilistic`` (see the module docstring).  ``auto`` takes a random
    lower bound, returns it if it is already ``min(a, b)``, and otherwise
    certifies it exhaustively or symbolically, whichever fits the budgets.
    """
    a, b = M.shape
    full = min(a, b)
    if full == 0 or M.is_zero():
        return 0
    if M.d == 0:
        return ScalarMatrix._raw(M.ctx, [[f.terms.get((), 0) for f in r] for r in M.entries]).rank()
    q = M.ctx.q
    if mode == "probabilistic":
        m = _ext_degree(q, 2 * M.d * full)
        return _sampled_lower_bound(M, m, trials, seed, full)
    if mode == "exhaustive":
        m = _ext_degree(q, full)
        return int(grid_ranks(M, m=m, budget=budget, stop_at=full).max())
    if mode == "symbolic":
        return _symbolic_cr(M, minor_budget, seed)
    if mode != "auto":
        raise ValueError(f"unknown mode {mode!r}")
    m = _ext_degree(q, 2 * M.d * full)
    lower = _sampled_lower_bound(M, m, 8, seed, full)
    if lower == full:
        return full
    m = _ext_degree(q, full)
    if (q ** m) ** (M.d * M.n) <= budget:
        return int(grid_ranks(M, m=m, budget=budget, stop_at=full).max())
    return _symbolic_cr(M, minor_budget, seed)


def _sampled_lower_bound(M: FormMatrix, m: int, trials: int, seed: int, full: int) -> int:
    best = 0
    rng = np.random.default_rng(seed)
    batch = 8
    done = 0
    while done < trials:
        k = min(batch, trials - done)
        _, ranks = sample_ranks(M, k, int(rng.integers(1 << 62)), m)
        best = max(best, int(ranks.max()))
        done += k
        if best == full:
            break
    return best


def _symbolic_cr(M: FormMatrix, minor_budget: int, seed: int) -> int:
    a, b = M.shape
    full = min(a, b)
    # a point of a large extension gives a candidate L and an L x L minor to certify
    m = _ext_degree(M.ctx.q, 2 * M.d * full)
    ctx, coef = _lifted(M, m)
    pts, ranks = sample_ranks(M, 8, seed, m)
    t = int(np.argmax(ranks))
    L = int(ranks[t])
    if L:
        mat = eval_stack(M, [pts[t, i][None, :] for i in range(M.d)], ctx=ctx, coef=coef)[0]
        prow, pcol = _pivot_sequence(ScalarMatrix.from_array(ctx, mat))
        if det_poly(M.submatrix(sorted(prow), sorted(pcol))).is_zero():
            raise AssertionError("minor nonzero at a point but zero as a polynomial")
    while L < full:
        k = L + 1
        n_minors = math.comb(a, k) * math.comb(b, k)
        if n_minors > minor_budget:
            raise BudgetExceeded(f"{n_minors} minors of size {k} exceeds budget {minor_budget}")
        found = False
        for rows in itertools.combinations(range(a), k):
            for cols in itertools.combinations(range(b), k):
                if not det_poly(M.submatrix(rows, cols)).is_zero():
                    found = True
                    break
            if found:
                break
        if not found:
            break
        L = k
    return L


def expected_partial_cr(M: FormMatrix, budget: int = DEFAULT_BUDGET, **cr_kwargs) -> Fraction:
    """Exact mean over ``p`` in ``F^n`` of the commutative rank of ``M[x_last = p]``."""
    if M.d == 0:
        return Fraction(comm_rank(M))
    q, n = M.ctx.q, M.n
    if q ** n > budget:
        raise BudgetExceeded(f"{q}^{n} partial points exceeds budget {budget}")
    last = M.blocks[-1]
    total = 0
    for v in itertools.product(range(q), repeat=n):
        total += comm_rank(M.partial_eval({last: v}), budget=budget, **cr_kwargs)
    return Fraction(total, q ** n)


# -- exact partition rank for d = 1 ----------------------------------------------


def iter_subspaces(ctx: FieldCtx, dim: int):
    """Every subspace of F^dim, as a tuple of basis rows in reduced echelon form."""
    q = ctx.q
    for k in range(dim + 1):
        for pivots in itertools.combinations(range(dim), k):
            free = [(r, c) for r, pc in enumerate(pivots) for c in range(pc + 1, dim)
                    if c not in pivots]
            for vals in itertools.product(range(q), repeat=len(free)):
                rows = [[0] * dim for _ in range(k)]
                for r, pc in enumerate(pivots):
                    rows[r][pc] = 1
                for (r, c), v in zip(free, vals):
                    rows[r][c] = v
                yield tuple(tuple(r) for r in rows)


def count_subspaces(q: int, dim: int) -> int:
    total = 0
    for k in range(dim + 1):
        num = den = 1
        for i in range(k):
            num *= q ** (dim - i) - 1
            den *= q ** (i + 1) - 1
        total += num // den
    return total


def slices(M: FormMatrix) -> list[ScalarMatrix]:
    """Scalar coefficient matrices ``M_j`` with ``M = sum_j x_{1,j} M_j`` (d = 1)."""
    ctx = M.ctx
    return [ScalarMatrix._raw(ctx, [[f.terms.get((j,), 0) for f in r] for r in M.entries])
            for j in range(M.n)]


def pr_exact_d1(M: FormMatrix, budget: int = 200_000) -> int:
    """Exact partition rank of a matrix of linear forms.

    ``PR(M) <= r`` iff some ``P, Q`` give ``P M Q`` a zero bottom-right
    ``(a - r1) x (b - r2)`` block with ``r1 + r2 <= r``.  The rows of ``P``
    spanning that block form a subspace ``X`` of ``F^a``; the largest valid
    column space is the common kernel of ``x^T M_j`` over ``x`` in ``X``.
    So ``PR = min_X (a - dim X) + rank [x^T M_j]``, which is enumerated over
    all subspaces ``X``.
    """
    if M.d != 1:
        raise ValueError("pr_exact_d1 needs d = 1")
    ctx = M.ctx
    a, b = M.shape
    if M.is_zero():
        return 0
    if a > b:
        return pr_exact_d1(M.transpose(), budget)
    if count_subspaces(ctx.q, a) > budget:
        raise BudgetExceeded(f"too many subspaces of F_{ctx.q}^{a}")
    mats = slices(M)
    best = min(a, b)
    for basis in iter_subspaces(ctx, a):
        dim = len(basis)
        if a - dim >= best:
            continue
        stack = []
        for x in basis:
            xm = ScalarMatrix._raw(ctx, [x])
            for Mj in mats:
                stack.append((xm @ Mj).rows[0])
        r = ScalarMatrix._raw(ctx, stack).rank() if stack else 0
        best = min(best, a - dim + r)
    return best
