"""Multiplicities of polynomials, the multiplicity Schwartz-Zippel inequality,
and exact symbolic determinants."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Sequence

from .errors import BudgetExceeded
from .field import FieldCtx
from .mform import Poly

# mult of the zero polynomial; callers must exclude f = 0
MULT_OF_ZERO = math.inf


def mult(f: Poly, point: Sequence[int]) -> int | float:
    """Order of vanishing of ``f`` at ``point``: the min degree of ``f(x + point)``."""
    if len(point) != f.nvars:
        raise ValueError(f"point has {len(point)} coordinates, polynomial has {f.nvars} variables")
    if f.is_zero():
        return MULT_OF_ZERO
    return int(f.shift(point).min_degree())


def multsz_check(f: Poly, S: Sequence[int] | None = None, budget: int = 1 << 20):
    """Both sides of ``sum_{p in S^n} mult(f, p) <= deg(f) |S|^(n-1)``.

    ``S`` defaults to the whole field.  Returns ``(lhs, rhs, holds)`` with
    ``rhs`` a Fraction (it is fractional only when ``n = 0``).
    """
    if f.is_zero():
        raise ValueError("the inequality needs a nonzero polynomial")
    ctx = f.ctx
    S = list(ctx.elements()) if S is None else [ctx.code(s) for s in S]
    if len(S) ** f.nvars > budget:
        raise BudgetExceeded(f"{len(S)}^{f.nvars} points exceeds budget {budget}")
    lhs = sum(mult(f, p) for p in itertools.product(S, repeat=f.nvars))
    rhs = f.total_degree() * Fraction(len(S)) ** (f.nvars - 1)
    return lhs, rhs, lhs <= rhs


def det_poly(M) -> Poly:
    """Determinant of a square matrix of polynomials or a FormMatrix.

    Laplace expansion along rows, memoised on the set of used columns
    (``2^n`` subproblems).
    """
    from .mlmatrix import FormMatrix

    if isinstance(M, FormMatrix):
        a, b = M.shape
        if a != b:
            raise ValueError("determinant of a non-square matrix")
        d = max(M.blocks, default=0)
        rows = [[f.to_poly(d) for f in r] for r in M.entries]
        ctx, nvars = M.ctx, d * M.n
    else:
        rows = [list(r) for r in M]
        if any(len(r) != len(rows) for r in rows):
            raise ValueError("determinant of a non-square matrix")
        if not rows:
            raise ValueError("empty matrix without a field")
        ctx, nvars = rows[0][0].ctx, rows[0][0].nvars
    return _det(ctx, nvars, rows)


def _det(ctx: FieldCtx, nvars: int, rows: list[list[Poly]]) -> Poly:
    n = len(rows)
    one = Poly.const(ctx, nvars, 1)
    if n == 0:
        return one
    memo: dict[int, Poly] = {(1 << n) - 1: one}

    def minor(used: int) -> Poly:
        if used in memo:
            return memo[used]
        k = bin(used).count("1")
        acc = Poly(ctx, nvars, check=False)
        pos = 0
        for j in range(n):
            if used >> j & 1:
                continue
            entry = rows[k][j]
            if entry.terms:
                sub = minor(used | 1 << j)
                if sub.terms:
                    t = entry * sub
                    acc = acc - t if pos % 2 else acc + t
            pos += 1
        memo[used] = acc
        return acc

    return minor(0)
