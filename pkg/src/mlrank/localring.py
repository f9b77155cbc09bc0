"""Truncated local ring at a point, and the multilinear approximation map.

A function ``f`` defined near ``p = (p_1, ..., p_d)`` is recorded through
``f(p_1 + t_1 y_1, ..., p_d + t_d y_d)`` modulo ``t_i^2``: one component per
subset ``S`` of blocks, the coefficient of ``prod_{i in S} t_i``, which is a
multilinear form in the direction variables ``y_S``.  Subsets are stored as
bitmasks (bit ``i-1`` for block ``i``).  The approximation ``[f]_p`` is the
component of the full subset, read back in the ``x`` variables.

:func:`approx_derivative_oracle` computes the same map independently, by
differentiating a quotient of polynomials.
"""

from __future__ import annotations

import itertools
from typing import Sequence

from .errors import FieldMismatch, NotAUnit
from .field import FieldCtx
from .mform import MultilinearForm, Poly, mul_disjoint


def mask_blocks(mask: int) -> tuple[int, ...]:
    return tuple(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


def blocks_mask(blocks) -> int:
    m = 0
    for b in blocks:
        m |= 1 << (b - 1)
    return m


class LocalElem:
    """Element of the truncated local ring at ``point`` (components by subset mask)."""

    __slots__ = ("ctx", "d", "n", "point", "comps")

    def __init__(self, ctx: FieldCtx, d: int, n: int, point, comps: dict[int, MultilinearForm]):
        self.ctx = ctx
        self.d = d
        self.n = n
        self.point = point
        self.comps = {m: f for m, f in comps.items() if f.terms}

    @classmethod
    def const(cls, ctx: FieldCtx, d: int, n: int, point, c: int) -> "LocalElem":
        return cls(ctx, d, n, point, {0: MultilinearForm.scalar(ctx, n, c)})

    def like(self, comps: dict[int, MultilinearForm]) -> "LocalElem":
        return LocalElem(self.ctx, self.d, self.n, self.point, comps)

    def component(self, mask: int) -> MultilinearForm:
        f = self.comps.get(mask)
        if f is None:
            return MultilinearForm.zero(self.ctx, mask_blocks(mask), self.n)
        return f

    @property
    def value(self) -> int:
        """The constant component, i.e. the value at the base point."""
        f = self.comps.get(0)
        return f.terms.get((), 0) if f is not None else 0

    def is_zero(self) -> bool:
        return not self.comps

    def _check(self, other: "LocalElem"):
        if self.ctx != other.ctx:
            raise FieldMismatch("local elements over different fields")
        if self.d != other.d or self.n != other.n or self.point != other.point:
            raise ValueError("local elements at different base points")

    def __eq__(self, other):
        if not isinstance(other, LocalElem):
            return NotImplemented
        return (self.ctx == other.ctx and self.d == other.d and self.point == other.point
                and self.comps == other.comps)

    def __add__(self, other: "LocalElem") -> "LocalElem":
        self._check(other)
        out = dict(self.comps)
        for m, f in other.comps.items():
            out[m] = out[m] + f if m in out else f
        return self.like(out)

    def __neg__(self) -> "LocalElem":
        return self.like({m: -f for m, f in self.comps.items()})

    def __sub__(self, other: "LocalElem") -> "LocalElem":
        return self + (-other)

    def scale(self, c: int) -> "LocalElem":
        return self.like({m: f.scale(c) for m, f in self.comps.items()})

    def __mul__(self, other: "LocalElem") -> "LocalElem":
        return lr_mul(self, other)

    def to_json(self) -> list[dict]:
        return [{"S": list(mask_blocks(m)), "form": f.to_json()} for m, f in sorted(self.comps.items())]

    def __repr__(self):
        body = ", ".join(f"{set(mask_blocks(m)) or '{}'}: {f.pretty(greek=False)}"
                         for m, f in sorted(self.comps.items()))
        return f"LocalElem({{{body}}})"


def _point_tuple(ctx: FieldCtx, point, d: int, n: int) -> tuple[tuple[int, ...], ...]:
    pt = tuple(tuple(ctx.code(c) for c in v) for v in point)
    if len(pt) != d or any(len(v) != n for v in pt):
        raise ValueError(f"base point must have {d} vectors of length {n}")
    return pt


def expand(f: MultilinearForm, point, d: int | None = None) -> LocalElem:
    """Expansion of a multilinear form on ``[d]`` around ``point``."""
    d = len(f.blocks) if d is None else d
    if f.blocks != tuple(range(1, d + 1)):
        raise ValueError(f"expand needs a form on blocks 1..{d}, got {f.blocks}")
    pt = _point_tuple(f.ctx, point, d, f.n)
    comps = {}
    for mask in range(1 << d):
        fixed = {b: pt[b - 1] for b in range(1, d + 1) if not mask >> (b - 1) & 1}
        comps[mask] = f.partial_eval(fixed)
    return LocalElem(f.ctx, d, f.n, pt, comps)


def expand_poly(g: Poly, point, d: int, n: int) -> LocalElem:
    """Expansion of an arbitrary polynomial in ``d*n`` block-major variables."""
    ctx = g.ctx
    if g.nvars != d * n:
        raise ValueError(f"polynomial has {g.nvars} variables, expected {d * n}")
    pt = _point_tuple(ctx, point, d, n)
    one = LocalElem.const(ctx, d, n, pt, 1)
    var_elems = []
    for b in range(1, d + 1):
        for j in range(n):
            var_elems.append(LocalElem(ctx, d, n, pt, {
                0: MultilinearForm.scalar(ctx, n, pt[b - 1][j]),
                1 << (b - 1): MultilinearForm.var(ctx, b, j, n),
            }))
    powers: dict[tuple[int, int], LocalElem] = {}
    total = LocalElem(ctx, d, n, pt, {})
    for e, c in g.terms.items():
        term = LocalElem.const(ctx, d, n, pt, c)
        for v, k in enumerate(e):
            if k:
                if (v, k) not in powers:
                    acc = one
                    for _ in range(k):
                        acc = lr_mul(acc, var_elems[v])
                    powers[(v, k)] = acc
                term = lr_mul(term, powers[(v, k)])
        total = total + term
    return total


def lr_mul(f: LocalElem, g: LocalElem) -> LocalElem:
    """Product; components convolve over disjoint unions of subsets."""
    f._check(g)
    out: dict[int, MultilinearForm] = {}
    for m1, a in f.comps.items():
        for m2, b in g.comps.items():
            if m1 & m2:
                continue
            prod = mul_disjoint(a, b)
            m = m1 | m2
            out[m] = out[m] + prod if m in out else prod
    return f.like(out)


def lr_inv(f: LocalElem) -> LocalElem:
    """Inverse of a unit by the finite geometric series in its nilpotent part."""
    c = f.value
    if c == 0:
        raise NotAUnit("element vanishes at the base point")
    ctx = f.ctx
    cinv = ctx.inv(c)
    nil = f.like({m: g for m, g in f.comps.items() if m})
    step = nil.scale(ctx.neg(cinv))
    term = LocalElem.const(ctx, f.d, f.n, f.point, 1)
    total = term
    for _ in range(f.d):
        term = lr_mul(term, step)
        if term.is_zero():
            break
        total = total + term
    return total.scale(cinv)


def approx_extract(f: LocalElem) -> MultilinearForm:
    """The multilinear approximation: the full-subset component."""
    return f.component((1 << f.d) - 1)


# -- matrices over the truncated ring ----------------------------------------


def lr_matmul(A: Sequence[Sequence[LocalElem]], B: Sequence[Sequence[LocalElem]],
              zero: LocalElem) -> list[list[LocalElem]]:
    out = []
    for row in A:
        new_row = []
        for j in range(len(B[0]) if B else 0):
            acc = zero
            for a, brow in zip(row, B):
                b = brow[j]
                if a.comps and b.comps:
                    acc = acc + lr_mul(a, b)
            new_row.append(acc)
        out.append(new_row)
    return out


def lr_matinv(A: Sequence[Sequence[LocalElem]]) -> list[list[LocalElem]]:
    """Inverse of a square matrix whose value at the base point is invertible.

    Writes ``A = A0 + N`` with ``A0`` the constant part; ``N`` raises subset
    size, so ``A^{-1} = sum_{j<=d} (-A0^{-1} N)^j A0^{-1}`` is exact.
    """
    from .mlmatrix import ScalarMatrix, scalar_inverse

    r = len(A)
    if r == 0:
        return []
    f0 = A[0][0]
    ctx, d, n, pt = f0.ctx, f0.d, f0.n, f0.point
    A0 = ScalarMatrix._raw(ctx, [[x.value for x in row] for row in A])
    A0inv = scalar_inverse(A0)
    zero = LocalElem(ctx, d, n, pt, {})
    const = [[LocalElem.const(ctx, d, n, pt, x) for x in row] for row in A0inv.rows]
    neg_const = [[LocalElem.const(ctx, d, n, pt, ctx.neg(x)) for x in row] for row in A0inv.rows]
    nil = [[x.like({m: g for m, g in x.comps.items() if m}) for x in row] for row in A]
    step = lr_matmul(neg_const, nil, zero)
    term = const
    total = const
    for _ in range(d):
        term = lr_matmul(step, term, zero)
        if all(x.is_zero() for row in term for x in row):
            break
        total = [[x + y for x, y in zip(r1, r2)] for r1, r2 in zip(total, term)]
    return total


# -- derivative oracle ------------------------------------------------------------


def block_degrees(g: Poly, d: int, n: int) -> set[tuple[int, ...]]:
    return {tuple(sum(e[b * n:(b + 1) * n]) for b in range(d)) for e in g.terms}


def approx_derivative_oracle(num: Poly, den: Poly, point, d: int, n: int) -> MultilinearForm:
    """``[num/den]_p`` from mixed partial derivatives, one per block, at ``p``.

    Uses ``d/dx (N / D^k) = (N' D - k N D') / D^(k+1)``; intended for small
    ``d * n`` since the numerators grow quickly.
    """
    ctx = num.ctx
    if num.nvars != d * n or den.nvars != d * n:
        raise ValueError(f"polynomials must have {d * n} variables")
    if den.is_zero():
        raise ZeroDivisionError("zero denominator")
    dn, dd = block_degrees(num, d, n), block_degrees(den, d, n)
    if len(dd) != 1 or len(dn) > 1:
        raise ValueError("numerator and denominator must be multi-homogeneous")
    if dn:
        (degn,), (degd,) = dn, dd
        if any(a - b != 1 for a, b in zip(degn, degd)):
            raise ValueError(f"quotient has degree {tuple(a - b for a, b in zip(degn, degd))}, "
                             f"expected all ones")
    pt = _point_tuple(ctx, point, d, n)
    flat = [c for v in pt for c in v]
    dval = den.evaluate(flat)
    if dval == 0:
        raise ZeroDivisionError("denominator vanishes at the base point")
    derivs_den = {}

    def dden(v):
        if v not in derivs_den:
            derivs_den[v] = den.derivative(v)
        return derivs_den[v]

    memo: dict[tuple[int, ...], tuple[Poly, int]] = {(): (num, 1)}

    def rational(prefix: tuple[int, ...]) -> tuple[Poly, int]:
        if prefix not in memo:
            N, k = rational(prefix[:-1])
            v = (len(prefix) - 1) * n + prefix[-1]
            memo[prefix] = (N.derivative(v) * den - (N * dden(v)).scale(k % ctx.p), k + 1)
        return memo[prefix]

    terms = {}
    for idx in itertools.product(range(n), repeat=d):
        N, k = rational(idx)
        val = ctx.div(N.evaluate(flat), ctx.pow(dval, k))
        if val:
            terms[idx] = val
    return MultilinearForm(ctx, range(1, d + 1), n, terms, check=False)
