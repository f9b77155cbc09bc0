"""Schur complements over a field and differential Schur complements.

For an invertible pivot block ``A`` (rows ``R``, columns ``C``) of ``M``,

    M - M/A = (A; C) A^{-1} (A  B),

a sum of ``r`` outer products.  Over the truncated local ring at ``p`` the
left factors ``u_i`` and right factors ``v_i`` have one component per subset
of blocks, and the full-subset component of ``u_i v_i`` splits as the sum
over ``S`` of ``u_{i,S} ⊗ v_{i,[d]-S}``.  Those pieces are the rank-one terms
returned by :func:`diff_schur`; the remainder is ``[M/A]_p``.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .errors import BoundViolation, SingularMatrix
from .field import FieldCtx
from .localring import LocalElem, expand, lr_matinv, lr_matmul, mask_blocks
from .mform import MultilinearForm, mul_disjoint
from .mlmatrix import FormMatrix, ScalarMatrix, eval_matrix, scalar_inverse


# -- scalar Schur complement --------------------------------------------------------


def schur_scalar(M: ScalarMatrix, rows: Sequence[int], cols: Sequence[int]) -> ScalarMatrix:
    """Zero-padded ``D - C A^{-1} B`` for the pivot block on ``rows x cols``."""
    rows, cols = list(rows), list(cols)
    if len(rows) != len(cols):
        raise ValueError("pivot block must be square")
    a, b = M.shape
    if any(not 0 <= i < a for i in rows) or any(not 0 <= j < b for j in cols):
        raise IndexError("pivot index out of range")
    ctx = M.ctx
    Ainv = scalar_inverse(M.submatrix(rows, cols))
    rset, cset = set(rows), set(cols)
    out = [[0] * b for _ in range(a)]
    for i in range(a):
        if i in rset:
            continue
        # row i of C A^{-1}
        ci = [M.rows[i][c] for c in cols]
        w = [0] * len(rows)
        for k, x in enumerate(ci):
            if x:
                for t, y in enumerate(Ainv.rows[k]):
                    w[t] = ctx.add(w[t], ctx.mul(x, y))
        for j in range(b):
            if j in cset:
                continue
            s = M.rows[i][j]
            for t, r in enumerate(rows):
                if w[t] and M.rows[r][j]:
                    s = ctx.sub(s, ctx.mul(w[t], M.rows[r][j]))
            out[i][j] = s
    return ScalarMatrix._raw(ctx, out)


# -- rank-one terms --------------------------------------------------------------------


@dataclass(frozen=True)
class RankOneTerm:
    """``u ⊗ v`` with ``u`` over ``M_S`` (length ``a``) and ``v`` over ``M_{[d]-S}`` (length ``b``)."""

    S: tuple[int, ...]
    u: tuple[MultilinearForm, ...]
    v: tuple[MultilinearForm, ...]

    @property
    def ctx(self) -> FieldCtx:
        return self.u[0].ctx

    @property
    def n(self) -> int:
        return self.u[0].n

    def is_zero(self) -> bool:
        return all(f.is_zero() for f in self.u) or all(f.is_zero() for f in self.v)

    def matrix(self, blocks: Sequence[int] | None = None) -> FormMatrix:
        blocks = tuple(sorted(set(self.S) | set(self.v[0].blocks))) if blocks is None else tuple(blocks)
        ents = [[mul_disjoint(x, y) for y in self.v] for x in self.u]
        return FormMatrix(self.ctx, blocks, self.n, ents)

    def to_json(self) -> dict:
        return {"S": list(self.S), "u": [f.to_json() for f in self.u],
                "v": [f.to_json() for f in self.v]}

    @classmethod
    def from_json(cls, ctx: FieldCtx, doc: dict) -> "RankOneTerm":
        u = tuple(MultilinearForm.from_json(ctx, f) for f in doc["u"])
        v = tuple(MultilinearForm.from_json(ctx, f) for f in doc["v"])
        S = tuple(int(s) for s in doc["S"])
        if not u or not v:
            raise ValueError("rank-one term with an empty vector")
        if any(f.blocks != S for f in u):
            raise ValueError(f"u entries must be forms on {S}")
        comp = v[0].blocks
        if any(f.blocks != comp for f in v) or set(comp) & set(S):
            raise ValueError("v entries must share a block set disjoint from S")
        return cls(S, u, v)


def terms_value(terms: Sequence[RankOneTerm], ctx: FieldCtx, blocks: Sequence[int], n: int,
                a: int, b: int) -> FormMatrix:
    """``sum u ⊗ v`` as an ``a x b`` matrix on ``blocks``."""
    blocks = tuple(blocks)
    acc = [[MultilinearForm.zero(ctx, blocks, n)] * b for _ in range(a)]
    for t in terms:
        if len(t.u) != a or len(t.v) != b:
            raise ValueError(f"term of shape {len(t.u)}x{len(t.v)} in a {a}x{b} sum")
        for i, x in enumerate(t.u):
            if not x.terms:
                continue
            row = acc[i]
            for j, y in enumerate(t.v):
                if y.terms:
                    row[j] = row[j] + mul_disjoint(x, y)
    return FormMatrix(ctx, blocks, n, acc)


# -- audit of certified bounds ----------------------------------------------------------


@dataclass
class SchurAudit:
    """One ``diff_schur`` call: the two certified quantities and their bounds."""

    d: int
    r: int
    n_terms: int
    term_bound: int
    remainder_cr: int | None
    rank_bound: int | None

    @property
    def ok(self) -> bool:
        if self.n_terms > self.term_bound:
            return False
        return self.remainder_cr is None or self.remainder_cr <= self.rank_bound


_audit_stack: list[list[SchurAudit]] = []


@contextlib.contextmanager
def schur_audit() -> Iterator[list[SchurAudit]]:
    """Collect a :class:`SchurAudit` for every ``diff_schur`` call in the block."""
    log: list[SchurAudit] = []
    _audit_stack.append(log)
    try:
        yield log
    finally:
        _audit_stack.remove(log)


# -- differential Schur complement ------------------------------------------------------


@dataclass
class DiffSchur:
    """Result of :func:`diff_schur`; unpacks as ``(remainder, terms)``."""

    remainder: FormMatrix
    terms: list[RankOneTerm]
    rows: tuple[int, ...]
    cols: tuple[int, ...]
    point: tuple[tuple[int, ...], ...]
    audit: SchurAudit | None = None
    base_schur: ScalarMatrix | None = field(default=None, repr=False)

    def __iter__(self):
        yield self.remainder
        yield self.terms

    @property
    def r(self) -> int:
        return len(self.rows)

    def to_json(self) -> dict:
        return {"remainder": self.remainder.to_json(), "terms": [t.to_json() for t in self.terms],
                "rows": list(self.rows), "cols": list(self.cols),
                "point": [list(v) for v in self.point]}


def rank_bound(M: FormMatrix, point, r: int, **cr_kwargs) -> int:
    """``sum over S ⊆ [d] of (rank M[p_S] - r)``."""
    from .ranks import comm_rank

    total = 0
    for mask in range(1 << M.d):
        S = mask_blocks(mask)
        sub = M.partial_eval({b: point[b - 1] for b in S}) if S else M
        total += comm_rank(sub, **cr_kwargs) - r
    return total


def diff_schur(M: FormMatrix, rows: Sequence[int], cols: Sequence[int], point,
               check: bool = True, cr_kwargs: dict | None = None) -> DiffSchur:
    """``[M/A]_p`` and the rank-one terms of ``M - [M/A]_p``.

    ``rows`` and ``cols`` select the pivot block ``A``, which must be
    invertible at ``point``.  With ``check`` the reconstruction identity,
    the consistency of the constant part with :func:`schur_scalar`, the term
    count bound ``2^d r`` and the rank bound of :func:`rank_bound` are all
    asserted (:class:`BoundViolation` on failure).
    """
    from .ranks import comm_rank

    d, n, ctx = M.d, M.n, M.ctx
    if M.blocks != tuple(range(1, d + 1)):
        raise ValueError(f"diff_schur needs blocks 1..{d}, got {M.blocks}")
    a, b = M.shape
    rows, cols = tuple(rows), tuple(cols)
    if len(rows) != len(cols):
        raise ValueError("pivot block must be square")
    if len(set(rows)) != len(rows) or len(set(cols)) != len(cols):
        raise ValueError("repeated pivot index")
    if any(not 0 <= i < a for i in rows) or any(not 0 <= j < b for j in cols):
        raise IndexError("pivot index out of range")
    point = tuple(tuple(ctx.code(c) for c in v) for v in point)
    if len(point) != d or any(len(v) != n for v in point):
        raise ValueError(f"point must have {d} vectors of length {n}")
    r = len(rows)
    full = (1 << d) - 1

    Mp = eval_matrix(M, point)
    try:
        scalar_inverse(Mp.submatrix(rows, cols))
    except SingularMatrix:
        raise SingularMatrix("pivot block is singular at the base point") from None

    loc = [[expand(f, point, d) for f in row] for row in M.entries]
    zero = LocalElem(ctx, d, n, point, {})
    A = [[loc[i][j] for j in cols] for i in rows]
    Ainv = lr_matinv(A)
    left = [[loc[i][j] for j in cols] for i in range(a)]          # (A; C), a x r
    right = lr_matmul(Ainv, [loc[i] for i in rows], zero)        # A^{-1} (A B), r x b

    terms: list[RankOneTerm] = []
    for i in range(r):
        ucol = [left[k][i] for k in range(a)]
        vrow = right[i]
        for mask in range(1 << d):
            u = tuple(x.component(mask) for x in ucol)
            v = tuple(y.component(full ^ mask) for y in vrow)
            t = RankOneTerm(mask_blocks(mask), u, v)
            if not t.is_zero():
                terms.append(t)

    # M/A on the complementary block, computed on its own: D - C A^{-1} B
    rset, cset = set(rows), set(cols)
    zf = MultilinearForm.zero(ctx, M.blocks, n)
    rem = [[zf] * b for _ in range(a)]
    base = [[0] * b for _ in range(a)]
    rest_rows = [i for i in range(a) if i not in rset]
    rest_cols = [j for j in range(b) if j not in cset]
    if rest_rows and rest_cols:
        C = [[loc[i][j] for j in cols] for i in rest_rows]
        B = [[loc[i][j] for j in rest_cols] for i in rows]
        CAB = lr_matmul(lr_matmul(C, Ainv, zero), B, zero)
        for x, i in enumerate(rest_rows):
            for y, j in enumerate(rest_cols):
                s = loc[i][j] - CAB[x][y]
                rem[i][j] = s.component(full)
                base[i][j] = s.value
    remainder = FormMatrix(ctx, M.blocks, n, rem)
    result = DiffSchur(remainder, terms, rows, cols, point, base_schur=ScalarMatrix._raw(ctx, base))

    if check:
        if remainder + terms_value(terms, ctx, M.blocks, n, a, b) != M:
            raise BoundViolation("remainder plus rank-one terms does not reconstruct M")
        if result.base_schur != schur_scalar(Mp, rows, cols):
            raise BoundViolation("constant part of M/A disagrees with the scalar Schur complement")
        kw = cr_kwargs or {}
        audit = SchurAudit(d, r, len(terms), (1 << d) * r, comm_rank(remainder, **kw),
                           rank_bound(M, point, r, **kw))
        result.audit = audit
        for log in _audit_stack:
            log.append(audit)
        if not audit.ok:
            raise BoundViolation(f"diff_schur bound failed: {audit}")
    return result
