"""Certified partition-rank decompositions.

:func:`pr_decompose` peels off differential Schur complements at points of
maximal rank until the commutative rank reaches zero.  Over small fields a
round may fail to lower the commutative rank; the matrix is then lifted to
an extension where the constant of :func:`bound_constant` is finite, and the
result is pushed back with :func:`lift_project`.

:func:`pr_decompose_d1` is the separate compression algorithm for matrices of
linear forms; it also returns the normal form ``P M Q`` with a zero corner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import BoundViolation, BudgetExceeded, FieldMismatch, NoProgress
from .field import Extension, FieldCtx, extension
from .mform import MultilinearForm
from .mlmatrix import (FormMatrix, ScalarMatrix, _pivot_sequence, eval_matrix,
                       find_invertible_submatrix, scalar_inverse)
from .ranks import DEFAULT_BUDGET, comm_rank, max_rank_point
from .schur import RankOneTerm, diff_schur, terms_value

INF = math.inf


# -- the constant -----------------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    d: int
    q: int | float
    constant: Fraction | None
    denominator: int | None

    @property
    def valid(self) -> bool:
        return self.constant is not None

    def __str__(self):
        if not self.valid:
            return f"C({self.d},{self.q}) invalid (denominator {self.denominator})"
        return f"C({self.d},{self.q}) = {self.constant}"


def bound_constant(d: int, q) -> BoundReport:
    """``C(d,q) = 2^d (q-1)^d / ((2^d - 1)(q-1)^d - (2^d - 2) q^d)``.

    ``q`` may be ``math.inf`` (or ``None``) for an infinite field, where the
    constant is ``2^d``.  The report is invalid when the denominator is not
    positive.
    """
    if d < 0:
        raise ValueError("d must be nonnegative")
    if q is None or q == INF:
        return BoundReport(d, INF, Fraction(2 ** d), None)
    q = int(q)
    if q < 2:
        raise ValueError("q must be at least 2")
    den = (2 ** d - 1) * (q - 1) ** d - (2 ** d - 2) * q ** d
    if den <= 0:
        return BoundReport(d, q, None, den)
    return BoundReport(d, q, Fraction(2 ** d * (q - 1) ** d, den), den)


def smallest_valid_extension(d: int, q: int, limit: int = 64) -> int:
    """Smallest ``e >= 1`` with ``bound_constant(d, q^e)`` valid."""
    for e in range(1, limit + 1):
        if bound_constant(d, q ** e).valid:
            return e
    raise ValueError(f"no extension degree up to {limit} makes C({d}, {q}^e) finite")


# -- decompositions -------------------------------------------------------------------


@dataclass
class PartitionDecomposition:
    """Rank-one terms whose sum is an ``a x b`` matrix on ``blocks``."""

    ctx: FieldCtx
    blocks: tuple[int, ...]
    n: int
    a: int
    b: int
    terms: list[RankOneTerm] = field(default_factory=list)
    log: list[dict] = field(default_factory=list)

    @property
    def d(self) -> int:
        return len(self.blocks)

    def __len__(self):
        return len(self.terms)

    def value(self) -> FormMatrix:
        return terms_value(self.terms, self.ctx, self.blocks, self.n, self.a, self.b)

    def subset_counts(self) -> dict[tuple[int, ...], int]:
        out: dict[tuple[int, ...], int] = {}
        for t in self.terms:
            out[t.S] = out.get(t.S, 0) + 1
        return dict(sorted(out.items(), key=lambda kv: (len(kv[0]), kv[0])))

    def to_json(self) -> dict:
        return {"field": self.ctx.to_json(), "d": self.d, "n": self.n, "rows": self.a,
                "cols": self.b, "blocks": list(self.blocks),
                "terms": [t.to_json() for t in self.terms], "log": self.log}

    @classmethod
    def from_json(cls, doc: dict, like: FormMatrix | None = None) -> "PartitionDecomposition":
        """Parse a decomposition; shape fields may be omitted when ``like`` is given."""
        if "field" in doc:
            ctx = FieldCtx.from_json(doc["field"])
        elif like is not None:
            ctx = like.ctx
        else:
            raise ValueError("decomposition without a field")
        terms = [RankOneTerm.from_json(ctx, t) for t in doc.get("terms", [])]
        if like is not None:
            blocks, n, (a, b) = like.blocks, like.n, like.shape
        else:
            d = int(doc["d"])
            blocks = tuple(doc.get("blocks", range(1, d + 1)))
            n, a, b = int(doc["n"]), int(doc["rows"]), int(doc["cols"])
        for t in terms:
            if len(t.u) != a or len(t.v) != b:
                raise ValueError(f"term of shape {len(t.u)}x{len(t.v)}, expected {a}x{b}")
            if tuple(sorted(t.S + t.v[0].blocks)) != tuple(blocks) or t.n != n:
                raise ValueError("term does not split the matrix blocks")
        return cls(ctx, tuple(blocks), n, a, b, terms, list(doc.get("log", [])))


def _empty(M: FormMatrix) -> PartitionDecomposition:
    a, b = M.shape
    return PartitionDecomposition(M.ctx, M.blocks, M.n, a, b)


def pr_decompose(M: FormMatrix, allow_extension: bool = False,
                 point_budget: int = DEFAULT_BUDGET, samples: int = 4096, seed: int = 0,
                 check: bool = True, cr_kwargs: dict | None = None,
                 eager_extension: bool = False) -> PartitionDecomposition:
    """Decompose ``M`` by iterated differential Schur complements.

    Each round takes a point of maximal rank (exhaustive search when the grid
    has at most ``point_budget`` points, else the best of ``samples`` seeded
    points), pivots on the first ``r`` pivots of ``M(p)`` and continues with
    the remainder.  If a round does not lower the commutative rank,
    :class:`NoProgress` is raised unless ``allow_extension`` is set, in which
    case the whole computation restarts over ``F_{q^e}`` and is projected
    back.  ``eager_extension`` lifts up front whenever the constant is not
    finite over the base field.  With ``check`` every postcondition is
    asserted.
    """
    kw = dict(cr_kwargs or {})
    if M.blocks != tuple(range(1, M.d + 1)):
        raise ValueError(f"pr_decompose needs blocks 1..{M.d}, got {M.blocks}")
    e = smallest_valid_extension(M.d, M.ctx.q)
    if eager_extension and e > 1:
        D = _extended(M, e, "eager", point_budget, samples, seed, check, kw)
    else:
        try:
            D = _iterate(M, point_budget, samples, seed, check, kw)
        except NoProgress as exc:
            if not allow_extension or e == 1:
                raise
            D = _extended(M, e, str(exc), point_budget, samples, seed, check, kw)
    if check:
        if D.value() != M:
            raise BoundViolation("decomposition does not reconstruct M")
        rep = _count_bound(M, D, kw)
        if rep is not None and len(D) > rep:
            raise BoundViolation(f"{len(D)} terms exceed the certified bound {rep}")
    return D


def _extended(M: FormMatrix, e: int, reason: str, point_budget: int, samples: int, seed: int,
              check: bool, kw: dict) -> PartitionDecomposition:
    ext = extension(M.ctx, e)
    DK = _iterate(M.lift(ext), point_budget, samples, seed, check, kw)
    D = lift_project(DK, ext)
    D.log = [{"extension_degree": e, "reason": reason}] + DK.log
    return D


def _extension_degree(D: PartitionDecomposition) -> int:
    return int(D.log[0].get("extension_degree", 1)) if D.log else 1


def _count_bound(M: FormMatrix, D: PartitionDecomposition, kw: dict) -> Fraction | None:
    """``e C(d, q^e) CR(M)`` when the run is covered by the counting argument."""
    if not D.log or not all(rec.get("exhaustive", True) for rec in D.log):
        return None
    e = _extension_degree(D)
    rep = bound_constant(M.d, M.ctx.q ** e)
    if not rep.valid:
        return None
    return e * rep.constant * comm_rank(M, **kw)


def _iterate(M: FormMatrix, point_budget: int, samples: int, seed: int, check: bool,
             kw: dict) -> PartitionDecomposition:
    D = _empty(M)
    cur = M
    k = comm_rank(cur, **kw)
    it = 0
    while k > 0:
        r, p, exhaustive = max_rank_point(cur, budget=point_budget, samples=samples, seed=seed + it)
        if r == 0:
            raise BudgetExceeded("no point with a nonzero evaluation found within the budget")
        rows, cols = find_invertible_submatrix(cur, p, r)
        res = diff_schur(cur, rows, cols, p, check=check, cr_kwargs=kw)
        k_next = comm_rank(res.remainder, **kw)
        rec = {"iteration": it, "point": [list(v) for v in p], "rows": list(rows),
               "cols": list(cols), "r": r, "cr_before": k, "cr_after": k_next,
               "terms": len(res.terms), "exhaustive": exhaustive,
               "seed": None if exhaustive else seed + it, "extension_degree": 1}
        if k_next >= k:
            raise NoProgress(f"round {it}: commutative rank {k} -> {k_next} over {M.ctx}")
        D.terms.extend(res.terms)
        D.log.append(rec)
        cur, k = res.remainder, k_next
        it += 1
    if not cur.is_zero():
        raise BoundViolation("commutative rank zero but the remainder is nonzero")
    return D


# -- field extension transfer ---------------------------------------------------------


def lift_project(DK: PartitionDecomposition, ext: Extension) -> PartitionDecomposition:
    """Push a decomposition over ``ext.big`` down to ``ext.small``.

    Each term ``u ⊗ v`` with ``u = sum_i w^i u_i`` (``u_i`` over the small
    field) becomes the terms ``u_i ⊗ φ(w^i v)``; ``φ`` keeps the coordinate
    of ``1``.  The value is preserved when it has small-field coefficients.
    """
    if DK.ctx != ext.big:
        raise FieldMismatch(f"decomposition over {DK.ctx}, extension is {ext.big}")
    small, big = ext.small, ext.big
    out = PartitionDecomposition(small, DK.blocks, DK.n, DK.a, DK.b, log=list(DK.log))
    wpow = [big.pow(big.generator_code, i) for i in range(ext.e)]
    for t in DK.terms:
        coords = [{idx: ext.coords(c) for idx, c in f.terms.items()} for f in t.u]
        for i in range(ext.e):
            u = tuple(MultilinearForm(small, f.blocks, f.n,
                                      {idx: cs[i] for idx, cs in fc.items() if cs[i]}, check=False)
                      for f, fc in zip(t.u, coords))
            if all(f.is_zero() for f in u):
                continue
            wi = wpow[i]
            v = tuple(f.map_coeffs(small, lambda c, wi=wi: ext.project_phi(big.mul(wi, c)))
                      for f in t.v)
            term = RankOneTerm(t.S, u, v)
            if not term.is_zero():
                out.terms.append(term)
    value_big = DK.value()
    for row in value_big.entries:
        for f in row:
            if not all(ext.in_base(c) for c in f.terms.values()):
                raise FieldMismatch("decomposed matrix has coefficients outside the base field")
    expected = value_big.map_field(small, ext.pull)
    if out.value() != expected:
        raise BoundViolation("projection changed the decomposed matrix")
    return out


# -- degree one ---------------------------------------------------------------------


def rank_normal_form(A: ScalarMatrix) -> tuple[ScalarMatrix, ScalarMatrix, int]:
    """Invertible ``P, Q`` with ``P A Q = [[I_r, 0], [0, 0]]``."""
    ctx = A.ctx
    a, b = A.shape
    prow, pcol = _pivot_sequence(A)
    r = len(prow)
    rperm = prow + [i for i in range(a) if i not in prow]
    cperm = pcol + [j for j in range(b) if j not in pcol]
    Pr = ScalarMatrix._raw(ctx, [[int(j == rperm[i]) for j in range(a)] for i in range(a)])
    Pc = ScalarMatrix._raw(ctx, [[int(i == cperm[j]) for j in range(b)] for i in range(b)])
    B = Pr @ A @ Pc
    if r == 0:
        return Pr, Pc, 0
    A11inv = scalar_inverse(B.submatrix(range(r), range(r))).rows

    def dot(x, y):
        s = 0
        for s1, s2 in zip(x, y):
            if s1 and s2:
                s = ctx.add(s, ctx.mul(s1, s2))
        return s

    P = [[0] * a for _ in range(a)]
    for i in range(r):
        P[i][:r] = A11inv[i]
    for i in range(r, a):
        # row i of -A21 A11^{-1}
        P[i][:r] = [ctx.neg(dot(B.rows[i][:r], [A11inv[k][j] for k in range(r)])) for j in range(r)]
        P[i][i] = 1
    Q = [[int(i == j) for j in range(b)] for i in range(b)]
    for i in range(r):
        for j in range(r, b):
            # -(A11^{-1} A12)[i, j]
            Q[i][j] = ctx.neg(dot(A11inv[i], [B.rows[k][j] for k in range(r)]))
    return ScalarMatrix._raw(ctx, P) @ Pr, Pc @ ScalarMatrix._raw(ctx, Q), r


def _block_diag(ctx: FieldCtx, r: int, X: ScalarMatrix, size: int) -> ScalarMatrix:
    out = [[int(i == j) for j in range(size)] for i in range(size)]
    for i, row in enumerate(X.rows):
        out[r + i][r:] = list(row)
    return ScalarMatrix._raw(ctx, out)


def _normal_form_d1(M: FormMatrix, point_budget: int, kw: dict, trace: list[dict]):
    ctx = M.ctx
    a, b = M.shape
    if a == 0 or b == 0 or M.is_zero():
        return ScalarMatrix.identity(ctx, a), ScalarMatrix.identity(ctx, b), 0, 0
    k = comm_rank(M, **kw)
    r, p, exhaustive = max_rank_point(M, budget=point_budget)
    P0, Q0, r = rank_normal_form(eval_matrix(M, p))
    N = M.scalar_transform(P0, Q0)
    Dm = N.submatrix(range(r, a), range(r, b))
    kd = comm_rank(Dm, **kw) if Dm.shape[0] and Dm.shape[1] else 0
    trace.append({"point": [list(v) for v in p], "r": r, "cr_before": k, "cr_after": kd,
                  "exhaustive": exhaustive})
    if kd > k - r:
        raise BoundViolation(f"corner block has commutative rank {kd} > {k} - {r}")
    P1, Q1, s1, s2 = _normal_form_d1(Dm, point_budget, kw, trace)
    P = _block_diag(ctx, r, P1, a) @ P0
    Q = Q0 @ _block_diag(ctx, r, Q1, b)
    return P, Q, r + s1, r + s2


def pr_decompose_d1(M: FormMatrix, point_budget: int = DEFAULT_BUDGET, check: bool = True,
                    cr_kwargs: dict | None = None):
    """Compression normal form of a matrix of linear forms.

    Returns ``(P, Q, r1, r2, D)``: ``P M Q`` vanishes outside its first
    ``r1`` rows and first ``r2`` columns, ``r1 + r2 <= 2 CR(M)``, and ``D``
    holds at most ``r1`` terms with ``S = ()`` (scalar ``u``) and at most
    ``r2`` with ``S = (1,)`` (scalar ``v``).
    """
    if M.d != 1:
        raise ValueError("pr_decompose_d1 needs d = 1")
    kw = dict(cr_kwargs or {})
    ctx, n = M.ctx, M.n
    a, b = M.shape
    trace: list[dict] = []
    P, Q, r1, r2 = _normal_form_d1(M, point_budget, kw, trace)
    N = M.scalar_transform(P, Q)
    Pinv, Qinv = scalar_inverse(P), scalar_inverse(Q)
    blk = M.blocks[0]
    scalar = lambda c: MultilinearForm.scalar(ctx, n, c)  # noqa: E731
    zero_lin = MultilinearForm.zero(ctx, (blk,), n)
    D = PartitionDecomposition(ctx, M.blocks, n, a, b, log=trace)
    for i in range(r1):
        u = tuple(scalar(Pinv.rows[k][i]) for k in range(a))
        v = tuple(_mix(N.entries[i], [Qinv.rows[j][c] for j in range(b)], zero_lin)
                  for c in range(b))
        t = RankOneTerm((), u, v)
        if not t.is_zero():
            D.terms.append(t)
    for j in range(r2):
        col = [N.entries[i][j] if i >= r1 else zero_lin for i in range(a)]
        u = tuple(_mix(col, Pinv.rows[k], zero_lin) for k in range(a))
        v = tuple(scalar(x) for x in Qinv.rows[j])
        t = RankOneTerm((blk,), u, v)
        if not t.is_zero():
            D.terms.append(t)
    if check:
        if any(N.entries[i][j].terms for i in range(r1, a) for j in range(r2, b)):
            raise BoundViolation("normal form has a nonzero corner")
        if D.value() != M:
            raise BoundViolation("d=1 decomposition does not reconstruct M")
        k = comm_rank(M, **kw)
        if r1 + r2 > 2 * k:
            raise BoundViolation(f"r1 + r2 = {r1 + r2} > 2 CR = {2 * k}")
    return P, Q, r1, r2, D


def _mix(forms: Sequence[MultilinearForm], coeffs: Sequence[int], zero: MultilinearForm):
    acc = zero
    for f, c in zip(forms, coeffs):
        if c and f.terms:
            acc = acc + f.scale(c)
    return acc


# -- verification ---------------------------------------------------------------------


@dataclass
class VerifyReport:
    equal: bool
    n_terms: int
    subset_counts: dict
    comm_rank: int | None
    bound: BoundReport
    bound_value: Fraction | None
    within_bound: bool | None

    def to_json(self) -> dict:
        return {
            "equal": self.equal,
            "terms": self.n_terms,
            "subset_counts": {",".join(map(str, S)) or "{}": c for S, c in self.subset_counts.items()},
            "comm_rank": self.comm_rank,
            "constant": None if self.bound.constant is None else str(self.bound.constant),
            "bound": None if self.bound_value is None else str(self.bound_value),
            "within_bound": self.within_bound,
        }


def verify(M: FormMatrix, D: PartitionDecomposition, cr: int | None = None,
           extension_degree: int = 1, **cr_kwargs) -> VerifyReport:
    """Check ``value(D) == M`` and compare ``|D|`` with ``e C(d, q^e) CR(M)``."""
    if (D.a, D.b) != M.shape or D.n != M.n or D.blocks != M.blocks:
        raise ValueError(f"decomposition of a {D.a}x{D.b} matrix on {D.blocks} (n={D.n}) "
                         f"does not match {M.shape} on {M.blocks} (n={M.n})")
    if D.ctx != M.ctx:
        raise FieldMismatch("decomposition and matrix over different fields")
    equal = D.value() == M
    cr = comm_rank(M, **cr_kwargs) if cr is None else cr
    e = extension_degree
    rep = bound_constant(M.d, M.ctx.q ** e)
    bound = e * rep.constant * cr if rep.valid else None
    return VerifyReport(equal, len(D), {tuple(S): c for S, c in D.subset_counts().items()}, cr,
                        rep, bound, None if bound is None else len(D) <= bound)
