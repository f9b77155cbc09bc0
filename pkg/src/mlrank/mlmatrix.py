"""Matrices of multilinear forms, and scalar linear algebra over finite fields."""

from __future__ import annotations

import itertools
from typing import Iterator, Sequence

import numpy as np

from .errors import FieldMismatch, SingularMatrix
from .field import Extension, FieldCtx, FieldElem
from .mform import MultilinearForm, mul_disjoint


class ScalarMatrix:
    """Dense matrix of field codes."""

    __slots__ = ("ctx", "rows")

    def __init__(self, ctx: FieldCtx, rows: Sequence[Sequence]):
        self.ctx = ctx
        rows = [tuple(ctx.code(x) for x in r) for r in rows]
        if rows and len({len(r) for r in rows}) != 1:
            raise ValueError("ragged matrix")
        self.rows: tuple[tuple[int, ...], ...] = tuple(rows)

    @classmethod
    def _raw(cls, ctx: FieldCtx, rows) -> "ScalarMatrix":
        m = cls.__new__(cls)
        m.ctx = ctx
        m.rows = tuple(tuple(r) for r in rows)
        return m

    @classmethod
    def identity(cls, ctx: FieldCtx, n: int) -> "ScalarMatrix":
        return cls._raw(ctx, [[int(i == j) for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, ctx: FieldCtx, a: int, b: int) -> "ScalarMatrix":
        return cls._raw(ctx, [[0] * b for _ in range(a)])

    @classmethod
    def from_array(cls, ctx: FieldCtx, arr: np.ndarray) -> "ScalarMatrix":
        return cls._raw(ctx, np.asarray(arr).tolist())

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)

    def __getitem__(self, ij) -> int:
        i, j = ij
        return self.rows[i][j]

    def elem(self, i: int, j: int) -> FieldElem:
        return self.ctx(self.rows[i][j])

    def __eq__(self, other):
        if not isinstance(other, ScalarMatrix):
            return NotImplemented
        return self.ctx == other.ctx and self.rows == other.rows

    def __hash__(self):
        return hash((self.ctx, self.rows))

    def __repr__(self):
        return f"ScalarMatrix({self.ctx}, {[list(r) for r in self.rows]})"

    def to_array(self) -> np.ndarray:
        a, b = self.shape
        return np.array(self.rows, dtype=np.int64).reshape(a, b)

    def is_zero(self) -> bool:
        return not any(any(r) for r in self.rows)

    def __add__(self, other: "ScalarMatrix") -> "ScalarMatrix":
        add = self.ctx.add
        return ScalarMatrix._raw(self.ctx, [[add(x, y) for x, y in zip(r, s)]
                                            for r, s in zip(self.rows, other.rows)])

    def __neg__(self) -> "ScalarMatrix":
        neg = self.ctx.neg
        return ScalarMatrix._raw(self.ctx, [[neg(x) for x in r] for r in self.rows])

    def __sub__(self, other: "ScalarMatrix") -> "ScalarMatrix":
        return self + (-other)

    def __matmul__(self, other: "ScalarMatrix") -> "ScalarMatrix":
        if self.ctx != other.ctx:
            raise FieldMismatch("matrices over different fields")
        a, m = self.shape
        m2, b = other.shape
        if m != m2:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        ctx = self.ctx
        cols = list(zip(*other.rows)) if other.rows else [()] * b
        out = []
        for r in self.rows:
            row = []
            for c in cols:
                s = 0
                for x, y in zip(r, c):
                    if x and y:
                        s = ctx.add(s, ctx.mul(x, y))
                row.append(s)
            out.append(row)
        return ScalarMatrix._raw(ctx, out)

    def transpose(self) -> "ScalarMatrix":
        return ScalarMatrix._raw(self.ctx, list(zip(*self.rows)))

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "ScalarMatrix":
        return ScalarMatrix._raw(self.ctx, [[self.rows[i][j] for j in cols] for i in rows])

    def rank(self) -> int:
        return scalar_rank(self)[0]

    def inverse(self) -> "ScalarMatrix":
        return scalar_inverse(self)


def _pivot_sequence(A: ScalarMatrix) -> tuple[list[int], list[int]]:
    """Full pivoting; each pivot is the first nonzero in a row-major scan."""
    ctx = A.ctx
    w = [list(r) for r in A.rows]
    a, b = A.shape
    free_rows = list(range(a))
    free_cols = list(range(b))
    prow, pcol = [], []
    while True:
        hit = None
        for i in free_rows:
            row = w[i]
            for j in free_cols:
                if row[j]:
                    hit = (i, j)
                    break
            if hit:
                break
        if hit is None:
            break
        i, j = hit
        prow.append(i)
        pcol.append(j)
        free_rows.remove(i)
        free_cols.remove(j)
        s = ctx.inv(w[i][j])
        for i2 in free_rows:
            f = w[i2][j]
            if f:
                f = ctx.mul(f, s)
                w[i2] = [ctx.sub(x, ctx.mul(f, y)) for x, y in zip(w[i2], w[i])]
    return prow, pcol


def scalar_rank(A: ScalarMatrix) -> tuple[int, tuple[int, ...], tuple[int, ...]]:
    """Rank together with sorted pivot rows and columns (0-based)."""
    prow, pcol = _pivot_sequence(A)
    return len(prow), tuple(sorted(prow)), tuple(sorted(pcol))


def scalar_inverse(A: ScalarMatrix) -> ScalarMatrix:
    a, b = A.shape
    if a != b:
        raise ValueError("inverse of a non-square matrix")
    ctx = A.ctx
    aug = [list(r) + [int(i == j) for j in range(a)] for i, r in enumerate(A.rows)]
    for col in range(a):
        piv = next((r for r in range(col, a) if aug[r][col]), None)
        if piv is None:
            raise SingularMatrix("matrix is singular")
        aug[col], aug[piv] = aug[piv], aug[col]
        s = ctx.inv(aug[col][col])
        aug[col] = [ctx.mul(x, s) for x in aug[col]]
        for r in range(a):
            f = aug[r][col]
            if r != col and f:
                aug[r] = [ctx.sub(x, ctx.mul(f, y)) for x, y in zip(aug[r], aug[col])]
    return ScalarMatrix._raw(ctx, [r[a:] for r in aug])


def nullspace(A: ScalarMatrix) -> list[tuple[int, ...]]:
    """Basis of ``{x : A x = 0}``, in reduced form."""
    ctx = A.ctx
    a, b = A.shape
    w = [list(r) for r in A.rows]
    pivots = []
    r = 0
    for col in range(b):
        piv = next((i for i in range(r, a) if w[i][col]), None)
        if piv is None:
            continue
        w[r], w[piv] = w[piv], w[r]
        s = ctx.inv(w[r][col])
        w[r] = [ctx.mul(x, s) for x in w[r]]
        for i in range(a):
            f = w[i][col]
            if i != r and f:
                w[i] = [ctx.sub(x, ctx.mul(f, y)) for x, y in zip(w[i], w[r])]
        pivots.append(col)
        r += 1
    basis = []
    for free in (c for c in range(b) if c not in pivots):
        v = [0] * b
        v[free] = 1
        for row, pc in enumerate(pivots):
            v[pc] = ctx.neg(w[row][free])
        basis.append(tuple(v))
    return basis


def complete_basis(ctx: FieldCtx, vectors: Sequence[Sequence[int]], n: int) -> list[tuple[int, ...]]:
    """Extend linearly independent ``vectors`` to a basis of F^n with unit vectors."""
    basis = [tuple(v) for v in vectors]
    for j in range(n):
        e = tuple(int(i == j) for i in range(n))
        if ScalarMatrix(ctx, basis + [e]).rank() == len(basis) + 1:
            basis.append(e)
        if len(basis) == n:
            break
    return basis


class FormMatrix:
    """An ``a x b`` matrix whose entries are multilinear forms on ``blocks``."""

    __slots__ = ("ctx", "blocks", "n", "entries")

    def __init__(self, ctx: FieldCtx, blocks: Sequence[int], n: int,
                 entries: Sequence[Sequence[MultilinearForm]]):
        self.ctx = ctx
        self.blocks = tuple(sorted(blocks))
        self.n = n
        entries = [list(r) for r in entries]
        if entries and len({len(r) for r in entries}) != 1:
            raise ValueError("ragged matrix")
        for r in entries:
            for f in r:
                if f.ctx != ctx:
                    raise FieldMismatch("entry over a different field")
                if f.blocks != self.blocks or f.n != n:
                    raise ValueError(f"entry on blocks {f.blocks} (n={f.n}) in a matrix on "
                                     f"{self.blocks} (n={n})")
        self.entries: list[list[MultilinearForm]] = entries

    @classmethod
    def zeros(cls, ctx: FieldCtx, d: int, n: int, a: int, b: int,
              blocks: Sequence[int] | None = None) -> "FormMatrix":
        blocks = tuple(range(1, d + 1)) if blocks is None else tuple(blocks)
        z = MultilinearForm.zero(ctx, blocks, n)
        return cls(ctx, blocks, n, [[z] * b for _ in range(a)])

    @classmethod
    def from_scalar(cls, A: ScalarMatrix, n: int = 1) -> "FormMatrix":
        return cls(A.ctx, (), n, [[MultilinearForm.scalar(A.ctx, n, x) for x in r] for r in A.rows])

    @property
    def d(self) -> int:
        return len(self.blocks)

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.entries), len(self.entries[0]) if self.entries else 0)

    def __getitem__(self, ij) -> MultilinearForm:
        i, j = ij
        return self.entries[i][j]

    def __eq__(self, other):
        if not isinstance(other, FormMatrix):
            return NotImplemented
        return (self.ctx == other.ctx and self.blocks == other.blocks and self.n == other.n
                and self.shape == other.shape and self.entries == other.entries)

    def __hash__(self):
        return hash((self.ctx, self.blocks, self.n, tuple(tuple(r) for r in self.entries)))

    def is_zero(self) -> bool:
        return all(f.is_zero() for r in self.entries for f in r)

    def _zero(self) -> MultilinearForm:
        return MultilinearForm.zero(self.ctx, self.blocks, self.n)

    def __add__(self, other: "FormMatrix") -> "FormMatrix":
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        return FormMatrix(self.ctx, self.blocks, self.n,
                          [[x + y for x, y in zip(r, s)] for r, s in zip(self.entries, other.entries)])

    def __neg__(self) -> "FormMatrix":
        return FormMatrix(self.ctx, self.blocks, self.n, [[-x for x in r] for r in self.entries])

    def __sub__(self, other: "FormMatrix") -> "FormMatrix":
        return self + (-other)

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "FormMatrix":
        return FormMatrix(self.ctx, self.blocks, self.n,
                          [[self.entries[i][j] for j in cols] for i in rows])

    def transpose(self) -> "FormMatrix":
        return FormMatrix(self.ctx, self.blocks, self.n, [list(c) for c in zip(*self.entries)])

    def partial_eval(self, point) -> "FormMatrix":
        """Entrywise partial evaluation; ``point`` maps block -> vector."""
        rest = [b for b in self.blocks if b not in point]
        return FormMatrix(self.ctx, rest, self.n,
                          [[f.partial_eval(point) for f in r] for r in self.entries])

    def substitute_linear(self, block: int, L) -> "FormMatrix":
        return FormMatrix(self.ctx, self.blocks, self.n,
                          [[f.substitute_linear(block, L) for f in r] for r in self.entries])

    def scalar_transform(self, P: ScalarMatrix | None = None, Q: ScalarMatrix | None = None) -> "FormMatrix":
        """The matrix ``P @ self @ Q`` for scalar ``P`` and ``Q``."""
        ents = self.entries
        if P is not None:
            ents = [[_lincomb(self, P.rows[i], [r[j] for r in ents]) for j in range(len(ents[0]))]
                    for i in range(P.shape[0])]
        if Q is not None:
            cols = list(zip(*Q.rows))
            ents = [[_lincomb(self, cols[j], r) for j in range(Q.shape[1])] for r in ents]
        return FormMatrix(self.ctx, self.blocks, self.n, ents)

    def map_field(self, ctx: FieldCtx, fn) -> "FormMatrix":
        return FormMatrix(ctx, self.blocks, self.n,
                          [[f.map_coeffs(ctx, fn) for f in r] for r in self.entries])

    def lift(self, ext: Extension) -> "FormMatrix":
        if ext.small != self.ctx:
            raise FieldMismatch(f"{ext.big} does not extend {self.ctx}")
        return self.map_field(ext.big, ext.embed)

    def coef_array(self) -> np.ndarray:
        """Codes as an array of shape ``(a, b, n, ..., n)`` (one axis per block)."""
        a, b = self.shape
        out = np.zeros((a, b) + (self.n,) * self.d, dtype=np.int64)
        for i, r in enumerate(self.entries):
            for j, f in enumerate(r):
                for idx, c in f.terms.items():
                    out[(i, j) + idx] = c
        return out

    def pretty(self) -> str:
        cells = [[f.pretty() for f in r] for r in self.entries]
        if not cells:
            return "[]"
        width = max(len(c) for r in cells for c in r)
        return "\n".join("[ " + "  ".join(c.rjust(width) for c in r) + " ]" for r in cells)

    def __repr__(self):
        return f"FormMatrix({self.ctx}, blocks={self.blocks}, n={self.n}, shape={self.shape})"

    # serialisation ---------------------------------------------------------

    def to_json(self) -> dict:
        a, b = self.shape
        doc = {"field": self.ctx.to_json(), "d": self.d, "n": self.n, "rows": a, "cols": b,
               "entries": []}
        if self.blocks != tuple(range(1, self.d + 1)):
            doc["blocks"] = list(self.blocks)
        for i, r in enumerate(self.entries):
            for j, f in enumerate(r):
                if f.terms:
                    doc["entries"].append({"row": i, "col": j, "terms": f.to_json()["terms"]})
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "FormMatrix":
        ctx = FieldCtx.from_json(doc["field"])
        d, n = int(doc["d"]), int(doc["n"])
        blocks = tuple(doc.get("blocks", range(1, d + 1)))
        if len(blocks) != d:
            raise ValueError("blocks do not match d")
        a, b = int(doc["rows"]), int(doc["cols"])
        ents = [[MultilinearForm.zero(ctx, blocks, n)] * b for _ in range(a)]
        for e in doc.get("entries", []):
            i, j = int(e["row"]), int(e["col"])
            if not (0 <= i < a and 0 <= j < b):
                raise ValueError(f"entry ({i},{j}) outside a {a}x{b} matrix")
            f = MultilinearForm.from_json(ctx, {"blocks": list(blocks), "n": n, "terms": e["terms"]})
            ents[i][j] = ents[i][j] + f
        return cls(ctx, blocks, n, ents)


def _lincomb(M: FormMatrix, coeffs: Sequence[int], forms: Sequence[MultilinearForm]) -> MultilinearForm:
    acc = M._zero()
    for c, f in zip(coeffs, forms):
        if c and f.terms:
            acc = acc + f.scale(c)
    return acc


def kron(A: FormMatrix, B: FormMatrix) -> FormMatrix:
    """Kronecker product of matrices on disjoint block sets."""
    if A.n != B.n:
        raise ValueError("Kronecker factors must share n")
    a1, b1 = A.shape
    a2, b2 = B.shape
    ents = [[mul_disjoint(A.entries[i1][j1], B.entries[i2][j2])
             for j1 in range(b1) for j2 in range(b2)]
            for i1 in range(a1) for i2 in range(a2)]
    blocks = tuple(sorted(A.blocks + B.blocks))
    return FormMatrix(A.ctx, blocks, A.n, ents)


def _normalise_point(M: FormMatrix, point) -> dict[int, tuple[int, ...]]:
    if isinstance(point, dict):
        assign = {int(b): tuple(M.ctx.code(c) for c in v) for b, v in point.items()}
    else:
        point = list(point)
        if len(point) != M.d:
            raise ValueError(f"expected {M.d} vectors, got {len(point)}")
        assign = {b: tuple(M.ctx.code(c) for c in v) for b, v in zip(M.blocks, point)}
    if set(assign) != set(M.blocks):
        raise ValueError(f"point covers {sorted(assign)}, matrix has blocks {M.blocks}")
    for v in assign.values():
        if len(v) != M.n:
            raise ValueError(f"point vector of length {len(v)}, expected {M.n}")
    return assign


def eval_matrix(M: FormMatrix, point) -> ScalarMatrix:
    """Evaluate every entry at ``point`` (one vector per block)."""
    assign = _normalise_point(M, point)
    return ScalarMatrix._raw(M.ctx, [[f.eval(assign) if f.terms else 0 for f in r]
                                     for r in M.entries])


def find_invertible_submatrix(M: FormMatrix, point, r: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Row and column sets of size ``r`` whose submatrix of ``M(point)`` is invertible."""
    Mp = eval_matrix(M, point)
    prow, pcol = _pivot_sequence(Mp)
    if r > len(prow):
        raise SingularMatrix(f"rank of M(p) is {len(prow)} < {r}")
    return tuple(sorted(prow[:r])), tuple(sorted(pcol[:r]))


# -- batch evaluation -----------------------------------------------------------


def all_vectors(q: int, n: int) -> np.ndarray:
    """All of F_q^n as codes, in lexicographic order, shape ``(q**n, n)``."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product(range(q), repeat=n)), dtype=np.int64).reshape(-1, n)


def _contract_last(ctx: FieldCtx, C: np.ndarray, V: np.ndarray) -> np.ndarray:
    """``out[v, ...] = sum_j C[..., j] * V[v, j]`` over the field."""
    if ctx.k == 1:
        return np.tensordot(V, C, axes=([1], [C.ndim - 1])) % ctx.p
    Q, n = V.shape
    shape = (Q,) + C.shape[:-1]
    acc = np.zeros(shape, dtype=np.int64)
    expand = (slice(None),) + (None,) * (C.ndim - 1)
    for j in range(n):
        acc = ctx.np_add(acc, ctx.np_mul(C[None, ..., j], V[:, j][expand]))
    return acc


def eval_stack(M: FormMatrix, vectors: Sequence[np.ndarray], ctx: FieldCtx | None = None,
               coef: np.ndarray | None = None) -> np.ndarray:
    """Evaluate ``M`` on the grid ``vectors[0] x ... x vectors[d-1]``.

    ``vectors[i]`` has shape ``(Q_i, n)``.  Returns codes of shape
    ``(Q_1 * ... * Q_d, a, b)`` in row-major grid order.  ``ctx`` and ``coef``
    allow evaluating a lifted coefficient array in an extension field.
    """
    ctx = M.ctx if ctx is None else ctx
    C = M.coef_array() if coef is None else coef
    a, b = M.shape
    for V in reversed(list(vectors)):
        C = _contract_last(ctx, C, np.asarray(V, dtype=np.int64))
        # move the new point axis behind earlier point axes, ahead of (a, b)
    # after d contractions the axes are (Q_1, ..., Q_d, a, b)
    return C.reshape(-1, a, b)


def iter_points(q: int, n: int, d: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    """All points of (F_q^n)^d in the same order as :func:`eval_stack` on full grids."""
    vecs = list(itertools.product(range(q), repeat=n))
    return itertools.product(vecs, repeat=d)


def point_at(q: int, n: int, d: int, index: int) -> tuple[tuple[int, ...], ...]:
    """The ``index``-th point of :func:`iter_points` without enumerating."""
    digits = []
    for _ in range(d * n):
        digits.append(index % q)
        index //= q
    digits.reverse()
    return tuple(tuple(digits[i * n:(i + 1) * n]) for i in range(d))
