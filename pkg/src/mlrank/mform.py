"""Multilinear forms on blocks of variables, and general sparse polynomials.

A :class:`MultilinearForm` on the block set ``S`` is linear in each block
``x_s = (x_{s,1}, ..., x_{s,n})`` for ``s`` in ``S``.  It is stored as a map
from index tuples (one 0-based index per block, in increasing block order)
to nonzero field codes.  Block labels are global positive integers, so
forms on disjoint block sets can be multiplied without renaming.

:class:`Poly` is an ordinary sparse polynomial in ``nvars`` variables; it is
used for determinants, multiplicities and the derivative oracle.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Mapping, Sequence

from .errors import FieldMismatch, SingularMatrix
from .field import FieldCtx

GREEK = {1: "α", 2: "β", 3: "γ"}


def _check_ctx(a, b):
    if a.ctx != b.ctx:
        raise FieldMismatch(f"cannot combine {a.ctx} and {b.ctx}")


class MultilinearForm:
    """Element of M_S: a sparse map ``index tuple -> nonzero code``."""

    __slots__ = ("ctx", "blocks", "n", "terms", "_hash")

    def __init__(self, ctx: FieldCtx, blocks: Iterable[int], n: int,
                 terms: Mapping[tuple[int, ...], int] | None = None, *, check: bool = True):
        self.ctx = ctx
        self.blocks = tuple(sorted(blocks))
        self.n = n
        self._hash = None
        if not check:
            self.terms = dict(terms) if terms else {}
            return
        if len(set(self.blocks)) != len(self.blocks) or any(b < 1 for b in self.blocks):
            raise ValueError(f"block labels must be distinct positive integers: {self.blocks}")
        if n < 0:
            raise ValueError("n must be nonnegative")
        clean: dict[tuple[int, ...], int] = {}
        for idx, c in (terms or {}).items():
            idx = tuple(int(i) for i in idx)
            if len(idx) != len(self.blocks) or any(not 0 <= i < n for i in idx):
                raise ValueError(f"index {idx} invalid for blocks {self.blocks}, n={n}")
            c = ctx.code(c)
            c = ctx.add(clean.get(idx, 0), c)
            if c:
                clean[idx] = c
            else:
                clean.pop(idx, None)
        self.terms = clean

    # constructors ------------------------------------------------------------

    @classmethod
    def zero(cls, ctx: FieldCtx, blocks: Iterable[int], n: int) -> "MultilinearForm":
        return cls(ctx, blocks, n, check=False)

    @classmethod
    def scalar(cls, ctx: FieldCtx, n: int, c: int) -> "MultilinearForm":
        c = ctx.code(c)
        return cls(ctx, (), n, {(): c} if c else {}, check=False)

    @classmethod
    def var(cls, ctx: FieldCtx, block: int, j: int, n: int) -> "MultilinearForm":
        """The variable ``x_{block, j}`` (``j`` is 0-based)."""
        return cls(ctx, (block,), n, {(j,): 1})

    @classmethod
    def linear(cls, ctx: FieldCtx, block: int, coeffs: Sequence[int]) -> "MultilinearForm":
        """The linear form ``sum_j coeffs[j] x_{block, j}``."""
        return cls(ctx, (block,), len(coeffs), {(j,): c for j, c in enumerate(coeffs) if c})

    # basic protocol ------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, MultilinearForm):
            return NotImplemented
        return (self.ctx == other.ctx and self.blocks == other.blocks
                and self.n == other.n and self.terms == other.terms)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ctx, self.blocks, self.n, frozenset(self.terms.items())))
        return self._hash

    def _like(self, other: "MultilinearForm"):
        _check_ctx(self, other)
        if self.blocks != other.blocks or self.n != other.n:
            raise ValueError(f"forms on {self.blocks} and {other.blocks} cannot be added")

    def __add__(self, other: "MultilinearForm") -> "MultilinearForm":
        self._like(other)
        ctx = self.ctx
        out = dict(self.terms)
        for idx, c in other.terms.items():
            s = ctx.add(out.get(idx, 0), c)
            if s:
                out[idx] = s
            else:
                out.pop(idx, None)
        return MultilinearForm(ctx, self.blocks, self.n, out, check=False)

    def __neg__(self) -> "MultilinearForm":
        neg = self.ctx.neg
        return MultilinearForm(self.ctx, self.blocks, self.n,
                               {i: neg(c) for i, c in self.terms.items()}, check=False)

    def __sub__(self, other: "MultilinearForm") -> "MultilinearForm":
        return self + (-other)

    def scale(self, c: int) -> "MultilinearForm":
        if c == 0:
            return MultilinearForm.zero(self.ctx, self.blocks, self.n)
        mul = self.ctx.mul
        return MultilinearForm(self.ctx, self.blocks, self.n,
                               {i: mul(v, c) for i, v in self.terms.items()}, check=False)

    def __mul__(self, other: "MultilinearForm") -> "MultilinearForm":
        return mul_disjoint(self, other)

    def coeff(self, idx: Sequence[int]) -> int:
        return self.terms.get(tuple(idx), 0)

    def sorted_terms(self) -> list[tuple[tuple[int, ...], int]]:
        return sorted(self.terms.items())

    # evaluation -------------------------------------------------------------

    def _assignment(self, point) -> dict[int, tuple[int, ...]]:
        if isinstance(point, Mapping):
            assign = {int(b): tuple(self.ctx.code(c) for c in v) for b, v in point.items()}
        else:
            point = list(point)
            if len(point) != len(self.blocks):
                raise ValueError(f"expected {len(self.blocks)} vectors, got {len(point)}")
            assign = {b: tuple(self.ctx.code(c) for c in v) for b, v in zip(self.blocks, point)}
        for b, v in assign.items():
            if len(v) != self.n:
                raise ValueError(f"vector for block {b} has length {len(v)}, expected {self.n}")
        return assign

    def eval(self, point) -> int:
        """Value at a point covering exactly the blocks of the form (as a code)."""
        assign = self._assignment(point)
        if set(assign) != set(self.blocks):
            raise ValueError(f"point covers blocks {sorted(assign)}, form has {self.blocks}")
        ctx = self.ctx
        vecs = [assign[b] for b in self.blocks]
        total = 0
        for idx, c in self.terms.items():
            v = c
            for vec, i in zip(vecs, idx):
                v = ctx.mul(v, vec[i])
                if not v:
                    break
            total = ctx.add(total, v)
        return total

    def partial_eval(self, point) -> "MultilinearForm":
        """Substitute ``x_t = p_t`` for the blocks ``t`` given in ``point``."""
        assign = self._assignment(point)
        if not set(assign) <= set(self.blocks):
            raise ValueError(f"cannot evaluate blocks {sorted(assign)} of a form on {self.blocks}")
        if not assign:
            return self
        ctx = self.ctx
        keep = [k for k, b in enumerate(self.blocks) if b not in assign]
        fixed = [(k, assign[b]) for k, b in enumerate(self.blocks) if b in assign]
        out: dict[tuple[int, ...], int] = {}
        for idx, c in self.terms.items():
            v = c
            for k, vec in fixed:
                v = ctx.mul(v, vec[idx[k]])
                if not v:
                    break
            if v:
                key = tuple(idx[k] for k in keep)
                s = ctx.add(out.get(key, 0), v)
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return MultilinearForm(ctx, [self.blocks[k] for k in keep], self.n, out, check=False)

    def substitute_linear(self, block: int, L: Sequence[Sequence[int]]) -> "MultilinearForm":
        """Replace ``x_block`` by ``L @ x_block`` for an invertible ``n x n`` matrix."""
        from .mlmatrix import ScalarMatrix

        if block not in self.blocks:
            raise ValueError(f"block {block} not in {self.blocks}")
        Lm = ScalarMatrix(self.ctx, L)
        if Lm.shape != (self.n, self.n) or Lm.rank() != self.n:
            raise SingularMatrix("substitution matrix must be invertible n x n")
        ctx = self.ctx
        k = self.blocks.index(block)
        out: dict[tuple[int, ...], int] = {}
        for idx, c in self.terms.items():
            row = Lm.rows[idx[k]]
            for m, lv in enumerate(row):
                if lv:
                    key = idx[:k] + (m,) + idx[k + 1:]
                    s = ctx.add(out.get(key, 0), ctx.mul(c, lv))
                    if s:
                        out[key] = s
                    else:
                        out.pop(key, None)
        return MultilinearForm(ctx, self.blocks, self.n, out, check=False)

    def map_coeffs(self, ctx: FieldCtx, fn) -> "MultilinearForm":
        """Apply a coefficient map into another field (dropping zeros)."""
        out = {}
        for idx, c in self.terms.items():
            v = fn(c)
            if v:
                out[idx] = v
        return MultilinearForm(ctx, self.blocks, self.n, out, check=False)

    def with_blocks(self, blocks: Sequence[int]) -> "MultilinearForm":
        """Relabel blocks (order-preserving bijection onto ``blocks``)."""
        blocks = tuple(blocks)
        if len(blocks) != len(self.blocks) or list(blocks) != sorted(blocks):
            raise ValueError("relabelling must preserve block order")
        return MultilinearForm(self.ctx, blocks, self.n, self.terms, check=False)

    def to_poly(self, d: int | None = None) -> "Poly":
        """As a polynomial in ``d*n`` variables, ``x_{b,j}`` at position ``(b-1)*n + j``."""
        if d is None:
            d = max(self.blocks, default=0)
        nv = d * self.n
        out = {}
        for idx, c in self.terms.items():
            e = [0] * nv
            for b, i in zip(self.blocks, idx):
                e[(b - 1) * self.n + i] += 1
            out[tuple(e)] = c
        return Poly(self.ctx, nv, out, check=False)

    # display ----------------------------------------------------------------

    def pretty(self, greek: bool = True) -> str:
        if not self.terms:
            return "0"
        ctx = self.ctx
        parts = []
        for idx, c in self.sorted_terms():
            names = []
            for b, i in zip(self.blocks, idx):
                if greek and b in GREEK and max(self.blocks) <= 3:
                    names.append(f"{GREEK[b]}{i + 1}")
                else:
                    names.append(f"x{b},{i + 1}")
            mono = "·".join(names)
            if ctx.k == 1 and c == ctx.p - 1 and ctx.p > 2:
                parts.append(("-", mono or "1"))
            else:
                coef = "" if c == 1 and mono else repr(ctx(c)) if ctx.k == 1 else f"({ctx(c)!r})"
                parts.append(("+", coef + ("·" if coef and mono else "") + mono))
        s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            s += f" {sign} {body}"
        return s

    def __repr__(self):
        return f"Form[{','.join(map(str, self.blocks))}]({self.pretty(greek=False)})"

    # serialisation ------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "blocks": list(self.blocks),
            "n": self.n,
            "terms": [{"idx": [i + 1 for i in idx], "coef": self.ctx.elem_to_json(c)}
                      for idx, c in self.sorted_terms()],
        }

    @classmethod
    def from_json(cls, ctx: FieldCtx, doc: dict) -> "MultilinearForm":
        blocks = [int(b) for b in doc["blocks"]]
        if list(blocks) != sorted(set(blocks)):
            raise ValueError(f"blocks must be sorted and distinct: {blocks}")
        n = int(doc["n"])
        terms: dict = {}
        for t in doc.get("terms", []):
            idx = tuple(int(i) - 1 for i in t["idx"])
            c = ctx.elem_from_json(t["coef"])
            terms[idx] = ctx.add(terms.get(idx, 0), c)
        return cls(ctx, blocks, n, terms)


def mul_disjoint(f: MultilinearForm, g: MultilinearForm) -> MultilinearForm:
    """Product of forms on disjoint block sets."""
    _check_ctx(f, g)
    if f.n != g.n:
        raise ValueError("forms have different n")
    if set(f.blocks) & set(g.blocks):
        raise ValueError(f"blocks {f.blocks} and {g.blocks} overlap")
    ctx = f.ctx
    blocks = tuple(sorted(f.blocks + g.blocks))
    if not f.terms or not g.terms:
        return MultilinearForm.zero(ctx, blocks, f.n)
    src = [(0, f.blocks.index(b)) if b in f.blocks else (1, g.blocks.index(b)) for b in blocks]
    out: dict[tuple[int, ...], int] = {}
    mul, add = ctx.mul, ctx.add
    for i1, c1 in f.terms.items():
        for i2, c2 in g.terms.items():
            pair = (i1, i2)
            key = tuple(pair[w][k] for w, k in src)
            out[key] = add(out.get(key, 0), mul(c1, c2))
    return MultilinearForm(ctx, blocks, f.n, {k: v for k, v in out.items() if v}, check=False)


def eval_form(f: MultilinearForm, point) -> int:
    return f.eval(point)


def partial_eval(f: MultilinearForm, point) -> MultilinearForm:
    return f.partial_eval(point)


def substitute_linear(f: MultilinearForm, block: int, L) -> MultilinearForm:
    return f.substitute_linear(block, L)


class Poly:
    """Sparse polynomial: exponent vector -> nonzero code."""

    __slots__ = ("ctx", "nvars", "terms")

    def __init__(self, ctx: FieldCtx, nvars: int, terms: Mapping[tuple[int, ...], int] | None = None,
                 *, check: bool = True):
        self.ctx = ctx
        self.nvars = nvars
        if not check:
            self.terms = dict(terms) if terms else {}
            return
        clean: dict[tuple[int, ...], int] = {}
        for e, c in (terms or {}).items():
            e = tuple(int(x) for x in e)
            if len(e) != nvars or any(x < 0 for x in e):
                raise ValueError(f"bad exponent vector {e}")
            s = ctx.add(clean.get(e, 0), ctx.code(c))
            if s:
                clean[e] = s
            else:
                clean.pop(e, None)
        self.terms = clean

    @classmethod
    def const(cls, ctx: FieldCtx, nvars: int, c: int) -> "Poly":
        c = ctx.code(c)
        return cls(ctx, nvars, {(0,) * nvars: c} if c else {}, check=False)

    @classmethod
    def var(cls, ctx: FieldCtx, nvars: int, i: int) -> "Poly":
        e = [0] * nvars
        e[i] = 1
        return cls(ctx, nvars, {tuple(e): 1}, check=False)

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.ctx == other.ctx and self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.ctx, self.nvars, frozenset(self.terms.items())))

    def _same(self, other: "Poly"):
        _check_ctx(self, other)
        if self.nvars != other.nvars:
            raise ValueError("polynomials have different variable counts")

    def __add__(self, other: "Poly") -> "Poly":
        self._same(other)
        add = self.ctx.add
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = add(out.get(e, 0), c)
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return Poly(self.ctx, self.nvars, out, check=False)

    def __neg__(self) -> "Poly":
        neg = self.ctx.neg
        return Poly(self.ctx, self.nvars, {e: neg(c) for e, c in self.terms.items()}, check=False)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def scale(self, c: int) -> "Poly":
        if not c:
            return Poly(self.ctx, self.nvars, check=False)
        mul = self.ctx.mul
        return Poly(self.ctx, self.nvars, {e: mul(v, c) for e, v in self.terms.items()}, check=False)

    def __mul__(self, other: "Poly") -> "Poly":
        self._same(other)
        ctx = self.ctx
        mul, add = ctx.mul, ctx.add
        out: dict[tuple[int, ...], int] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = add(out.get(e, 0), mul(c1, c2))
        return Poly(ctx, self.nvars, {e: c for e, c in out.items() if c}, check=False)

    def __pow__(self, k: int) -> "Poly":
        result = Poly.const(self.ctx, self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def derivative(self, i: int) -> "Poly":
        """Formal partial derivative in variable ``i`` (characteristic-aware)."""
        ctx = self.ctx
        out: dict[tuple[int, ...], int] = {}
        for e, c in self.terms.items():
            if e[i]:
                c2 = ctx.mul(c, e[i] % ctx.p)
                if c2:
                    e2 = e[:i] + (e[i] - 1,) + e[i + 1:]
                    out[e2] = ctx.add(out.get(e2, 0), c2)
        return Poly(ctx, self.nvars, {e: c for e, c in out.items() if c}, check=False)

    def evaluate(self, point: Sequence[int]) -> int:
        ctx = self.ctx
        point = [ctx.code(v) for v in point]
        if len(point) != self.nvars:
            raise ValueError(f"expected {self.nvars} coordinates")
        total = 0
        for e, c in self.terms.items():
            v = c
            for x, k in zip(point, e):
                if k:
                    v = ctx.mul(v, ctx.pow(x, k))
            total = ctx.add(total, v)
        return total

    def shift(self, point: Sequence[int]) -> "Poly":
        """The polynomial ``f(x + point)``."""
        ctx = self.ctx
        point = [ctx.code(v) for v in point]
        if len(point) != self.nvars:
            raise ValueError(f"expected {self.nvars} coordinates")
        lin = [Poly.var(ctx, self.nvars, i) + Poly.const(ctx, self.nvars, point[i])
               for i in range(self.nvars)]
        cache: dict[tuple[int, int], Poly] = {}
        total = Poly(ctx, self.nvars, check=False)
        for e, c in self.terms.items():
            term = Poly.const(ctx, self.nvars, c)
            for i, k in enumerate(e):
                if k:
                    if (i, k) not in cache:
                        cache[(i, k)] = lin[i] ** k
                    term = term * cache[(i, k)]
            total = total + term
        return total

    def min_degree(self) -> float:
        """Lowest total degree in the support (``inf`` for the zero polynomial)."""
        if not self.terms:
            return float("inf")
        return min(sum(e) for e in self.terms)

    def total_degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def __repr__(self):
        if not self.terms:
            return "Poly(0)"
        parts = []
        for e, c in sorted(self.terms.items(), reverse=True):
            mono = "*".join(f"x{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)
            parts.append(f"{self.ctx(c)!r}" + (f"*{mono}" if mono else "") if c != 1 or not mono else mono)
        return "Poly(" + " + ".join(parts) + ")"

    def to_json(self) -> dict:
        return {"field": self.ctx.to_json(), "nvars": self.nvars,
                "terms": [{"exp": list(e), "coef": self.ctx.elem_to_json(c)}
                          for e, c in sorted(self.terms.items())]}

    @classmethod
    def from_json(cls, doc: dict, ctx: FieldCtx | None = None) -> "Poly":
        if ctx is None:
            ctx = FieldCtx.from_json(doc["field"])
        terms: dict = {}
        for t in doc.get("terms", []):
            e = tuple(int(x) for x in t["exp"])
            terms[e] = ctx.add(terms.get(e, 0), ctx.elem_from_json(t["coef"]))
        return cls(ctx, int(doc["nvars"]), terms)


def all_index_tuples(n: int, k: int):
    return itertools.product(range(n), repeat=k)
