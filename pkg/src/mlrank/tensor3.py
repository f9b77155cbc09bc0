"""3-tensors: bias and analytic rank, the flattening, and slice decompositions.

A tensor is a multilinear form ``T(x, y, z)`` on blocks 1, 2, 3.  Its
flattening is the ``n x n`` matrix of linear forms ``m_{jk}(x)`` with
``T = sum_{j,k} m_{jk}(x) y_j z_k``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BoundViolation, BudgetExceeded, MlrankError
from .field import FieldCtx
from .kernels import rank_batch
from .mform import MultilinearForm, mul_disjoint
from .mlmatrix import FormMatrix, ScalarMatrix, all_vectors, complete_basis, nullspace, scalar_inverse

BLOCKS = (1, 2, 3)
DEFAULT_BUDGET = 1 << 20


class Tensor3:
    """A multilinear form on blocks ``{1, 2, 3}``."""

    __slots__ = ("form",)

    def __init__(self, form: MultilinearForm):
        if form.blocks != BLOCKS:
            raise ValueError(f"a 3-tensor lives on blocks (1, 2, 3), got {form.blocks}")
        self.form = form

    @classmethod
    def zero(cls, ctx: FieldCtx, n: int) -> "Tensor3":
        return cls(MultilinearForm.zero(ctx, BLOCKS, n))

    @classmethod
    def from_terms(cls, ctx: FieldCtx, n: int, terms) -> "Tensor3":
        return cls(MultilinearForm(ctx, BLOCKS, n, terms))

    @property
    def ctx(self) -> FieldCtx:
        return self.form.ctx

    @property
    def n(self) -> int:
        return self.form.n

    def is_zero(self) -> bool:
        return self.form.is_zero()

    def __eq__(self, other):
        return isinstance(other, Tensor3) and self.form == other.form

    def __hash__(self):
        return hash(self.form)

    def __add__(self, other: "Tensor3") -> "Tensor3":
        return Tensor3(self.form + other.form)

    def __sub__(self, other: "Tensor3") -> "Tensor3":
        return Tensor3(self.form - other.form)

    def coef_array(self) -> np.ndarray:
        n = self.n
        C = np.zeros((n, n, n), dtype=np.int64)
        for idx, c in self.form.terms.items():
            C[idx] = c
        return C

    def direct_sum(self, other: "Tensor3") -> "Tensor3":
        """Block-diagonal sum on ``n + n'`` variables per block."""
        n1, n2 = self.n, other.n
        terms = dict(self.form.terms)
        terms.update({tuple(i + n1 for i in idx): c for idx, c in other.form.terms.items()})
        return Tensor3(MultilinearForm(self.ctx, BLOCKS, n1 + n2, terms, check=False))

    def to_json(self) -> dict:
        return {"field": self.ctx.to_json(), **self.form.to_json()}

    @classmethod
    def from_json(cls, doc: dict, ctx: FieldCtx | None = None) -> "Tensor3":
        ctx = FieldCtx.from_json(doc["field"]) if "field" in doc else ctx
        if ctx is None:
            raise ValueError("tensor JSON without a field")
        return cls(MultilinearForm.from_json(ctx, doc))

    def __repr__(self):
        return f"Tensor3({self.form.pretty()})"


def flatten(T: Tensor3) -> FormMatrix:
    """``mat(T)``: entry ``(j, k)`` is the coefficient form of ``y_j z_k``."""
    ctx, n = T.ctx, T.n
    ents = [[{} for _ in range(n)] for _ in range(n)]
    for (i, j, k), c in T.form.terms.items():
        ents[j][k][(i,)] = c
    return FormMatrix(ctx, (1,), n, [[MultilinearForm(ctx, (1,), n, e, check=False) for e in r]
                                     for r in ents])


def unflatten(M: FormMatrix) -> Tensor3:
    if M.blocks != (1,) or M.shape != (M.n, M.n):
        raise ValueError("expected an n x n matrix of linear forms in block 1")
    terms = {}
    for j, row in enumerate(M.entries):
        for k, f in enumerate(row):
            for (i,), c in f.terms.items():
                terms[(i, j, k)] = c
    return Tensor3(MultilinearForm(M.ctx, BLOCKS, M.n, terms, check=False))


# -- bias and analytic rank ------------------------------------------------------------


def _flat_stack(T: Tensor3, X: np.ndarray) -> np.ndarray:
    """``mat(T)(x)`` for every row ``x`` of ``X``: shape ``(len(X), n, n)``."""
    ctx = T.ctx
    C = T.coef_array()
    if ctx.k == 1:
        return np.tensordot(X, C, axes=([1], [0])) % ctx.p
    acc = np.zeros((X.shape[0], T.n, T.n), dtype=np.int64)
    for i in range(T.n):
        acc = ctx.np_add(acc, ctx.np_mul(C[None, i], X[:, i][:, None, None]))
    return acc


def _check_budget(q: int, n: int, budget: int):
    if q ** (2 * n) > budget:
        raise BudgetExceeded(f"{q}^{2 * n} pairs exceeds budget {budget}")


def _zero_counts(T: Tensor3) -> np.ndarray:
    """For each ``x`` (lexicographic), the number of ``y`` with ``T(x, y, -) = 0``."""
    ctx, n = T.ctx, T.n
    V = all_vectors(ctx.q, n)
    F = _flat_stack(T, V)                       # (x, j, k)
    counts = np.zeros(len(V), dtype=np.int64)
    for y in V:
        if ctx.k == 1:
            B = np.einsum("xjk,j->xk", F, y) % ctx.p
        else:
            B = np.zeros((len(V), n), dtype=np.int64)
            for j in range(n):
                B = ctx.np_add(B, ctx.np_mul(F[:, j, :], np.int64(y[j])))
        counts += ~B.any(axis=1)
    return counts


def bias_direct(T: Tensor3, budget: int = DEFAULT_BUDGET) -> Fraction:
    """Fraction of ``(x, y)`` with ``T(x, y, -) = 0``, by enumeration."""
    q, n = T.ctx.q, T.n
    _check_budget(q, n, budget)
    if T.is_zero():
        return Fraction(1)
    return Fraction(int(_zero_counts(T).sum()), q ** (2 * n))


def bias_by_rank(T: Tensor3, budget: int = DEFAULT_BUDGET) -> Fraction:
    """``E_x q^{-rank mat(T)(x)}``."""
    ctx, n = T.ctx, T.n
    q = ctx.q
    _check_budget(q, n, budget)
    ranks = rank_batch(ctx, _flat_stack(T, all_vectors(q, n)))
    return sum((Fraction(1, q ** int(r)) for r in ranks), Fraction(0)) / q ** n


@dataclass(frozen=True)
class AnalyticRank:
    bias: Fraction
    q: int

    @property
    def value(self) -> float:
        """``-log_q bias`` (for display; comparisons use :attr:`bias`)."""
        if self.bias == 1:
            return 0.0
        return (math.log(self.bias.denominator) - math.log(self.bias.numerator)) / math.log(self.q)

    def __float__(self):
        return self.value


def analytic_rank(T: Tensor3, budget: int = DEFAULT_BUDGET) -> tuple[Fraction, float]:
    """``(bias, AR)``; the bias is computed two ways and must agree."""
    b1 = bias_direct(T, budget)
    b2 = bias_by_rank(T, budget)
    if b1 != b2:
        raise MlrankError(f"bias disagreement: direct {b1}, rank-based {b2}")
    return b1, AnalyticRank(b1, T.ctx.q).value


def _q_power_le_bias(q: int, lhs: Fraction, bias: Fraction, c: Fraction) -> bool:
    """Exact test of ``lhs <= c * AR``, i.e. ``q^lhs * bias^c <= 1``, for rational exponents."""
    if lhs < 0 or c < 0:
        raise ValueError("exponents must be nonnegative")
    L = lhs.denominator * c.denominator // math.gcd(lhs.denominator, c.denominator)
    e1, e2 = int(lhs * L), int(c * L)
    return q ** e1 * bias.numerator ** e2 <= bias.denominator ** e2


def ar_at_least(T: Tensor3, value: Fraction, bias: Fraction | None = None) -> bool:
    """Exact ``value <= AR(T)``."""
    bias = bias_direct(T) if bias is None else bias
    return _q_power_le_bias(T.ctx.q, Fraction(value), bias, Fraction(1))


def zero_set_moment(T: Tensor3, budget: int = DEFAULT_BUDGET) -> tuple[Fraction, Fraction]:
    """Both sides of ``E_{(x,y) in Z} q^{rank T(x,-,-)} = 1 / bias``, ``Z`` the zero set of ``B``."""
    ctx, n = T.ctx, T.n
    q = ctx.q
    _check_budget(q, n, budget)
    ranks = rank_batch(ctx, _flat_stack(T, all_vectors(q, n)))
    sizes = _zero_counts(T)
    lhs = Fraction(sum(int(s) * q ** int(r) for s, r in zip(sizes, ranks)), int(sizes.sum()))
    return lhs, 1 / bias_direct(T, budget)


# -- choosing the subspace ----------------------------------------------------------------


@dataclass
class SubspaceCertificate:
    y0: tuple[int, ...]
    basis: list[tuple[int, ...]]
    codim: int
    mean_rank: Fraction
    a: Fraction
    lhs: Fraction
    bias: Fraction
    holds: bool
    q: int = 2

    @property
    def rhs(self) -> float:
        """``(a + 1) AR(T)`` as a float (display only)."""
        return float(self.a + 1) * AnalyticRank(self.bias, self.q).value


def default_a(q: int) -> Fraction:
    """``2 / (1 - 1/q)``."""
    return Fraction(2 * q, q - 1)


def _map_at_y(T: Tensor3, y) -> ScalarMatrix:
    """Matrix of ``x -> B(x, y)``: entry ``(k, i) = sum_j c_{ijk} y_j``."""
    ctx, n = T.ctx, T.n
    K = [[0] * n for _ in range(n)]
    for (i, j, k), c in T.form.terms.items():
        if y[j]:
            K[k][i] = ctx.add(K[k][i], ctx.mul(c, y[j]))
    return ScalarMatrix._raw(ctx, K)


def _span(ctx: FieldCtx, basis: list[tuple[int, ...]], n: int) -> np.ndarray:
    q = ctx.q
    if not basis:
        return np.zeros((1, n), dtype=np.int64)
    Bm = np.array(basis, dtype=np.int64)
    coeffs = all_vectors(q, len(basis))
    if ctx.k == 1:
        return coeffs @ Bm % ctx.p
    acc = np.zeros((len(coeffs), n), dtype=np.int64)
    for t in range(len(basis)):
        acc = ctx.np_add(acc, ctx.np_mul(coeffs[:, t][:, None], Bm[t][None, :]))
    return acc


def find_subspace(T: Tensor3, a: Fraction | None = None, budget: int = DEFAULT_BUDGET,
                  bias: Fraction | None = None) -> SubspaceCertificate:
    """``y0`` minimising ``a E_{x in U} rank mat(T)(x) + codim U`` with ``U = ker B(-, y0)``.

    The certificate compares the minimum with ``(a + 1) AR(T)`` exactly.
    """
    ctx, n = T.ctx, T.n
    q = ctx.q
    a = default_a(q) if a is None else Fraction(a)
    if a < 0:
        raise ValueError("a must be nonnegative")
    if q ** n * q ** n > budget:
        raise BudgetExceeded(f"{q}^{n} candidates times subspaces exceeds budget {budget}")
    bias = bias_direct(T, budget) if bias is None else bias
    best = None
    for y in itertools.product(range(q), repeat=n):
        K = _map_at_y(T, y)
        basis = nullspace(K)
        codim = n - len(basis)
        pts = _span(ctx, basis, n)
        ranks = rank_batch(ctx, _flat_stack(T, pts))
        mean = Fraction(int(ranks.sum()), len(pts))
        lhs = a * mean + codim
        if best is None or lhs < best[0]:
            best = (lhs, y, basis, codim, mean)
    lhs, y, basis, codim, mean = best
    holds = _q_power_le_bias(q, lhs, bias, a + 1)
    return SubspaceCertificate(tuple(y), basis, codim, mean, a, lhs, bias, holds, q)


# -- slice decompositions ---------------------------------------------------------------


@dataclass(frozen=True)
class SliceTerm:
    """``linear(x_slot) * rest(other two blocks)``."""

    slot: int
    linear: MultilinearForm
    rest: MultilinearForm

    def value(self) -> MultilinearForm:
        return mul_disjoint(self.linear, self.rest)

    def to_json(self) -> dict:
        return {"slot": self.slot, "linear": self.linear.to_json(), "rest": self.rest.to_json()}


@dataclass
class SliceDecomposition:
    ctx: FieldCtx
    n: int
    terms: list[SliceTerm]
    certificate: SubspaceCertificate | None = None

    @property
    def count(self) -> int:
        return len(self.terms)

    def value(self) -> Tensor3:
        acc = MultilinearForm.zero(self.ctx, BLOCKS, self.n)
        for t in self.terms:
            acc = acc + t.value()
        return Tensor3(acc)

    def slot_counts(self) -> dict[int, int]:
        out = {1: 0, 2: 0, 3: 0}
        for t in self.terms:
            out[t.slot] += 1
        return out

    def to_json(self) -> dict:
        doc = {"field": self.ctx.to_json(), "n": self.n, "count": self.count,
               "terms": [t.to_json() for t in self.terms]}
        if self.certificate is not None:
            c = self.certificate
            doc["subspace"] = {"y0": list(c.y0), "basis": [list(v) for v in c.basis],
                               "codim": c.codim, "mean_rank": str(c.mean_rank), "a": str(c.a)}
        return doc


def slice_bound_holds(q: int, count: int, bias: Fraction) -> bool:
    """Exact ``count <= (3 + 2/(q-1)) AR``, i.e. ``q^{-count (q-1)} >= bias^{3q-1}``."""
    return bias.numerator ** (3 * q - 1) * q ** (count * (q - 1)) <= bias.denominator ** (3 * q - 1)


def slice_decompose(T: Tensor3, a: Fraction | None = None, budget: int = DEFAULT_BUDGET,
                    check: bool = True) -> SliceDecomposition:
    """Slice decomposition through a low-rank subspace and the d=1 algorithm.

    Directions outside ``U`` are peeled off as slot-1 slices; on ``U`` the
    flattening is decomposed by :func:`mlrank.decomp.pr_decompose_d1`, whose
    scalar-``u`` terms become slot-2 slices and scalar-``v`` terms slot-3
    slices.
    """
    from .decomp import pr_decompose_d1

    ctx, n = T.ctx, T.n
    q = ctx.q
    if T.is_zero():
        return SliceDecomposition(ctx, n, [], None)
    bias_d = bias_direct(T, budget)
    if check and bias_d != bias_by_rank(T, budget):
        raise MlrankError("bias disagreement")
    cert = find_subspace(T, a, budget, bias_d)
    m = len(cert.basis)
    cols = complete_basis(ctx, cert.basis, n)
    L = [[cols[t][i] for t in range(n)] for i in range(n)]      # x = L x'
    Linv = scalar_inverse(ScalarMatrix._raw(ctx, L)).rows
    Tp = T.form.substitute_linear(1, L)
    terms: list[SliceTerm] = []

    # directions w_t (t >= m): slice  (L^{-1} x)_t * G_t(y, z)
    for t in range(m, n):
        G = {(j, k): c for (i, j, k), c in Tp.terms.items() if i == t}
        if not G:
            continue
        lin = MultilinearForm(ctx, (1,), n, {(i,): Linv[t][i] for i in range(n) if Linv[t][i]},
                              check=False)
        terms.append(SliceTerm(1, lin, MultilinearForm(ctx, (2, 3), n, G, check=False)))

    TU = Tensor3(MultilinearForm(ctx, BLOCKS, n, {idx: c for idx, c in Tp.terms.items() if idx[0] < m},
                                 check=False))
    if not TU.is_zero():
        _, _, _, _, D = pr_decompose_d1(flatten(TU), point_budget=budget)
        for term in D.terms:
            if term.S == ():
                # (u . y) * sum_k v_k(x') z_k
                lin = MultilinearForm(ctx, (2,), n, {(j,): f.terms.get((), 0) for j, f in enumerate(term.u)
                                                     if f.terms})
                rest = {}
                for k, f in enumerate(term.v):
                    for (i,), c in f.terms.items():
                        rest[(i, k)] = ctx.add(rest.get((i, k), 0), c)
                rest_f = MultilinearForm(ctx, (1, 3), n, {k: v for k, v in rest.items() if v}, check=False)
                terms.append(SliceTerm(2, lin, rest_f.substitute_linear(1, Linv)))
            else:
                # (v . z) * sum_j u_j(x') y_j
                lin = MultilinearForm(ctx, (3,), n, {(k,): f.terms.get((), 0) for k, f in enumerate(term.v)
                                                     if f.terms})
                rest = {}
                for j, f in enumerate(term.u):
                    for (i,), c in f.terms.items():
                        rest[(i, j)] = ctx.add(rest.get((i, j), 0), c)
                rest_f = MultilinearForm(ctx, (1, 2), n, {k: v for k, v in rest.items() if v}, check=False)
                terms.append(SliceTerm(3, lin, rest_f.substitute_linear(1, Linv)))

    out = SliceDecomposition(ctx, n, terms, cert)
    if check:
        if out.value() != T:
            raise BoundViolation("slice decomposition does not reconstruct T")
        if not cert.holds:
            raise BoundViolation("subspace certificate fails")
        if not slice_bound_holds(q, out.count, bias_d):
            raise BoundViolation(f"{out.count} slices exceed (3 + 2/(q-1)) AR")
    return out
