"""A quick, deterministic run over the canonical examples.

Each check returns ``(passed, detail)``; :func:`run_all` collects them in a
table keyed by the result being exercised.
"""

from __future__ import annotations

import time
from fractions import Fraction

from .corpus import ex45, gen_random, gen_random_tensor, intro_diag, intro_skew, tight_diag, tight_kron
from .decomp import bound_constant, pr_decompose, pr_decompose_d1
from .field import field_of_order
from .localring import approx_derivative_oracle, approx_extract, expand_poly, lr_inv, lr_mul
from .mform import MultilinearForm, Poly
from .mlmatrix import ScalarMatrix
from .polyops import multsz_check
from .ranks import avg_rank, comm_rank, expected_partial_cr, max_rank, pr_exact_d1
from .schur import diff_schur, schur_audit, schur_scalar
from .tensor3 import Tensor3, analytic_rank, slice_bound_holds, slice_decompose


def example_quotient(q: int) -> tuple[MultilinearForm, MultilinearForm, MultilinearForm]:
    """``[(a1^2 + a2^2) / (a1 + a2)]_{e1}`` by the local ring, by derivatives, and the expected form."""
    ctx = field_of_order(q)
    a1, a2 = Poly.var(ctx, 2, 0), Poly.var(ctx, 2, 1)
    num, den = a1 * a1 + a2 * a2, a1 + a2
    p = ((1, 0),)
    # the quotient has degree 1 in one block
    ring = approx_extract(lr_mul(expand_poly(num, p, 1, 2), lr_inv(expand_poly(den, p, 1, 2))))
    oracle = approx_derivative_oracle(num, den, p, 1, 2)
    expected = MultilinearForm(ctx, (1,), 2, {(0,): 1, (1,): ctx.neg(1)})
    return ring, oracle, expected


def check_approximation():
    for q in (2, 3, 5, 7):
        ring, oracle, expected = example_quotient(q)
        if not ring == oracle == expected:
            return False, f"q={q}: ring {ring}, oracle {oracle}"
    return True, "a1 - a2 over F_2, F_3, F_5, F_7, both constructions"


def check_tight_schur():
    M = ex45(7)
    with schur_audit() as log:
        rem, terms = diff_schur(M, [0], [0], ((1, 0), (1, 0)))
    cr = comm_rank(rem)
    ok = len(terms) == 4 and cr == 4 and log[0].ok
    return ok, f"{len(terms)} terms, rank of remainder {cr}"


def check_intro():
    d2, s2, s3 = intro_diag(2), intro_skew(2), intro_skew(3)
    got = (max_rank(d2), comm_rank(d2), comm_rank(s2), pr_exact_d1(s2), comm_rank(s3), pr_exact_d1(s3))
    return got == (2, 3, 2, 3, 2, 3), f"(MaxR, CR) = {got[:2]}, skew CR/PR = {got[2:]}"


def check_tight_families():
    got = [(max_rank(tight_diag(2, k)), comm_rank(tight_diag(2, k))) for k in (2, 3)]
    K = tight_kron(2, 2, 2)
    got.append((max_rank(K), comm_rank(K)))
    return got == [(2, 3), (4, 7), (4, 9)], f"{got}"


def check_average_rank():
    for M in (intro_diag(2), intro_skew(3), tight_diag(2, 3), ex45(2), tight_kron(2, 2, 2)):
        q, d = M.ctx.q, M.d
        cr, avg, mx = comm_rank(M), avg_rank(M), max_rank(M)
        lo = Fraction(q - 1, q) ** d * cr
        if not (lo <= avg <= mx and mx > lo):
            return False, f"{M!r}: {lo} <= {avg} <= {mx}"
    return True, "5 corpus matrices"


def check_partial_cr():
    for seed in range(5):
        M = gen_random(2, 2, 3, 3, 2, 0.4, seed)
        if expected_partial_cr(M) < Fraction(1, 2) * comm_rank(M):
            return False, f"seed {seed}"
    return True, "5 random d=2 matrices over F_2"


def check_multiplicity():
    ctx = field_of_order(2)
    count = 0
    monos = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    for mask in range(1, 64):
        f = Poly(ctx, 2, {monos[i]: 1 for i in range(6) if mask >> i & 1})
        if not multsz_check(f)[2]:
            return False, f"{f}"
        count += 1
    return True, f"{count} polynomials over F_2"


def check_d1():
    for M in (intro_diag(2), intro_skew(2), intro_skew(3)):
        _, _, r1, r2, D = pr_decompose_d1(M)
        if D.value() != M or r1 + r2 > 2 * comm_rank(M):
            return False, f"{M!r}"
    return True, "intro matrices"


def check_general():
    worst = Fraction(0)
    for seed in range(5):
        M = gen_random(2, 2, 4, 4, 7, 0.5, seed)
        D = pr_decompose(M)
        cr = comm_rank(M)
        if D.value() != M or len(D) > bound_constant(2, 7).constant * cr:
            return False, f"seed {seed}"
        if cr:
            worst = max(worst, Fraction(len(D), cr))
    return True, f"5 random 4x4 over F_7, worst ratio {worst}"


def check_extension():
    M = gen_random(2, 2, 3, 3, 2, 0.5, 1)
    D = pr_decompose(M, allow_extension=True, eager_extension=True)
    e = D.log[0]["extension_degree"]
    bound = e * bound_constant(2, 2 ** e).constant * comm_rank(M)
    return D.value() == M and len(D) <= bound, f"e={e}, {len(D)} terms <= {bound}"


def check_slices():
    for seed in range(10):
        T = Tensor3(gen_random_tensor(2, 2, 0.5, seed))
        bias, _ = analytic_rank(T)
        S = slice_decompose(T)
        if S.value() != T or not slice_bound_holds(2, S.count, bias):
            return False, f"seed {seed}"
    return True, "10 random tensors over F_2, n=2"


def check_scalar_schur():
    ctx = field_of_order(7)
    M = ScalarMatrix(ctx, [[2, 3], [4, 5]])
    S = schur_scalar(M, [0], [0])
    return S == ScalarMatrix(ctx, [[0, 0], [0, 6]]) and S.rank() == 1, f"{S!r}"


CHECKS = [
    ("approximation map (two constructions)", check_approximation),
    ("tightness of the Schur bounds", check_tight_schur),
    ("max-rank vs commutative rank examples", check_intro),
    ("tight families for the rank ratio", check_tight_families),
    ("average rank vs commutative rank", check_average_rank),
    ("expected partial commutative rank", check_partial_cr),
    ("multiplicity Schwartz-Zippel", check_multiplicity),
    ("PR <= 2 CR for linear matrices", check_d1),
    ("PR <= C(d,q) CR", check_general),
    ("field extension transfer", check_extension),
    ("slice rank vs analytic rank", check_slices),
    ("scalar Schur complement", check_scalar_schur),
]


def run_all():
    rows = []
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        rows.append((name, bool(ok), detail, time.perf_counter() - t0))
    return rows
