import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings

from conftest import form_matrices
from mlrank.corpus import intro_diag, intro_skew, tight_diag, tight_kron
from mlrank.errors import BudgetExceeded
from mlrank.field import field_of_order
from mlrank.mlmatrix import FormMatrix, ScalarMatrix, eval_matrix, iter_points
from mlrank.polyops import det_poly
from mlrank.ranks import (avg_rank, comm_rank, count_subspaces, expected_partial_cr, grid_ranks,
                          iter_subspaces, max_rank, max_rank_point, pr_exact_d1, sample_ranks,
                          slices)


def minor_rank(M: FormMatrix) -> int:
    """Largest size of a nonzero minor, by expanding every determinant."""
    a, b = M.shape
    best = 0
    for k in range(1, min(a, b) + 1):
        if any(not det_poly(M.submatrix(r, c)).is_zero()
               for r in itertools.combinations(range(a), k)
               for c in itertools.combinations(range(b), k)):
            best = k
    return best


def point_ranks(M: FormMatrix) -> list[int]:
    return [eval_matrix(M, pt).rank() for pt in iter_points(M.ctx.q, M.n, M.d)]


def invertibles(ctx, k):
    for flat in itertools.product(range(ctx.q), repeat=k * k):
        P = ScalarMatrix(ctx, [flat[i * k:(i + 1) * k] for i in range(k)])
        if P.rank() == k:
            yield P


def pr_by_transforms(M: FormMatrix) -> int:
    """min r1 + r2 such that P M Q has a zero (a-r1) x (b-r2) bottom-right block."""
    ctx = M.ctx
    a, b = M.shape
    S = slices(M)
    best = min(a, b)
    for P in invertibles(ctx, a):
        for Q in invertibles(ctx, b):
            T = [P @ s @ Q for s in S]
            for r1 in range(a + 1):
                for r2 in range(b + 1):
                    if r1 + r2 < best and all(t.rows[i][j] == 0 for t in T
                                              for i in range(r1, a) for j in range(r2, b)):
                        best = r1 + r2
    return best


@pytest.mark.parametrize("M,expected", [
    (intro_diag(2), (2, 3)), (intro_diag(3), (3, 3)),
    (intro_skew(2), (2, 2)), (intro_skew(3), (2, 2)),
    (tight_diag(2, 2), (2, 3)), (tight_diag(2, 3), (4, 7)), (tight_kron(2, 2, 2), (4, 9)),
])
def test_known_ranks(M, expected):
    assert (max_rank(M), comm_rank(M)) == expected


@pytest.mark.parametrize("mode", ["symbolic", "exhaustive", "probabilistic", "auto"])
def test_cr_modes_on_corpus(mode):
    assert comm_rank(intro_diag(2), mode=mode) == 3
    assert comm_rank(tight_diag(2, 2), mode=mode) == 3


@settings(max_examples=40)
@given(form_matrices(qs=(2, 3), max_dim=3))
def test_comm_rank_equals_minor_rank(M):
    r = minor_rank(M)
    assert comm_rank(M) == r
    assert comm_rank(M, mode="symbolic") == r
    if M.n * M.d <= 4:
        assert comm_rank(M, mode="exhaustive") == r
    assert comm_rank(M, mode="probabilistic") <= r


@given(form_matrices(qs=(2, 3, 4), max_dim=3))
def test_max_and_avg_rank(M):
    ranks = point_ranks(M)
    assert max_rank(M) == max(ranks)
    assert avg_rank(M) == Fraction(sum(ranks), len(ranks))
    assert sorted(grid_ranks(M).tolist()) == sorted(ranks)
    r, pt, exhaustive = max_rank_point(M)
    assert exhaustive and r == max(ranks) and eval_matrix(M, pt).rank() == r
    assert max_rank(M, mode="sample", samples=16) <= r <= comm_rank(M)


def test_max_rank_point_sampling_path():
    M = tight_kron(2, 2, 2)
    r, pt, exhaustive = max_rank_point(M, budget=4)
    assert not exhaustive and eval_matrix(M, pt).rank() == r <= 4
    pts, ranks = sample_ranks(M, 5, seed=3)
    assert len(pts) == len(ranks) == 5


def test_budgets():
    with pytest.raises(BudgetExceeded):
        avg_rank(tight_kron(2, 2, 2), budget=10)
    with pytest.raises(ValueError):
        comm_rank(intro_diag(2), mode="bogus")


@settings(max_examples=25)
@given(form_matrices(qs=(2,), d=2, n=2, max_dim=3))
def test_expected_partial_cr_bound(M):
    assert expected_partial_cr(M) >= Fraction(1, 2) * comm_rank(M)


@pytest.mark.parametrize("q,dim", [(2, 1), (2, 3), (3, 2), (4, 2), (2, 4)])
def test_subspace_enumeration(q, dim):
    ctx = field_of_order(q)
    subs = list(iter_subspaces(ctx, dim))
    assert len(subs) == count_subspaces(q, dim)
    # echelon bases are distinct and independent
    assert len(set(subs)) == len(subs)
    assert all(ScalarMatrix(ctx, s).rank() == len(s) for s in subs if s)


def test_pr_exact_intro():
    assert pr_exact_d1(intro_skew(2)) == 3
    assert pr_exact_d1(intro_skew(3)) == 3
    assert pr_exact_d1(intro_diag(2)) == 3


@settings(max_examples=30)
@given(form_matrices(qs=(2,), d=1, max_dim=2))
def test_pr_exact_matches_transform_search_f2(M):
    assert pr_exact_d1(M) == pr_by_transforms(M)


@settings(max_examples=10)
@given(form_matrices(qs=(3,), d=1, n=2, max_dim=2))
def test_pr_exact_matches_transform_search_f3(M):
    assert pr_exact_d1(M) == pr_by_transforms(M)


@given(form_matrices(qs=(2, 3), d=1, max_dim=3))
def test_pr_sandwich(M):
    """CR <= PR <= 2 CR for matrices of linear forms."""
    cr, pr = comm_rank(M), pr_exact_d1(M)
    assert cr <= pr <= 2 * cr
    with pytest.raises(ValueError):
        pr_exact_d1(FormMatrix.zeros(M.ctx, 2, 1, 1, 1))
