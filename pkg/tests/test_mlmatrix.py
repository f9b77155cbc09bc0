import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import fields, form_matrices, scalar_matrices
from mlrank.errors import SingularMatrix
from mlrank.field import extension, field_of_order
from mlrank.mform import MultilinearForm
from mlrank.mlmatrix import (FormMatrix, ScalarMatrix, all_vectors, complete_basis, eval_matrix,
                             eval_stack, find_invertible_submatrix, iter_points, kron, nullspace,
                             point_at, scalar_inverse, scalar_rank)


def image_rank(A: ScalarMatrix) -> int:
    """Rank as log_q of the size of the column space, by enumeration."""
    ctx = A.ctx
    a, b = A.shape
    image = set()
    for x in itertools.product(range(ctx.q), repeat=b):
        y = []
        for i in range(a):
            s = 0
            for j in range(b):
                s = ctx.add(s, ctx.mul(A.rows[i][j], x[j]))
            y.append(s)
        image.add(tuple(y))
    r = 0
    while ctx.q**r < len(image):
        r += 1
    return r


@given(scalar_matrices(max_dim=3))
def test_rank_matches_image_size(A):
    assert A.rank() == image_rank(A)
    assert A.transpose().rank() == A.rank()


@given(scalar_matrices(max_dim=4))
def test_pivots_give_invertible_block(A):
    r, rows, cols = scalar_rank(A)
    assert len(rows) == len(cols) == r
    if r:
        sub = A.submatrix(rows, cols)
        assert sub @ scalar_inverse(sub) == ScalarMatrix.identity(A.ctx, r)


@given(scalar_matrices(max_dim=4))
def test_nullspace(A):
    N = nullspace(A)
    b = A.shape[1]
    assert len(N) == b - A.rank()
    for v in N:
        col = ScalarMatrix(A.ctx, [[x] for x in v])
        assert (A @ col).is_zero()
    if N:
        assert ScalarMatrix(A.ctx, N).rank() == len(N)


@given(fields(), st.data())
def test_complete_basis(ctx, data):
    n = data.draw(st.integers(1, 4))
    A = data.draw(scalar_matrices(ctx, max_dim=4))
    vecs = [A.rows[i] for i in scalar_rank(A)[1] if len(A.rows[i]) == n]
    B = complete_basis(ctx, vecs, n)
    assert len(B) == n and ScalarMatrix(ctx, B).rank() == n
    assert B[:len(vecs)] == [tuple(v) for v in vecs]


def test_inverse_singular():
    F = field_of_order(5)
    with pytest.raises(SingularMatrix):
        scalar_inverse(ScalarMatrix(F, [[1, 2], [2, 4]]))
    with pytest.raises(ValueError):
        scalar_inverse(ScalarMatrix(F, [[1, 2]]))


def test_matmul_shapes():
    F = field_of_order(7)
    A = ScalarMatrix(F, [[1, 2, 3]])
    B = ScalarMatrix(F, [[1], [1], [1]])
    assert A @ B == ScalarMatrix(F, [[6]])
    assert (B @ A).shape == (3, 3)


@given(form_matrices(d=2, max_dim=3))
def test_eval_stack_matches_pointwise(M):
    V = all_vectors(M.ctx.q, M.n)
    stack = eval_stack(M, [V] * M.d)
    for k, pt in enumerate(iter_points(M.ctx.q, M.n, M.d)):
        assert stack[k].tolist() == [list(r) for r in eval_matrix(M, pt).rows]
        assert point_at(M.ctx.q, M.n, M.d, k) == pt
        if k > 30:
            break


@given(form_matrices(d=2, max_dim=3), st.data())
def test_scalar_transform(M, data):
    ctx = M.ctx
    a, b = M.shape
    P = ScalarMatrix(ctx, [[data.draw(st.integers(0, ctx.q - 1)) for _ in range(a)] for _ in range(2)])
    Q = ScalarMatrix(ctx, [[data.draw(st.integers(0, ctx.q - 1)) for _ in range(2)] for _ in range(b)])
    N = M.scalar_transform(P, Q)
    pt = ((1,) * M.n, (1,) + (0,) * (M.n - 1))
    assert eval_matrix(N, pt) == P @ eval_matrix(M, pt) @ Q


def test_kron_evaluates_to_kron():
    F = field_of_order(3)
    A = FormMatrix(F, (1,), 2, [[MultilinearForm.var(F, 1, 0, 2), MultilinearForm.var(F, 1, 1, 2)]])
    B = FormMatrix(F, (2,), 2, [[MultilinearForm.var(F, 2, 1, 2)], [MultilinearForm.var(F, 2, 0, 2)]])
    K = kron(A, B)
    assert K.shape == (2, 2) and K.blocks == (1, 2)
    for x, y in itertools.product(all_vectors(3, 2).tolist(), repeat=2):
        want = np.kron(np.array(eval_matrix(A, [x]).rows), np.array(eval_matrix(B, [y]).rows)) % 3
        assert [list(r) for r in eval_matrix(K, (x, y)).rows] == want.tolist()


def test_find_invertible_submatrix():
    F = field_of_order(2)
    x = lambda j: MultilinearForm.var(F, 1, j, 2)  # noqa: E731
    z = MultilinearForm.zero(F, (1,), 2)
    M = FormMatrix(F, (1,), 2, [[x(0), z], [z, x(1)]])
    rows, cols = find_invertible_submatrix(M, [(1, 1)], 2)
    assert (rows, cols) == ((0, 1), (0, 1))
    with pytest.raises(SingularMatrix):
        find_invertible_submatrix(M, [(1, 0)], 2)


@given(form_matrices(max_dim=3))
def test_json_roundtrip(M):
    doc = json.loads(json.dumps(M.to_json()))
    assert FormMatrix.from_json(doc) == M


def test_lift_commutes_with_evaluation():
    F = field_of_order(2)
    ext = extension(F, 2)
    M = FormMatrix(F, (1,), 2, [[MultilinearForm(F, (1,), 2, {(0,): 1, (1,): 1})]])
    L = M.lift(ext)
    assert L.ctx == ext.big
    for v in all_vectors(2, 2).tolist():
        big_v = [ext.embed(c) for c in v]
        assert eval_matrix(L, [big_v]).rows[0][0] == ext.embed(eval_matrix(M, [v]).rows[0][0])


def test_bad_points():
    F = field_of_order(3)
    M = FormMatrix.zeros(F, 2, 2, 1, 1)
    with pytest.raises(ValueError):
        eval_matrix(M, [(0, 0)])
    with pytest.raises(ValueError):
        eval_matrix(M, [(0, 0, 0), (0, 0, 0)])
