import itertools
import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import forms
from mlrank.corpus import gen_random_tensor
from mlrank.errors import BudgetExceeded
from mlrank.field import field_of_order
from mlrank.tensor3 import (AnalyticRank, Tensor3, analytic_rank, ar_at_least, bias_by_rank,
                            bias_direct, default_a, find_subspace, flatten, slice_bound_holds,
                            slice_decompose, unflatten, zero_set_moment)


def brute_bias(T: Tensor3) -> Fraction:
    ctx, n = T.ctx, T.n
    vecs = list(itertools.product(range(ctx.q), repeat=n))
    zero = sum(T.form.partial_eval({1: x, 2: y}).is_zero() for x in vecs for y in vecs)
    return Fraction(zero, len(vecs) ** 2)


tensors = st.builds(lambda f: Tensor3(f), forms(blocks=(1, 2, 3), n=2, max_terms=6))
tensors_f2 = st.builds(lambda f: Tensor3(f), forms(field_of_order(2), (1, 2, 3), 2, max_terms=8))


def test_small_values():
    F = field_of_order(3)
    assert bias_direct(Tensor3.zero(F, 2)) == 1
    mono = Tensor3.from_terms(F, 2, {(0, 0, 0): 1})
    assert bias_direct(mono) == Fraction(5, 9)
    bias, ar = analytic_rank(mono)
    assert bias == Fraction(5, 9) and ar == pytest.approx(0.535, abs=1e-3)
    assert AnalyticRank(Fraction(1), 3).value == 0.0


@given(tensors)
def test_bias_two_ways(T):
    b = brute_bias(T)
    assert bias_direct(T) == b == bias_by_rank(T)
    lhs, rhs = zero_set_moment(T)
    assert lhs == rhs


@given(tensors_f2, tensors_f2)
def test_bias_multiplies_over_direct_sums(S, T):
    assert bias_direct(S.direct_sum(T)) == bias_direct(S) * bias_direct(T)


@given(tensors)
def test_flatten_roundtrip(T):
    M = flatten(T)
    assert M.shape == (T.n, T.n) and unflatten(M) == T


@given(tensors)
def test_json_roundtrip(T):
    assert Tensor3.from_json(json.loads(json.dumps(T.to_json()))) == T


@given(tensors_f2)
def test_ar_comparisons(T):
    bias = bias_direct(T)
    ar = AnalyticRank(bias, 2).value
    assert ar_at_least(T, Fraction(0))
    for v in (Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2)):
        if abs(float(v) - ar) > 1e-9:
            assert ar_at_least(T, v) == (float(v) < ar)


@settings(max_examples=40)
@given(tensors)
def test_subspace_certificate(T):
    cert = find_subspace(T)
    assert cert.holds
    assert cert.a == default_a(T.ctx.q)
    assert cert.codim == T.n - len(cert.basis)
    # U really is the kernel of x -> B(x, y0)
    for v in cert.basis:
        assert T.form.partial_eval({1: v, 2: cert.y0}).is_zero()


@settings(max_examples=60)
@given(tensors)
def test_slice_decomposition(T):
    S = slice_decompose(T)
    assert S.value() == T
    bias = bias_direct(T)
    assert slice_bound_holds(T.ctx.q, S.count, bias)
    for t in S.terms:
        assert t.linear.blocks == (t.slot,)
        assert set(t.rest.blocks) == {1, 2, 3} - {t.slot}
    assert sum(S.slot_counts().values()) == S.count


def test_slice_edge_cases():
    F = field_of_order(2)
    assert slice_decompose(Tensor3.zero(F, 2)).count == 0
    mono = Tensor3.from_terms(F, 2, {(1, 0, 1): 1})
    S = slice_decompose(mono)
    assert S.value() == mono and S.count == 1
    doc = json.loads(json.dumps(S.to_json()))
    assert doc["count"] == 1 and "subspace" in doc


def test_slice_bound_is_exact_at_the_edge():
    # q = 2: the bound reads 2^{-c} >= bias^5
    assert slice_bound_holds(2, 5, Fraction(1, 2))
    assert not slice_bound_holds(2, 6, Fraction(1, 2))
    assert slice_bound_holds(3, 0, Fraction(1))


@pytest.mark.parametrize("seed", range(5))
def test_seeded_tensors_over_f3(seed):
    T = Tensor3(gen_random_tensor(2, 3, 0.4, seed))
    S = slice_decompose(T)
    assert S.value() == T
    assert slice_bound_holds(3, S.count, bias_direct(T))


def test_budget():
    T = Tensor3(gen_random_tensor(3, 2, 0.5, 0))
    with pytest.raises(BudgetExceeded):
        bias_direct(T, budget=10)
    with pytest.raises(BudgetExceeded):
        find_subspace(T, budget=10)
