import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import fields, forms
from mlrank.errors import NotAUnit
from mlrank.field import field_of_order
from mlrank.localring import (LocalElem, approx_derivative_oracle, approx_extract, blocks_mask,
                              expand, expand_poly, lr_inv, lr_matinv, lr_matmul, lr_mul,
                              mask_blocks)
from mlrank.mform import MultilinearForm, Poly
from mlrank.selfcheck import example_quotient


def test_masks():
    assert mask_blocks(0b101) == (1, 3)
    assert blocks_mask((1, 3)) == 0b101
    for m in range(16):
        assert blocks_mask(mask_blocks(m)) == m


@pytest.mark.parametrize("q", [2, 3, 5, 7])
def test_quotient_example(q):
    ring, oracle, expected = example_quotient(q)
    assert ring == oracle == expected
    if q == 2:
        assert ring == MultilinearForm(field_of_order(2), (1,), 2, {(0,): 1, (1,): 1})


def test_expand_recovers_form():
    F = field_of_order(5)
    f = MultilinearForm(F, (1, 2), 2, {(0, 1): 3, (1, 0): 1})
    e = expand(f, ((1, 2), (0, 4)))
    assert approx_extract(e) == f
    assert e.value == f.eval(((1, 2), (0, 4)))
    # the block-1 component is f with block 2 fixed at p_2
    assert e.component(0b01) == f.partial_eval({2: (0, 4)})


@st.composite
def local_elems(draw, ctx, d, n, point):
    comps = {}
    for m in range(1 << d):
        comps[m] = draw(forms(ctx, mask_blocks(m), n, max_terms=3))
    return LocalElem(ctx, d, n, point, comps)


@given(fields([2, 3, 5]), st.data())
def test_ring_laws(ctx, data):
    d, n = 2, 2
    pt = ((1, 0), (0, 1))
    f, g, h = (data.draw(local_elems(ctx, d, n, pt)) for _ in range(3))
    assert lr_mul(f, g) == lr_mul(g, f)
    assert lr_mul(f, lr_mul(g, h)) == lr_mul(lr_mul(f, g), h)
    assert lr_mul(f, g + h) == lr_mul(f, g) + lr_mul(f, h)


@given(fields([2, 3, 5, 7]), st.data())
def test_inverse(ctx, data):
    pt = ((1, 0), (0, 1))
    f = data.draw(local_elems(ctx, 2, 2, pt))
    one = LocalElem.const(ctx, 2, 2, pt, 1)
    if f.value == 0:
        with pytest.raises(NotAUnit):
            lr_inv(f)
    else:
        assert lr_mul(f, lr_inv(f)) == one


@given(st.sampled_from([3, 5]), st.data())
def test_expand_poly_is_a_ring_map(q, data):
    ctx = field_of_order(q)
    exps = st.tuples(*[st.integers(0, 2)] * 4)
    f = Poly(ctx, 4, data.draw(st.dictionaries(exps, st.integers(1, q - 1), max_size=4)))
    g = Poly(ctx, 4, data.draw(st.dictionaries(exps, st.integers(1, q - 1), max_size=4)))
    pt = ((1, 2), (0, 1))
    E = lambda h: expand_poly(h, pt, 2, 2)  # noqa: E731
    assert E(f * g) == lr_mul(E(f), E(g))
    assert E(f + g) == E(f) + E(g)
    assert E(f).value == f.evaluate([1, 2, 0, 1])


@given(st.sampled_from([3, 5, 7]), st.data())
def test_quotient_of_forms_two_ways(q, data):
    """[g h / k]_p for forms g on [2], h, k linear in block 1, by ring and by derivatives."""
    ctx = field_of_order(q)
    g = data.draw(forms(ctx, (1, 2), 2))
    h = data.draw(forms(ctx, (1,), 2))
    k = data.draw(forms(ctx, (1,), 2))
    pt = ((1, 1), (1, 0))
    if k.eval({1: pt[0]}) == 0:
        return
    num = g.to_poly(2) * h.to_poly(2)
    den = k.to_poly(2)
    ring = approx_extract(lr_mul(expand_poly(num, pt, 2, 2), lr_inv(expand_poly(den, pt, 2, 2))))
    assert ring == approx_derivative_oracle(num, den, pt, 2, 2)


def test_oracle_input_checks():
    ctx = field_of_order(3)
    a, b = Poly.var(ctx, 2, 0), Poly.var(ctx, 2, 1)
    with pytest.raises(ValueError):
        approx_derivative_oracle(a * a, a, ((1, 0),), 2, 1)  # wrong variable count
    with pytest.raises(ValueError):
        approx_derivative_oracle(a * a * a, a, ((1, 0),), 1, 2)  # degree 2 quotient
    with pytest.raises(ZeroDivisionError):
        approx_derivative_oracle(a * b, b, ((1, 0),), 1, 2)


def test_matinv():
    ctx = field_of_order(3)
    pt = ((1, 0), (0, 1))
    x = [[expand(MultilinearForm(ctx, (1, 2), 2, t), pt) for t in row]
         for row in ([{(0, 1): 1, (1, 1): 1}, {(0, 0): 1}], [{(1, 0): 2}, {(0, 1): 1}])]
    inv = lr_matinv(x)
    zero = LocalElem(ctx, 2, 2, pt, {})
    prod = lr_matmul(x, inv, zero)
    for i, j in itertools.product(range(2), repeat=2):
        assert prod[i][j] == LocalElem.const(ctx, 2, 2, pt, int(i == j))
