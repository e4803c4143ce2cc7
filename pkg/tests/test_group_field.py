import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from palmtail.errors import DimensionMismatch, InvalidArgument
from palmtail.group_field import (Cone, Field, Group, exceedance_count, exceedance_support,
                                  normalize_to_W, scale, shift, support_measure)

Z2 = Group.cyclic(2)
OMEGA_A = Field.from_list(Z2, [1.0, 0.5])
OMEGA_B = Field.from_list(Z2, [0.5, 1.0])


def test_group_basics():
    g = Group.cyclic(3, 2)
    assert g.size == 6 and g.dim == 2
    assert g.elements[0] == (0, 0) and g.elements[-1] == (2, 1)
    assert g.add((2, 1), (1, 1)) == (0, 0)
    assert g.neg((1, 0)) == (2, 0)
    assert g.haar([(0, 0), (3, 0), (1, 1)]) == 2


def test_window_group():
    w = Group.window([(-2, 2)])
    assert w.size == 5 and w.elements[0] == (-2,)
    assert w.contains(2) and not w.contains(3)
    assert w.add(2, 1) == (3,)
    with pytest.raises(InvalidArgument):
        Group.window([(3, 1)])


def test_element_dimension_checked():
    with pytest.raises(DimensionMismatch):
        Group.cyclic(2, 2).element(1)


def test_shift_examples():
    assert shift(OMEGA_A, 1).allclose(OMEGA_B)
    assert shift(OMEGA_A, 0).allclose(OMEGA_A)


def test_shift_window_pads_with_zero():
    w = Group.window([(0, 3)])
    f = Field.from_list(w, [1, 2, 3, 4])
    assert shift(f, 1).tolist() == [2, 3, 4, 0]
    assert shift(f, -2).tolist() == [0, 0, 1, 2]
    assert shift(f, 9).tolist() == [0, 0, 0, 0]


def test_shift_two_dimensional():
    g = Group.cyclic(2, 3)
    f = Field.from_list(g, np.arange(6.0))
    s = shift(f, (1, 2))
    assert s((0, 0)) == f((1, 2))
    assert s((1, 1)) == f((0, 0))


def test_scale_examples():
    assert scale(1, OMEGA_A).allclose(OMEGA_A)
    assert scale(2, OMEGA_A).tolist() == [2.0, 1.0]
    for bad in (0, -1, math.nan, math.inf):
        with pytest.raises(InvalidArgument):
            scale(bad, OMEGA_A)


def test_normalize_to_W():
    y = Field.from_list(Z2, [1.5, 3.0])
    assert normalize_to_W(y).tolist() == [1.0, 2.0]
    assert normalize_to_W(OMEGA_A).allclose(OMEGA_A)
    z = Field.from_list(Z2, [0.0, 0.0])
    assert normalize_to_W(z).tolist() == [1.0, 1.0]


def test_normalize_zero_vector_field_uses_unit():
    g = Group.cyclic(2)
    f = Field(g, np.zeros((2, 3)), Cone(3))
    assert normalize_to_W(f).tolist() == [[1, 0, 0], [1, 0, 0]]


def test_exceedance_examples():
    assert exceedance_support(scale(3, OMEGA_A)) == {(0,), (1,)}
    assert exceedance_count(scale(3, OMEGA_A)) == 2
    assert exceedance_support(scale(1.5, OMEGA_A)) == {(0,)}
    assert exceedance_support(OMEGA_A, 5.0) == frozenset()
    # strict inequality: a value equal to the level does not count
    assert exceedance_support(OMEGA_A, 1.0) == frozenset()


def test_support_measure_examples():
    assert support_measure(OMEGA_A) == {(0,), (1,)}
    assert support_measure(normalize_to_W(Field.from_list(Z2, [0, 0]))) == {(0,), (1,)}
    assert support_measure(Field.from_list(Group.cyclic(3), [1, 0, 2])) == {(0,), (2,)}


def test_vector_cone_norms():
    f = Field(Group.cyclic(2), np.array([[3.0, 4.0], [0.0, 1.0]]), Cone(2))
    assert f.norms.tolist() == [5.0, 1.0]
    assert exceedance_support(f) == {(0,)}


def test_field_validation():
    with pytest.raises(InvalidArgument):
        Field.from_list(Z2, [-1.0, 1.0])
    with pytest.raises(InvalidArgument):
        Field.from_list(Z2, [math.nan, 1.0])
    with pytest.raises(DimensionMismatch):
        Field.from_list(Z2, [1.0, 2.0, 3.0])


values = st.lists(st.one_of(st.just(0.0), st.floats(1e-6, 10.0)), min_size=4, max_size=4)
site = st.integers(0, 3)


@settings(max_examples=60, deadline=None)
@given(values, site, site)
def test_flow_property(v, s, t):
    g = Group.cyclic(4)
    y = Field.from_list(g, v)
    assert shift(shift(y, s), t).allclose(shift(y, s + t))


@settings(max_examples=60, deadline=None)
@given(values, site, st.floats(0.1, 5.0))
def test_support_covariance_and_homogeneity(v, t, c):
    g = Group.cyclic(4)
    y = Field.from_list(g, v)
    moved = {g.sub(s, t) for s in exceedance_support(y, c)}
    assert exceedance_support(shift(y, t), c) == moved
    u = 2.0
    assert exceedance_support(scale(u, y), c) == exceedance_support(y, c / u)


@settings(max_examples=60, deadline=None)
@given(values, st.floats(0.01, 100.0))
def test_normalize_idempotent_and_zero_homogeneous(v, u):
    y = Field.from_list(Group.cyclic(4), v)
    w = normalize_to_W(y)
    assert normalize_to_W(w).allclose(w)
    if y.norm_at(0) > 0:
        assert np.allclose(normalize_to_W(scale(u, y)).values, w.values, rtol=1e-9, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(values, st.floats(0.1, 10.0), st.floats(0.1, 10.0))
def test_scale_composition(v, u, w):
    y = Field.from_list(Group.cyclic(4), v)
    assert scale(u, scale(w, y)).allclose(scale(u * w, y), atol=1e-9)
