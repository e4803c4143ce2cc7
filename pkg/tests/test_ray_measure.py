import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracle import quad_integral
from palmtail.errors import InvalidArgument, NotNormalized, NotStationary, ZeroField
from palmtail.fixtures import e1_measure, random_tail_measure
from palmtail.group_field import Field, Group, exceedance_count
from palmtail.ray_measure import (Ray, RayMeasure, ThresholdFunctional, TruncatedRayLaw,
                                  campbell_functional, canonicalize, exceedance_mass,
                                  integrate, is_homogeneous, is_stationary, mass,
                                  measures_equal, palm_of_exceedance, restrict,
                                  scale_pushforward, shift_pushforward, sigma_finite_layers,
                                  split_map, stationarize)

Z2 = Group.cyclic(2)
inf = math.inf


def single(w, vals, alpha=1.0, grp=Z2, lower=0.0):
    return RayMeasure.from_rays(alpha, grp, [(w, vals, lower)])


# --- canonicalize -----------------------------------------------------------

def test_canonicalize_rescales_to_unit_max():
    c = canonicalize(single(1.0, [2 / 3, 1 / 3]))
    (r,) = c.rays
    assert r.field.tolist() == pytest.approx([1.0, 0.5])
    assert r.weight == pytest.approx(2 / 3, abs=1e-15)
    assert r.lower == 0.0


def test_canonicalize_preserves_functionals():
    # independent check: the same quadrature before and after rescaling
    m = single(1.0, [2 / 3, 1 / 3])
    c = canonicalize(m)
    for lv in (1.0, 0.25, 2.0):
        fn = lambda y, lv=lv: float(y.norm_at(1) > lv)
        assert quad_integral(c, fn, (lv,)) == pytest.approx(quad_integral(m, fn, (lv,)), rel=1e-10)


def test_canonicalize_idempotent_and_additive(e1):
    c = canonicalize(e1)
    cc = canonicalize(c)
    assert [(r.weight, r.field.tolist()) for r in c.rays] == [(r.weight, r.field.tolist()) for r in cc.rays]
    doubled = canonicalize(single(1.0, [1, 0.5]) + single(1.0, [1, 0.5]))
    assert len(doubled.rays) == 1 and doubled.rays[0].weight == pytest.approx(2.0)


def test_canonicalize_rejects_zero_ray():
    with pytest.raises(ZeroField):
        canonicalize(single(1.0, [0.0, 0.0]))


def test_canonicalize_merges_overlapping_segments():
    m = RayMeasure.from_rays(1.0, Z2, [(1.0, [1, 0.5], 0.0), (1.0, [1, 0.5], 2.0)])
    c = canonicalize(m)
    assert [(r.weight, r.lower, r.upper) for r in c.rays] == [(1.0, 0.0, 2.0), (2.0, 2.0, inf)]
    assert not is_homogeneous(c)


# --- mass -------------------------------------------------------------------

def test_mass_examples(e1):
    assert mass(e1, ThresholdFunctional(((0, 1.0),))) == pytest.approx(1.0, abs=1e-12)
    assert mass(e1, ThresholdFunctional(((0, 2.0),))) == pytest.approx(0.5, abs=1e-12)
    assert mass(e1, ThresholdFunctional()) == inf


def test_mass_matches_quadrature(e1):
    fn = lambda y: float(y.norm_at(0) > 2.0)
    assert quad_integral(e1, fn, (2.0,)) == pytest.approx(0.5, abs=1e-10)
    fn = lambda y: float(y.norm_at(0) > 1.0 and y.norm_at(1) > 1.0)
    assert mass(e1, ThresholdFunctional(((0, 1.0), (1, 1.0)))) == pytest.approx(
        quad_integral(e1, fn), abs=1e-10)


def test_mass_with_power_and_payload(e1):
    f = ThresholdFunctional(((0, 1.0),), payload=lambda w: w.norm_at(1), beta=0.5)
    want = quad_integral(e1, lambda y: (y.norm_at(0) > 1) * y.norm_at(1) / y.max_norm
                         * y.max_norm ** 0.5)
    assert mass(e1, f) == pytest.approx(want, rel=1e-10)


def test_mass_rejects_beta_at_alpha(e1):
    with pytest.raises(InvalidArgument):
        mass(e1, ThresholdFunctional(((0, 1.0),), beta=1.0))


def test_mass_zero_norm_constraint_kills_ray():
    m = single(1.0, [1.0, 0.0])
    assert mass(m, ThresholdFunctional(((1, 1.0),))) == 0.0


# --- pushforwards -----------------------------------------------------------

def test_scale_pushforward(e1):
    f = ThresholdFunctional(((0, 1.0),))
    assert mass(scale_pushforward(e1, 2.0), f) == pytest.approx(2.0, abs=1e-12)
    assert measures_equal(scale_pushforward(e1, 1.0), e1)
    twice = scale_pushforward(scale_pushforward(e1, 1.5), 3.0)
    assert measures_equal(twice, scale_pushforward(e1, 4.5))


def test_scale_pushforward_weights_homogeneous(e1):
    u = 3.0
    a = canonicalize(e1)
    b = canonicalize(scale_pushforward(e1, u))
    for ra, rb in zip(a.rays, b.rays):
        assert rb.field.allclose(ra.field)
        assert rb.weight == pytest.approx(u ** e1.alpha * ra.weight, abs=1e-12)


def test_shift_pushforward(e1):
    assert measures_equal(shift_pushforward(e1, 1), e1)
    assert is_stationary(e1)
    m = single(1.0, [1.0, 0.5])
    moved = shift_pushforward(m, 1)
    assert measures_equal(moved, single(1.0, [0.5, 1.0]))
    assert not measures_equal(moved, m)
    assert not is_stationary(m)
    assert measures_equal(shift_pushforward(m, 0), m)


def test_shift_pushforward_rejects_window():
    w = Group.window([(0, 1)])
    with pytest.raises(InvalidArgument):
        shift_pushforward(RayMeasure.from_rays(1.0, w, [(1.0, [1, 1])]), 1)


def test_stationarize(e1):
    assert measures_equal(stationarize(single(2 / 3, [1.0, 0.5])), e1)
    assert measures_equal(stationarize(e1), e1.scaled_weights(2.0))
    s = stationarize(single(1.0, [0.3, 1.0, 0.0], grp=Group.cyclic(3)))
    assert is_stationary(s)


# --- Palm restriction -------------------------------------------------------

def test_palm_of_exceedance_e1(e1):
    Q = palm_of_exceedance(e1)
    got = sorted((round(a.p, 12), tuple(a.field.tolist()), a.lower) for a in Q.atoms)
    assert got == [(round(1 / 3, 12), (1.0, 2.0), 1.0), (round(2 / 3, 12), (1.0, 0.5), 1.0)]
    # the second atom is the same law as the ray (1/2, 1) truncated at u > 2
    other = TruncatedRayLaw.from_atoms(1.0, Z2, [(2 / 3, [1.0, 0.5], 1.0), (1 / 3, [0.5, 1.0], 2.0)])
    assert measures_equal(Q, other)
    assert sum(a.p for a in Q.atoms) == pytest.approx(1.0, abs=1e-12)


def test_palm_of_exceedance_guards(e1):
    with pytest.raises(NotNormalized):
        palm_of_exceedance(e1.scaled_weights(2.0))
    with pytest.raises(NotStationary):
        palm_of_exceedance(single(1.0, [1.0, 0.5]))


def test_palm_drops_rays_without_origin():
    g = Group.cyclic(2)
    m = RayMeasure.from_rays(1.0, g, [(1.0, [1.0, 0.0]), (1.0, [0.0, 1.0])])
    Q = palm_of_exceedance(m)
    assert len(Q.atoms) == 1 and Q.atoms[0].field.tolist() == [1.0, 0.0]


def test_palm_charges_only_exceedances(e1):
    Q = palm_of_exceedance(e1)
    assert integrate(Q, lambda y: float(exceedance_count(y) == 0)) == 0.0


# --- layers and Campbell ----------------------------------------------------

def test_sigma_finite_layers(e1):
    assert sigma_finite_layers(e1, 2) == pytest.approx([4 / 3, 8 / 3], abs=1e-12)
    assert sigma_finite_layers(RayMeasure(1.0, Z2, ()), 3) == [0.0, 0.0, 0.0]
    vals = sigma_finite_layers(e1, 1000)
    assert all(math.isfinite(v) for v in vals)
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_campbell_functional(e1):
    one = ThresholdFunctional()
    assert campbell_functional(e1, lambda s: one) == pytest.approx(2.0, abs=1e-12)
    assert campbell_functional(e1, lambda s: one if s == (0,) else None) == pytest.approx(1.0, abs=1e-12)
    assert campbell_functional(e1, lambda s: None) == 0.0


# --- generic engine ---------------------------------------------------------

def test_integrate_matches_quadrature(e1):
    def fn(y):
        return float(y.norm_at(0) > 1.5) * (1 + (y.norm_at(1) > 0.7))
    assert integrate(e1, fn, (1.5, 0.7)) == pytest.approx(quad_integral(e1, fn, (1.5, 0.7)),
                                                          abs=1e-10)


def test_split_map_and_restrict(e1):
    top = restrict(e1, lambda y: y.norm_at(0) > 1.0)
    assert exceedance_mass(top) == pytest.approx(1.0, abs=1e-12)
    assert mass(top, ThresholdFunctional()) == pytest.approx(1.0, abs=1e-12)
    doubled = split_map(e1, lambda y: [(2.0, lambda f: f)])
    assert measures_equal(doubled, e1.scaled_weights(2.0))


def test_ray_validation():
    f = Field.from_list(Z2, [1, 1])
    with pytest.raises(InvalidArgument):
        Ray(-1.0, f)
    with pytest.raises(InvalidArgument):
        Ray(1.0, f, 2.0, 1.0)
    with pytest.raises(InvalidArgument):
        RayMeasure(0.0, Z2, ())


def test_truncated_law_requires_probability():
    with pytest.raises(Exception):
        TruncatedRayLaw.from_atoms(1.0, Z2, [(0.5, [1.0, 0.5])])


# --- properties -------------------------------------------------------------

@st.composite
def functionals(draw, n):
    k = draw(st.integers(0, 3))
    cons = tuple((draw(st.integers(0, n - 1)), draw(st.floats(0.2, 4.0))) for _ in range(k))
    beta = draw(st.sampled_from([0.0, -0.5, 0.25]))
    extra = draw(st.sampled_from([0.0, 0.5, 2.0]))
    j = draw(st.integers(0, n - 1))
    payload = draw(st.sampled_from([None, lambda w, j=j: w.norm_at(j)]))
    return ThresholdFunctional(cons, payload, beta, extra)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3, 4]), st.sampled_from([0.5, 1.0, 2.0]),
       st.data())
def test_canonical_form_soundness(seed, n, alpha, data):
    rng = np.random.default_rng(seed)
    grp = Group.cyclic(n)
    rays = [(float(rng.uniform(0.1, 2)), rng.uniform(0.05, 3.0, n)) for _ in range(3)]
    m = RayMeasure.from_rays(alpha, grp, rays)
    c = canonicalize(m)
    for _ in range(4):
        f = data.draw(functionals(n))
        if f.beta >= alpha:
            continue
        a, b = mass(m, f), mass(c, f)
        assert a == b or abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_canonical_form_soundness_100_functionals():
    rng = np.random.default_rng(7)
    m = RayMeasure.from_rays(1.0, Group.cyclic(3),
                             [(0.7, [0.2, 1.3, 0.4]), (1.1, [2.0, 0.0, 0.5]), (0.3, [0.6, 0.6, 0.6])])
    c = canonicalize(m)
    for _ in range(100):
        k = int(rng.integers(1, 3))
        cons = tuple((int(rng.integers(0, 3)), float(rng.uniform(0.2, 3))) for _ in range(k))
        f = ThresholdFunctional(cons, beta=float(rng.choice([0.0, 0.5, -1.0])))
        assert mass(m, f) == pytest.approx(mass(c, f), abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3, 4]), st.sampled_from([0.5, 1.0, 2.0]))
def test_palm_total_mass_and_homogeneity(seed, n, alpha):
    m = random_tail_measure(np.random.default_rng(seed), n, alpha)
    Q = palm_of_exceedance(m)
    assert sum(a.p for a in Q.atoms) == pytest.approx(1.0, abs=1e-12)
    assert integrate(Q, lambda y: float(exceedance_count(y) == 0)) == 0.0
    assert is_homogeneous(m)
    u = 1.7
    a, b = canonicalize(m), canonicalize(scale_pushforward(m, u))
    for ra, rb in zip(a.rays, b.rays):
        assert rb.weight == pytest.approx(u ** alpha * ra.weight, rel=1e-12)
