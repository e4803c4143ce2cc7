"""
Exact checkers for the Palm identities of the exceedance point process.

Every identity is checked one test function at a time.  Both sides are
integrals against ray measures of integrands that are piecewise constant in
the radial coordinate, so :func:`~palmtail.ray_measure.integrate` evaluates
them in closed form and the comparison is exact up to float rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (DimensionMismatch, InvalidArgument, NotCovariant, PalmViolated,
                     TargetOutsideSupport)
from .families import TestFunction, TestFunctionFamily, canary_family, pair_family
from .group_field import Field, exceedance_count, scale, shift
from .ray_measure import (TOL, RayMeasure, TruncatedRayLaw, as_ray_measure, canonicalize,
                          integrate, measure_difference, palm_of_exceedance, restrict,
                          segments, split_map)

inf = math.inf

IDENTITY_NAMES = ("refined_campbell", "mecke", "inversion_roundtrip", "exchange",
                  "allocation", "shift_coupling")


@dataclass(frozen=True)
class IdentityReport:
    """One side-by-side comparison of an identity for one test function.

    ``passed`` is ``|lhs - rhs| <= tol`` in exact mode; Monte Carlo reports
    use the confidence rule and keep standard errors in ``detail``.
    """

    identity: str
    lhs: float
    rhs: float
    tol: float
    passed: bool
    function_id: str
    mode: str = "exact"
    detail: dict = field(default_factory=dict)

    @classmethod
    def exact(cls, identity, lhs, rhs, function_id, tol=TOL, **detail):
        return cls(identity, float(lhs), float(rhs), tol, _agree(lhs, rhs, tol),
                   function_id, "exact", detail)

    @property
    def discrepancy(self) -> float:
        if self.lhs == self.rhs:
            return 0.0
        return abs(self.lhs - self.rhs)

    def to_dict(self) -> dict:
        d = {"identity": self.identity, "function": self.function_id, "mode": self.mode,
             "lhs": _num(self.lhs), "rhs": _num(self.rhs), "tol": self.tol,
             "pass": self.passed}
        if self.detail:
            d["detail"] = {k: _num(v) if isinstance(v, float) else v
                           for k, v in sorted(self.detail.items())}
        return d


def _num(x):
    return x if math.isfinite(x) else ("inf" if x > 0 else ("-inf" if x < 0 else "nan"))


def _agree(a, b, tol):
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol


def sort_reports(reports: Iterable[IdentityReport]) -> list:
    """Canonical order: identity name, then test-function id."""
    return sorted(reports, key=lambda r: (r.identity, r.function_id))


def failures(reports: Iterable[IdentityReport]) -> list:
    return [r for r in reports if not r.passed]


def _check_group(a, b):
    if a.group != b.group or a.cone != b.cone:
        raise DimensionMismatch("measure and law live on different groups or cones")


def _levels(*parts) -> tuple:
    lv = {1.0}
    for p in parts:
        lv.update(p)
    return tuple(sorted(lv))


def _family(group, fam):
    return canary_family(group) if fam is None else fam


def xi(y: Field, level: float = 1.0) -> int:
    """Exceedance count ``xi(G)`` at ``level``."""
    return exceedance_count(y, level)


# ---------------------------------------------------------------------------
# refined Campbell and Mecke

def campbell_sides(nu, Q, f: TestFunction):
    g = nu.group
    lv = _levels(f.levels)

    def lhs_fn(y):
        return sum(f(shift(y, s), s) for s in g.elements if y.norm_at(s) > 1.0)

    def rhs_fn(y):
        return sum(f(y, s) for s in g.elements)

    return integrate(nu, lhs_fn, lv), integrate(Q, rhs_fn, lv)


def check_refined_campbell(nu, Q, fam: TestFunctionFamily | None = None,
                           tol: float = TOL) -> list:
    """``E_nu sum_s f(theta_s Y, s) 1{|Y_s|>1}`` against ``E_Q sum_s f(Y, s)``."""
    _check_group(as_ray_measure(nu), as_ray_measure(Q))
    out = []
    for f in _family(nu.group, fam):
        lhs, rhs = campbell_sides(nu, Q, f)
        out.append(IdentityReport.exact("refined_campbell", lhs, rhs, f.fid, tol))
    return out


def mecke_sides(Q, g: TestFunction):
    grp = Q.group
    lv = _levels(g.levels)

    def lhs_fn(y):
        return sum(g(shift(y, s), grp.neg(s)) for s in grp.elements if y.norm_at(s) > 1.0)

    def rhs_fn(y):
        return sum(g(y, s) for s in grp.elements if y.norm_at(s) > 1.0)

    return integrate(Q, lhs_fn, lv), integrate(Q, rhs_fn, lv)


def no_exceedance_probability(Q) -> float:
    """``Q(xi(G) = 0)``."""
    return integrate(Q, lambda y: float(xi(y) == 0), (1.0,))


def check_mecke(Q, fam: TestFunctionFamily | None = None, tol: float = TOL) -> list:
    """Mecke equation of the exceedance process under ``Q``.

    Compares ``E_Q sum_s g(theta_s Y, -s) 1{|Y_s|>1}`` with
    ``E_Q sum_s g(Y, s) 1{|Y_s|>1}`` and adds a report for the side condition
    ``Q(xi(G) = 0) = 0``.
    """
    out = [IdentityReport.exact("mecke", no_exceedance_probability(Q), 0.0,
                                "side:Q(xi=0)", tol)]
    for g in _family(Q.group, fam):
        lhs, rhs = mecke_sides(Q, g)
        out.append(IdentityReport.exact("mecke", lhs, rhs, g.fid, tol))
    return out


# ---------------------------------------------------------------------------
# inversion

def default_h(y: Field, s) -> float:
    """``h(omega, s) = 1{|omega(s)| > 1} / xi(omega, G)``."""
    if y.norm_at(s) <= 1.0:
        return 0.0
    return 1.0 / xi(y)


def invert_palm(Q, h: Callable | None = None, h_levels: Sequence[float] = (),
                check: bool = True) -> RayMeasure:
    """Stationary measure on ``{xi(G) > 0}`` whose Palm law is ``Q``.

    Returns ``E_Q sum_s 1{theta_{-s} Y in .} h(theta_{-s} Y, s)`` with the
    default weight ``h = 1{|omega(s)|>1} / xi(G)``.  Each atom splits at the
    radial breakpoints where the exceedance count changes.
    """
    if check:
        bad = failures(check_mecke(Q))
        if bad:
            r = bad[0]
            raise PalmViolated(f"law is not mass-stationary: {r.function_id} "
                               f"gives lhs={r.lhs!r}, rhs={r.rhs!r}")
    h = default_h if h is None else h
    grp = Q.group

    def mapper(y):
        out = []
        for s in grp.elements:
            ms = grp.neg(s)
            w = h(shift(y, ms), s)
            if w:
                out.append((w, lambda f, ms=ms: shift(f, ms)))
        return out

    return split_map(Q, mapper, _levels(h_levels))


def check_inversion_roundtrip(nu, fam=None, tol: float = TOL) -> list:
    """``invert_palm(Q)`` against ``nu`` restricted to ``{xi(G) > 0}``."""
    Q = palm_of_exceedance(nu)
    back = invert_palm(Q, check=False)
    target = restrict(nu, lambda y: xi(y) > 0)
    issues = measure_difference(back, target, tol)
    out = [IdentityReport.exact("inversion_roundtrip", float(len(issues)), 0.0,
                                "canonical_form", 0.0,
                                **({"issues": issues[:5]} if issues else {}))]
    for f in _family(nu.group, fam):
        lv = _levels(f.levels)
        fn = lambda y, f=f: f(y, y.group.zero)  # noqa: E731
        out.append(IdentityReport.exact("inversion_roundtrip", integrate(back, fn, lv),
                                        integrate(target, fn, lv), f.fid, tol))
    return out


# ---------------------------------------------------------------------------
# exchange formula

def exchange_sides(nu, c1, c2, g: TestFunction):
    grp = nu.group
    lv = _levels(g.levels, (c1, c2))
    zero = grp.zero

    def lhs_fn(y):
        if y.norm_at(zero) <= c1:
            return 0.0
        return sum(g(y, s) for s in grp.elements if y.norm_at(s) > c2)

    def rhs_fn(y):
        if y.norm_at(zero) <= c2:
            return 0.0
        return sum(g(shift(y, s), grp.neg(s)) for s in grp.elements if y.norm_at(s) > c1)

    return integrate(nu, lhs_fn, lv), integrate(nu, rhs_fn, lv)


def check_exchange(nu, levels=(1.0, 2.0), fam: TestFunctionFamily | None = None,
                   tol: float = TOL) -> list:
    """Exchange formula between the exceedance processes at ``c1`` and ``c2``."""
    c1, c2 = (float(c) for c in levels)
    if not (c1 > 0 and c2 > 0):
        raise InvalidArgument("exchange levels must be positive")
    out = []
    for g in _family(nu.group, fam):
        lhs, rhs = exchange_sides(nu, c1, c2, g)
        out.append(IdentityReport.exact("exchange", lhs, rhs, g.fid, tol, c1=c1, c2=c2))
    return out


# ---------------------------------------------------------------------------
# allocations

@dataclass(frozen=True)
class Allocation:
    """A site-to-site map ``tau(omega, s)``; ``None`` stands for the point at infinity.

    ``levels`` lists the thresholds at which ``tau`` may change along a ray.
    """

    name: str
    fn: Callable
    levels: tuple = ()

    def __call__(self, y: Field, s):
        return self.fn(y, s)


def identity_allocation(level: float = 1.0) -> Allocation:
    """``tau(omega, s) = s`` on exceedances at ``level``, else infinity."""
    def fn(y, s):
        s = y.group.element(s)
        return s if y.norm_at(s) > level else None
    return Allocation("identity", fn, (level,))


def argmax_allocation(level: float = 1.0) -> Allocation:
    """Every site is sent to the unique maximum site if that exceeds ``level``."""
    from .spectral import argmax_site  # local: spectral imports this module

    def fn(y, s):
        t = argmax_site(y)
        return t if t is not None and y.norm_at(t) > level else None
    return Allocation("argmax", fn, (level,))


def first_exceedance_allocation(level: float = 1.0) -> Allocation:
    """First site in row-major order exceeding ``level`` (not covariant on Z_n)."""
    def fn(y, s):
        for t in y.group.elements:
            if y.norm_at(t) > level:
                return t
        return None
    return Allocation("first_exceedance", fn, (level,))


def _reachable_fields(m, levels):
    m = as_ray_measure(m)
    for r in m.rays:
        for x, y, mid in segments(r.field, levels, r.lower, r.upper):
            yield scale(mid, r.field)


def check_covariance(m, tau: Allocation, levels) -> None:
    """Brute-force ``tau(theta_t omega, s - t) = tau(omega, s) - t``."""
    grp = m.group
    for y in _reachable_fields(m, levels):
        for s in grp.elements:
            base = tau(y, s)
            for t in grp.elements:
                got = tau(shift(y, t), grp.sub(s, t))
                want = None if base is None else grp.sub(base, t)
                if got != want:
                    raise NotCovariant(
                        f"allocation {tau.name!r} not covariant at field {y.tolist()}, "
                        f"s={s}, t={t}: got {got}, expected {want}")


def check_allocation(nu, tau: Allocation, levels=(1.0, 1.0), fam=None,
                     tol: float = TOL) -> list:
    """Allocation formula, balancing, and the shift-coupling conclusion.

    ``fam`` holds functions ``h(omega, omega')`` (see
    :func:`~palmtail.families.pair_family`).
    """
    c1, c2 = (float(c) for c in levels)
    grp = nu.group
    zero = grp.zero
    lv = _levels((c1, c2), tau.levels)
    check_covariance(nu, tau, lv)
    for y in _reachable_fields(nu, lv):
        for s in grp.elements:
            if y.norm_at(s) > c1:
                t = tau(y, s)
                if t is not None and not y.norm_at(t) > c2:
                    raise TargetOutsideSupport(
                        f"tau sends {s} to {t}, which is not an exceedance at {c2}")

    fam = pair_family(grp) if fam is None else fam
    out = []
    for h in fam:
        hl = _levels(lv, h.levels)

        def lhs_fn(y, h=h):
            if y.norm_at(zero) <= c1:
                return 0.0
            t = tau(y, zero)
            return 0.0 if t is None else h(y, shift(y, t))

        def rhs_fn(y, h=h):
            if y.norm_at(zero) <= c2:
                return 0.0
            return sum(h(shift(y, s), y) for s in grp.elements
                       if y.norm_at(s) > c1 and tau(y, s) == zero)

        out.append(IdentityReport.exact("allocation", integrate(nu, lhs_fn, hl),
                                        integrate(nu, rhs_fn, hl), h.fid, tol, c1=c1, c2=c2))

    # balancing is a property of tau, not an identity; it gates shift coupling
    balanced, witness = _balancing(nu, tau, c1, c2, lv)
    info = {"balanced": balanced, **({"witness": witness} if witness else {})}
    out = [replace(r, detail={**r.detail, **info}) for r in out]
    if balanced:
        out.extend(_shift_coupling(nu, tau, c1, c2, lv, fam, tol))
    return out


def _balancing(nu, tau, c1, c2, lv):
    grp = nu.group
    for y in _reachable_fields(nu, lv):
        for t in grp.elements:
            hits = sum(1 for s in grp.elements if y.norm_at(s) > c1 and tau(y, s) == t)
            if hits != int(y.norm_at(t) > c2):
                return False, {"field": y.tolist(), "site": list(t), "hits": hits}
    return True, None


def _shift_coupling(nu, tau, c1, c2, lv, fam, tol):
    zero = nu.group.zero

    def mapper(y):
        if y.norm_at(zero) <= c1:
            return []
        t = tau(y, zero)
        return [] if t is None else [(1.0, lambda f, t=t: shift(f, t))]

    pushed = split_map(nu, mapper, lv)
    target = restrict(nu, lambda y: y.norm_at(zero) > c2, lv)
    issues = measure_difference(pushed, target, tol)
    out = [IdentityReport.exact("shift_coupling", float(len(issues)), 0.0, "canonical_form", 0.0,
                                **({"issues": issues[:5]} if issues else {}))]
    for h in fam:
        fn = lambda y, h=h: h(y, y)  # noqa: E731
        hl = _levels(lv, h.levels)
        out.append(IdentityReport.exact("shift_coupling", integrate(pushed, fn, hl),
                                        integrate(target, fn, hl), h.fid, tol))
    return out
