"""
Exact algebra of alpha-homogeneous measures on fields.

A *ray* ``(w, omega, a, b)`` stands for the measure

    w * int_a^b 1{u * omega in .} alpha u^(-alpha-1) du,

and a :class:`RayMeasure` is a finite sum of rays.  A homogeneous (tail)
measure has every ray on ``(0, inf)``; Palm laws and restrictions use finite
segments.  Rescaling the representative obeys

    Ray(w, c*omega, a, b) = Ray(w * c^alpha, omega, a*c, b*c),

which is what :func:`canonicalize` uses to bring every representative to
max-norm 1.  All radial integrals are done in closed form: any functional
that depends on ``u`` only through threshold indicators ``u*|omega(s)| > c``
is piecewise constant between the breakpoints ``c / |omega(s)|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (DimensionMismatch, InvalidArgument, NotNormalized,
                     NotStationary, ZeroField)
from .group_field import SCALAR, Cone, Field, Group, scale, shift

inf = math.inf

#: absolute tolerance on weights and masses for exact-path comparisons
TOL = 1e-12
# relative tolerance used to identify radial breakpoints that differ by rounding
_BREAK_RTOL = 1e-11
# pieces lighter than this are treated as rounding residue
_DROP = 1e-14


@dataclass(frozen=True, eq=False)
class Ray:
    weight: float
    field: Field
    lower: float = 0.0
    upper: float = inf

    def __post_init__(self):
        object.__setattr__(self, "weight", float(self.weight))
        if not (self.weight >= 0 and math.isfinite(self.weight)):
            raise InvalidArgument(f"ray weight must be finite and nonnegative, got {self.weight}")
        if not (0 <= self.lower <= self.upper):
            raise InvalidArgument(f"invalid radial segment ({self.lower}, {self.upper})")

    def __repr__(self):
        return f"Ray(w={self.weight!r}, field={self.field.tolist()}, lower={self.lower!r}, upper={self.upper!r})"


def _rescale(ray: Ray, c: float, alpha: float) -> Ray:
    # representative omega = c * omega'  ->  Ray(w c^alpha, omega', a c, b c)
    return Ray(ray.weight * c ** alpha,
               Field._raw(ray.field.group, ray.field.values / c, ray.field.cone),
               ray.lower * c, ray.upper * c)


@dataclass(frozen=True, eq=False)
class RayMeasure:
    """Finite sum of weighted rays with common index ``alpha``."""

    alpha: float
    group: Group
    rays: tuple = ()
    cone: Cone = field(default=SCALAR)

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise InvalidArgument(f"alpha must be a positive real, got {self.alpha}")
        rays = tuple(self.rays)
        for r in rays:
            if r.field.group != self.group:
                raise DimensionMismatch("ray field lives on a different group")
            if r.field.cone != self.cone:
                raise DimensionMismatch("ray field uses a different cone")
        object.__setattr__(self, "rays", rays)

    @classmethod
    def from_rays(cls, alpha: float, group: Group, rays: Iterable, cone: Cone = SCALAR):
        """Build from ``(w, values)`` or ``(w, values, lower[, upper])`` tuples."""
        out = []
        for r in rays:
            if isinstance(r, Ray):
                out.append(r)
                continue
            w, vals, *rest = r
            out.append(Ray(float(w), Field(group, np.asarray(vals, dtype=float), cone),
                           *[float(x) for x in rest]))
        return cls(float(alpha), group, tuple(out), cone)

    def __add__(self, other: "RayMeasure") -> "RayMeasure":
        _check_compatible(self, other)
        return replace(self, rays=self.rays + other.rays)

    def scaled_weights(self, c: float) -> "RayMeasure":
        """The measure multiplied by the constant ``c`` (not the field scaling)."""
        return replace(self, rays=tuple(replace(r, weight=r.weight * c) for r in self.rays))

    def __repr__(self):
        body = ", ".join(repr(r) for r in self.rays)
        return f"RayMeasure(alpha={self.alpha}, rays=[{body}])"

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "group": self.group.to_dict(), "cone": self.cone.to_dict(),
                "rays": [{"w": r.weight, "lower": r.lower,
                          "upper": None if r.upper == inf else r.upper,
                          "field": r.field.tolist()} for r in self.rays]}


def _check_compatible(a, b):
    if a.group != b.group or a.cone != b.cone:
        raise DimensionMismatch("measures live on different groups or cones")
    if not math.isclose(a.alpha, b.alpha, rel_tol=0, abs_tol=1e-15):
        raise InvalidArgument("measures have different indices alpha")


@dataclass(frozen=True, eq=False)
class Atom:
    """Law of ``u * field`` with ``u`` Pareto(alpha) restricted to ``(lower, upper)``."""

    p: float
    field: Field
    lower: float = 1.0
    upper: float = inf

    def __repr__(self):
        up = "" if self.upper == inf else f", upper={self.upper!r}"
        return f"Atom(p={self.p!r}, W={self.field.tolist()}, lower={self.lower!r}{up})"


def _segment_mass(alpha: float, lo: float, hi: float) -> float:
    """int_lo^hi alpha u^(-alpha-1) du."""
    a = inf if lo == 0 else lo ** -alpha
    b = 0.0 if hi == inf else hi ** -alpha
    return a - b


@dataclass(frozen=True, eq=False)
class TruncatedRayLaw:
    """Probability law given by finitely many truncated-Pareto ray atoms.

    Each atom ``(p, W, a, b)`` has probability ``p`` and realizes ``u * W`` with
    radial density proportional to ``alpha u^(-alpha-1)`` on ``(a, b)``.  Laws
    produced by :func:`palm_of_exceedance` have ``|W_0| = 1`` and ``a >= 1``.
    """

    alpha: float
    group: Group
    atoms: tuple
    cone: Cone = field(default=SCALAR)

    def __post_init__(self):
        atoms = tuple(self.atoms)
        total = 0.0
        for at in atoms:
            if at.p <= 0 or not (0 < at.lower < at.upper):
                raise InvalidArgument(f"invalid atom {at!r}")
            if at.field.group != self.group:
                raise DimensionMismatch("atom field lives on a different group")
            total += at.p
        if atoms and abs(total - 1.0) > TOL:
            raise InvalidArgument(f"atom probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def from_atoms(cls, alpha, group, atoms, cone: Cone = SCALAR):
        out = []
        for at in atoms:
            if isinstance(at, Atom):
                out.append(at)
                continue
            p, vals, *rest = at
            out.append(Atom(float(p), Field(group, np.asarray(vals, dtype=float), cone),
                            *[float(x) for x in rest]))
        return cls(float(alpha), group, tuple(out), cone)

    def to_ray_measure(self) -> RayMeasure:
        rays = tuple(Ray(at.p / _segment_mass(self.alpha, at.lower, at.upper), at.field,
                         at.lower, at.upper) for at in self.atoms)
        return RayMeasure(self.alpha, self.group, rays, self.cone)

    def __repr__(self):
        return f"TruncatedRayLaw(alpha={self.alpha}, atoms={list(self.atoms)})"

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "group": self.group.to_dict(), "cone": self.cone.to_dict(),
                "atoms": [{"p": a.p, "lower": a.lower,
                           "upper": None if a.upper == inf else a.upper,
                           "field": a.field.tolist()} for a in self.atoms]}


def law_from_measure(m: RayMeasure) -> TruncatedRayLaw:
    """Reinterpret a finite ray measure of total mass 1 as a probability law."""
    atoms = []
    for r in m.rays:
        if r.lower <= 0:
            raise InvalidArgument("a probability law needs every ray bounded away from 0")
        p = r.weight * _segment_mass(m.alpha, r.lower, r.upper)
        if p > _DROP:
            atoms.append(Atom(p, r.field, r.lower, r.upper))
    return TruncatedRayLaw(m.alpha, m.group, tuple(atoms), m.cone)


def as_ray_measure(obj) -> RayMeasure:
    return obj.to_ray_measure() if isinstance(obj, TruncatedRayLaw) else obj


# ---------------------------------------------------------------------------
# generic piecewise radial integration

def breakpoints(fld: Field, levels: Iterable[float], lo: float = 0.0, hi: float = inf) -> list:
    """Sorted radial cut points of ``(lo, hi)`` at which ``u * |fld(s)| = c``."""
    norms = fld.norms.ravel()
    norms = norms[norms > 0]
    cuts = {lo, hi}
    for c in levels:
        if c > 0:
            for x in (c / norms).tolist():
                if lo < x < hi:
                    cuts.add(x)
    inner = sorted(cuts - {lo, hi})
    pts = [lo]
    for x in inner:
        if abs(x - pts[-1]) > _BREAK_RTOL * max(1.0, abs(x)):
            pts.append(x)
    if hi != inf and len(pts) > 1 and abs(hi - pts[-1]) <= _BREAK_RTOL * max(1.0, hi):
        pts.pop()
    pts.append(hi)
    return pts


def segments(fld: Field, levels: Iterable[float], lo: float = 0.0, hi: float = inf):
    """Yield ``(x, y, mid)`` over the radial pieces of ``(lo, hi)``."""
    pts = breakpoints(fld, levels, lo, hi)
    for x, y in zip(pts[:-1], pts[1:]):
        if y <= x:
            continue
        if y == inf:
            mid = 2.0 * x if x > 0 else 1.0
        elif x == 0:
            mid = 0.5 * y
        else:
            mid = 0.5 * (x + y)
        yield x, y, mid


def radial_integral(alpha: float, x: float, y: float, beta: float = 0.0) -> float:
    """int_x^y alpha u^(beta-alpha-1) du for beta < alpha (may be +inf)."""
    if beta >= alpha:
        raise InvalidArgument(f"radial power beta={beta} must be below alpha={alpha}")
    e = beta - alpha
    a = inf if x == 0 else x ** e
    b = 0.0 if y == inf else y ** e
    return alpha / (alpha - beta) * (a - b)


def integrate(m, fn: Callable[[Field], float], levels: Iterable[float] = (1.0,),
              beta: float = 0.0) -> float:
    """Integral of ``fn(Y) * max_s|Y_s|^beta`` against a ray measure or law.

    ``fn`` must depend on the radial coordinate only through indicators
    ``|Y_s| > c`` with ``c`` in ``levels``; it is evaluated once per radial
    piece.  Returns ``inf`` when a piece touching ``u = 0`` carries a nonzero
    value.
    """
    m = as_ray_measure(m)
    levels = tuple(levels)
    total = 0.0
    for r in m.rays:
        if r.weight == 0:
            continue
        mx = r.field.max_norm
        for x, y, mid in segments(r.field, levels, r.lower, r.upper):
            val = fn(scale(mid, r.field))
            if val == 0:
                continue
            total += r.weight * val * mx ** beta * radial_integral(m.alpha, x, y, beta)
    return total


def split_map(m, mapper: Callable[[Field], Iterable], levels: Iterable[float] = (1.0,)) -> RayMeasure:
    """Pushforward with density, piece by piece.

    ``mapper(Y)`` is called at a representative point of each radial piece and
    returns ``(factor, transform)`` pairs; ``transform`` must commute with the
    cone action (shifts do), so the piece ``{u*omega}`` maps to the piece
    ``{u*transform(omega)}`` carrying weight multiplied by ``factor``.
    """
    m = as_ray_measure(m)
    levels = tuple(levels)
    out = []
    for r in m.rays:
        for x, y, mid in segments(r.field, levels, r.lower, r.upper):
            for factor, transform in mapper(scale(mid, r.field)):
                if factor == 0:
                    continue
                out.append(Ray(r.weight * factor, transform(r.field), x, y))
    return RayMeasure(m.alpha, m.group, tuple(out), m.cone)


def restrict(m, predicate: Callable[[Field], bool], levels: Iterable[float] = (1.0,)) -> RayMeasure:
    """``m(. ∩ A)`` for a set ``A`` that is a union of radial pieces."""
    ident = lambda f: f  # noqa: E731
    return split_map(m, lambda y: [(1.0, ident)] if predicate(y) else [], levels)


# ---------------------------------------------------------------------------
# canonical form

def _merge_pieces(pieces: list) -> list:
    """Piecewise-constant radial weight from overlapping ``(w, a, b)`` pieces."""
    pts = sorted({p[1] for p in pieces} | {p[2] for p in pieces})
    cuts = [pts[0]]
    for x in pts[1:]:
        if x == inf or abs(x - cuts[-1]) > _BREAK_RTOL * max(1.0, abs(x)):
            cuts.append(x)

    finite = [c for c in cuts if c != inf]

    def snap(v):
        return inf if v == inf else min(finite, key=lambda c: abs(c - v))

    snapped = [(w, snap(a), snap(b)) for w, a, b in pieces]
    out = []
    for x, y in zip(cuts[:-1], cuts[1:]):
        w = sum(pw for pw, a, b in snapped if a <= x and b >= y)
        if abs(w) <= _DROP:
            continue
        if out and out[-1][2] == x and abs(out[-1][0] - w) <= TOL:
            out[-1] = (out[-1][0], out[-1][1], y)
        else:
            out.append((w, x, y))
    return out


def canonicalize(m) -> RayMeasure:
    """Unique representation of a ray measure.

    Representatives are rescaled to max-norm 1, rays sharing a direction are
    combined into a piecewise-constant radial weight, and the result is sorted
    by direction then lower bound.
    """
    m = as_ray_measure(m)
    by_dir: dict = {}
    dirs: dict = {}
    for r in m.rays:
        mx = r.field.max_norm
        if mx <= 0:
            raise ZeroField("ray representative has all norms zero")
        if r.weight == 0 or r.lower >= r.upper:
            continue
        rr = _rescale(r, mx, m.alpha)
        key = rr.field.key()
        by_dir.setdefault(key, []).append((rr.weight, rr.lower, rr.upper))
        dirs.setdefault(key, rr.field)
    rays = []
    for key in sorted(by_dir):
        for w, a, b in _merge_pieces(by_dir[key]):
            rays.append(Ray(w, dirs[key], a, b))
    return RayMeasure(m.alpha, m.group, tuple(rays), m.cone)


def measures_equal(a, b, tol: float = TOL) -> bool:
    """Equality as measures via canonical forms (weights within ``tol``)."""
    return not measure_difference(a, b, tol)


def measure_difference(a, b, tol: float = TOL) -> list:
    """Human-readable list of discrepancies between two canonical forms."""
    a, b = canonicalize(a), canonicalize(b)
    _check_compatible(a, b)
    issues = []
    if len(a.rays) != len(b.rays):
        issues.append(f"ray counts differ: {len(a.rays)} vs {len(b.rays)}")
        return issues
    for ra, rb in zip(a.rays, b.rays):
        if not ra.field.allclose(rb.field, atol=1e-9):
            issues.append(f"directions differ: {ra.field!r} vs {rb.field!r}")
        elif not (_close(ra.lower, rb.lower) and _close(ra.upper, rb.upper)):
            issues.append(f"segments differ on {ra.field!r}: "
                          f"({ra.lower}, {ra.upper}) vs ({rb.lower}, {rb.upper})")
        elif abs(ra.weight - rb.weight) > tol:
            issues.append(f"weights differ on {ra.field!r}: {ra.weight!r} vs {rb.weight!r}")
    return issues


def _close(x, y):
    if x == inf or y == inf:
        return x == y
    return abs(x - y) <= 1e-9 * max(1.0, abs(x))


def is_homogeneous(m) -> bool:
    """True when every canonical piece covers ``(0, inf)``."""
    return all(r.lower == 0 and r.upper == inf for r in canonicalize(m).rays)


# ---------------------------------------------------------------------------
# closed-form threshold functionals

@dataclass(frozen=True)
class ThresholdFunctional:
    """Integrand ``payload(omega) * prod 1{u|omega(s)| > c} * maxnorm(Y)^beta``.

    ``payload`` is a 0-homogeneous callable evaluated on the max-norm-1
    representative; ``constraints`` is a sequence of ``(site, threshold)``.
    ``extra_lower`` is an additional lower bound on the max-norm of ``Y``.
    """

    constraints: tuple = ()
    payload: Callable[[Field], float] | None = None
    beta: float = 0.0
    extra_lower: float = 0.0

    def with_constraint(self, s, c) -> "ThresholdFunctional":
        return replace(self, constraints=tuple(self.constraints) + ((s, c),))

    def indicator(self, y: Field) -> float:
        """Direct (non-closed-form) evaluation at a field; used by oracles."""
        if any(y.norm_at(s) <= c for s, c in self.constraints):
            return 0.0
        if y.max_norm <= self.extra_lower:
            return 0.0
        if self.payload is None:
            return 1.0
        return float(self.payload(scale(1.0 / y.max_norm, y)))


def mass(m, f: ThresholdFunctional) -> float:
    """Closed-form ``int f dm``; ``inf`` is a legal result."""
    if f.beta >= m.alpha:
        raise InvalidArgument(f"radial power beta={f.beta} must be below alpha={m.alpha}")
    c = canonicalize(m)
    total = 0.0
    for r in c.rays:
        u0 = max(r.lower, f.extra_lower)
        dead = False
        for s, thr in f.constraints:
            n = r.field.norm_at(s)
            if n == 0:
                dead = True
                break
            u0 = max(u0, thr / n)
        if dead or u0 >= r.upper:
            continue
        val = 1.0 if f.payload is None else float(f.payload(r.field))
        if val == 0:
            continue
        total += r.weight * val * radial_integral(c.alpha, u0, r.upper, f.beta)
    return total


# ---------------------------------------------------------------------------
# pushforwards and constructions

def scale_pushforward(m, u: float) -> RayMeasure:
    """Image of ``m`` under ``omega -> u * omega``."""
    m = as_ray_measure(m)
    rays = tuple(replace(r, field=scale(u, r.field)) for r in m.rays)
    return replace(m, rays=rays)


def shift_pushforward(m, t) -> RayMeasure:
    """Image of ``m`` under ``omega -> theta_t omega`` (cyclic groups only)."""
    m = as_ray_measure(m)
    if not m.group.is_cyclic:
        raise InvalidArgument("shift pushforward needs a cyclic group (window shifts are not bijective)")
    rays = tuple(replace(r, field=shift(r.field, t)) for r in m.rays)
    return replace(m, rays=rays)


def is_stationary(m, tol: float = TOL) -> bool:
    c = canonicalize(m)
    return all(measures_equal(shift_pushforward(c, t), c, tol) for t in m.group.elements)


def stationarize(m) -> RayMeasure:
    """Sum of all shift pushforwards over the finite group."""
    m = as_ray_measure(m)
    rays = []
    for t in m.group.elements:
        rays.extend(shift_pushforward(m, t).rays)
    return replace(m, rays=tuple(rays))


def exceedance_mass(m, level: float = 1.0, site=None) -> float:
    """``m(|Y_site| > level)``; the normalization of a tail measure is level 1 at 0."""
    site = m.group.zero if site is None else site
    return mass(m, ThresholdFunctional(((site, level),)))


def normalize(m) -> RayMeasure:
    """Rescale weights so that ``m(|Y_0| > 1) = 1``."""
    z = exceedance_mass(m)
    if not (0 < z < inf):
        raise NotNormalized(f"cannot normalize: m(|Y_0|>1) = {z}")
    return as_ray_measure(m).scaled_weights(1.0 / z)


def palm_of_exceedance(m, check: bool = True) -> TruncatedRayLaw:
    """Palm law of the exceedance measure: the restriction to ``{|Y_0| > 1}``.

    Atoms are returned in spectral coordinates: ``W = omega / |omega(0)|`` with
    the radial segment rescaled accordingly and truncated below at 1.
    """
    c = canonicalize(m)
    if check:
        z = exceedance_mass(c)
        if abs(z - 1.0) > TOL:
            raise NotNormalized(f"m(|Y_0|>1) = {z!r}, expected 1")
        if not is_stationary(c):
            raise NotStationary("measure is not shift invariant")
    atoms = {}
    order = []
    zero = c.group.zero
    for r in c.rays:
        n0 = r.field.norm_at(zero)
        if n0 == 0:
            continue
        rr = _rescale(r, n0, c.alpha)
        lo, hi = max(rr.lower, 1.0), rr.upper
        if lo >= hi:
            continue
        p = rr.weight * _segment_mass(c.alpha, lo, hi)
        if p <= _DROP:
            continue
        key = (rr.field.key(), lo, hi)
        if key in atoms:
            atoms[key] = replace(atoms[key], p=atoms[key].p + p)
        else:
            atoms[key] = Atom(p, rr.field, lo, hi)
            order.append(key)
    out = tuple(atoms[k] for k in sorted(order))
    return TruncatedRayLaw(c.alpha, c.group, out, c.cone)


def sigma_finite_layers(m, K: int) -> list:
    """``m(U_k)`` for ``k = 1..K`` with ``U_k = {some |omega(s)| >= 1/k}``."""
    c = canonicalize(m)
    out = []
    for k in range(1, int(K) + 1):
        total = 0.0
        for r in c.rays:
            lo = max(r.lower, 1.0 / k)  # canonical max-norm is 1
            if lo < r.upper:
                total += r.weight * _segment_mass(c.alpha, lo, r.upper)
        out.append(total)
    return out


def campbell_functional(m, g: Callable[[tuple], ThresholdFunctional | None]) -> float:
    """``E_m sum_s g(Y, s) 1{|Y_s| > 1}`` for a kernel of threshold functionals."""
    total = 0.0
    for s in m.group.elements:
        f = g(s)
        if f is None:
            continue
        total += mass(m, f.with_constraint(s, 1.0))
    return total
