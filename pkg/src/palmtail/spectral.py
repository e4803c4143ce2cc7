"""
Spectral laws, the space-shift formula, and tail-measure constructions.

A spectral law is a finite mixture of normalized fields ``W`` with
``|W_0| = 1``.  Together with an independent Pareto(alpha) radius it defines
the law ``Q`` of ``Y = U * W`` (:func:`build_Q`).  The space-shift formula is
a finite identity in ``W`` that holds exactly when the exceedance process is
mass-stationary under ``Q``, and in that case three recipes rebuild the
stationary tail measure whose Palm law is ``Q``:

- ``tail_from_H``      a general 0-homogeneous weight ``H(omega, s)``,
- ``tail_from_weight`` the normalized weight built from a positive ``G``,
- ``tail_from_anchor`` the indicator weight ``1{T(omega) = s}``.

All three must produce the same canonical ray measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (AnchorInvalid, DivergentEnergy, HInvalid, InvalidArgument,
                     NotHomogeneous, NotStationary, PalmViolated, SpaceShiftFailed,
                     TieDetected, WeightInvalid, ZeroField)
from .families import (TestFunction, TestFunctionFamily, canary_family,
                       direction_indicators, match_indicators)
from .group_field import SCALAR, Cone, Field, Group, scale, shift
from .palm_calculus import IdentityReport, check_mecke, failures, _levels
from .ray_measure import (TOL, Atom, Ray, RayMeasure, TruncatedRayLaw, as_ray_measure,
                          canonicalize, integrate, is_homogeneous, is_stationary,
                          measure_difference, palm_of_exceedance, restrict)

inf = math.inf
_TIE_RTOL = 1e-12


# ---------------------------------------------------------------------------
# laws on fields

@dataclass(frozen=True, eq=False)
class FieldLaw:
    """Finite mixture ``sum_i p_i delta_{field_i}`` of fields."""

    alpha: float
    group: Group
    atoms: tuple
    cone: Cone = field(default=SCALAR)

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise InvalidArgument(f"alpha must be a positive real, got {self.alpha}")
        atoms = tuple((float(p), f) for p, f in self.atoms)
        if not atoms:
            raise InvalidArgument("a law needs at least one atom")
        for p, f in atoms:
            if not p > 0:
                raise InvalidArgument(f"atom probability must be positive, got {p}")
            if f.group != self.group or f.cone != self.cone:
                raise InvalidArgument("atom field lives on a different group or cone")
        total = sum(p for p, _ in atoms)
        if abs(total - 1.0) > TOL:
            raise InvalidArgument(f"atom probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def from_atoms(cls, alpha, group, atoms, cone: Cone = SCALAR):
        out = []
        for p, vals in atoms:
            f = vals if isinstance(vals, Field) else Field(group, np.asarray(vals, float), cone)
            out.append((float(p), f))
        return cls(float(alpha), group, tuple(out), cone)

    @property
    def fields(self) -> list:
        return [f for _, f in self.atoms]

    def expect(self, fn: Callable[[Field], float]) -> float:
        return sum(p * fn(f) for p, f in self.atoms)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "group": self.group.to_dict(), "cone": self.cone.to_dict(),
                "atoms": [{"p": p, "field": f.tolist()} for p, f in self.atoms]}

    def __repr__(self):
        body = ", ".join(f"({p!r}, {f.tolist()})" for p, f in self.atoms)
        return f"{type(self).__name__}(alpha={self.alpha}, atoms=[{body}])"


class SpectralLaw(FieldLaw):
    """Law of the normalized field ``W``: every atom has ``|W_0| = 1``."""

    def __post_init__(self):
        super().__post_init__()
        zero = self.group.zero
        for _, f in self.atoms:
            if abs(f.norm_at(zero) - 1.0) > TOL:
                raise InvalidArgument(f"spectral atom {f.tolist()} has |W_0| = "
                                      f"{f.norm_at(zero)!r}, expected 1")


def _as_spectral(law: FieldLaw) -> FieldLaw:
    # zero atoms first so the guard reports the most specific problem
    for _, f in law.atoms:
        if f.max_norm == 0:
            raise ZeroField(f"atom {f.tolist()} has no site with positive norm")
    if not isinstance(law, SpectralLaw):
        law = SpectralLaw(law.alpha, law.group, law.atoms, law.cone)
    return law


def build_Q(law: FieldLaw) -> TruncatedRayLaw:
    """Law of ``U * W`` with ``U`` Pareto(alpha) on ``(1, inf)`` independent of ``W``."""
    law = _as_spectral(law)
    atoms = tuple(Atom(p, f, 1.0, inf) for p, f in law.atoms)
    return TruncatedRayLaw(law.alpha, law.group, atoms, law.cone)


def spectral_of_Q(Q: TruncatedRayLaw) -> SpectralLaw:
    """Inverse of :func:`build_Q` for laws with every atom on ``(1, inf)``."""
    merged: dict = {}
    for at in Q.atoms:
        if abs(at.lower - 1.0) > 1e-9 or at.upper != inf:
            raise NotHomogeneous("radius is not Pareto on (1, inf) independently of W")
        k = at.field.key()
        p, f = merged.get(k, (0.0, at.field))
        merged[k] = (p + at.p, f)
    return SpectralLaw(Q.alpha, Q.group, tuple(merged[k] for k in sorted(merged)), Q.cone)


# ---------------------------------------------------------------------------
# anchors

def argmax_site(y: Field):
    """Unique maximizing site of ``|y|``; ``None`` for the zero field."""
    norms = y.norms.ravel()
    mx = norms.max()
    if mx == 0:
        return None
    hits = np.flatnonzero(norms >= mx * (1 - _TIE_RTOL))
    if len(hits) > 1:
        raise TieDetected(f"field {y.tolist()} has {len(hits)} maximal sites")
    return y.group.elements[int(hits[0])]


@dataclass(frozen=True)
class AnchorFunction:
    """Site selector ``T(omega)``; ``None`` stands for the point at infinity.

    ``levels`` lists the radial thresholds at which ``T`` may change along a
    ray (empty for 0-homogeneous anchors).
    """

    kind: str
    fn: Callable
    zero_homogeneous: bool = True
    levels: tuple = ()

    def __call__(self, y: Field):
        return self.fn(y)


def argmax_anchor() -> AnchorFunction:
    return AnchorFunction("argmax", argmax_site)


def first_exceedance_anchor(level: float = 1.0) -> AnchorFunction:
    """First site in row-major order with ``|omega(s)| > level``."""
    def fn(y):
        for t, n in zip(y.group.elements, y.norms.ravel()):
            if n > level:
                return t
        return None
    return AnchorFunction("firstExceedance", fn, False, (float(level),))


def constant_anchor(site=0) -> AnchorFunction:
    def fn(y):
        return y.group.element(site)
    return AnchorFunction("constant", fn)


def custom_anchor(fn: Callable, zero_homogeneous: bool = True, levels=()) -> AnchorFunction:
    return AnchorFunction("custom", fn, zero_homogeneous, tuple(levels))


# ---------------------------------------------------------------------------
# space-shift formula

def space_shift_sides(law: FieldLaw, g: TestFunction, s):
    """``E g(theta_{-s} W, s) 1{|W_{-s}|>0}`` and ``E g(W / |W_s|, s) |W_s|^alpha``."""
    grp = law.group
    ms = grp.neg(s)
    lhs = rhs = 0.0
    for p, w in law.atoms:
        if w.norm_at(ms) > 0:
            lhs += p * g(shift(w, ms), s)
        n = w.norm_at(s)
        if n > 0:
            rhs += p * g(scale(1.0 / n, w), s) * n ** law.alpha
    return lhs, rhs


def support_family(law: FieldLaw, s) -> TestFunctionFamily:
    """Indicators of every field charged by either side at site ``s``.

    Together these decide the identity at ``s`` for all ``g``.
    """
    grp = law.group
    ms = grp.neg(s)
    fields = [shift(w, ms) for _, w in law.atoms if w.norm_at(ms) > 0]
    fields += [scale(1.0 / w.norm_at(s), w) for _, w in law.atoms if w.norm_at(s) > 0]
    return match_indicators(fields)


def check_space_shift(law: FieldLaw, fam: TestFunctionFamily | None = None,
                      tol: float = TOL, supports: bool = True) -> list:
    """Space-shift formula at every site, for every test function.

    With ``supports=True`` the indicators of :func:`support_family` are added,
    which makes a full pass equivalent to the identity for all ``g``.
    """
    grp = law.group
    fam = canary_family(grp) if fam is None else fam
    out = []
    for s in grp.elements:
        funcs = list(fam) + (list(support_family(law, s)) if supports else [])
        for g in funcs:
            lhs, rhs = space_shift_sides(law, g, s)
            out.append(IdentityReport.exact("space_shift", lhs, rhs,
                                            f"{g.fid}@s={list(s)}", tol, s=list(s)))
    return out


def cross_validate(law: FieldLaw, fam: TestFunctionFamily | None = None) -> dict:
    """Verdicts of the space-shift check and of the Mecke check under ``build_Q``."""
    space = not failures(check_space_shift(law, fam))
    mecke = not failures(check_mecke(build_Q(law), fam))
    return {"space_shift": space, "mecke": mecke, "agree": space == mecke}


def mecke7_sides(Q, g: TestFunction, r: float):
    grp = Q.group
    lv = _levels(g.levels, (r,), [c / r for c in g.levels], (1.0 / r,))

    def lhs_fn(y):
        return sum(g(y, s) for s in grp.elements if y.norm_at(s) > r)

    def rhs_fn(y):
        tot = 0.0
        for s in grp.elements:
            ms = grp.neg(s)
            if r * y.norm_at(ms) > 1.0:
                tot += g(scale(r, shift(y, ms)), s)
        return tot

    return integrate(Q, lhs_fn, lv), r ** -Q.alpha * integrate(Q, rhs_fn, lv)


def check_mecke7(law: FieldLaw, r_grid: Sequence[float] = (0.5, 1.0, 2.0, 4.0),
                 fam: TestFunctionFamily | None = None, tol: float = TOL) -> list:
    """Scaled Mecke equations indexed by ``r > 0`` under ``build_Q(law)``."""
    Q = build_Q(law)
    fam = canary_family(law.group) if fam is None else fam
    out = []
    for r in r_grid:
        r = float(r)
        if not r > 0:
            raise InvalidArgument(f"r must be positive, got {r}")
        for g in fam:
            lhs, rhs = mecke7_sides(Q, g, r)
            out.append(IdentityReport.exact("mecke7", lhs, rhs, f"{g.fid}@r={r:g}", tol, r=r))
    return out


def require_space_shift(law: FieldLaw, fam: TestFunctionFamily | None = None) -> None:
    bad = failures(check_space_shift(law, fam))
    if bad:
        r = bad[0]
        raise SpaceShiftFailed(
            f"space-shift formula fails for {r.function_id}: lhs={r.lhs!r}, rhs={r.rhs!r}",
            counterexample=r)


# ---------------------------------------------------------------------------
# tail-measure constructions

def _check_H(law, H, err=HInvalid, what="H"):
    grp = law.group
    for _, w in law.atoms:
        for t in grp.elements:
            wt = shift(w, t)
            tot = sum(H(wt, grp.sub(s, t)) for s in grp.elements if w.norm_at(s) > 0)
            if abs(tot - 1.0) > TOL:
                raise err(f"{what} normalization fails at W={w.tolist()}, t={list(t)}: "
                          f"sum = {tot!r}")


def _from_H(law, H) -> RayMeasure:
    grp = law.group
    rays = []
    for p, w in law.atoms:
        for s in grp.elements:
            ws = shift(w, grp.neg(s))
            h = H(ws, s)
            if h:
                rays.append(Ray(p * h, ws, 0.0, inf))
    return RayMeasure(law.alpha, grp, tuple(rays), law.cone)


def verify_tail(nu: RayMeasure, law: FieldLaw) -> None:
    """Raise unless ``nu`` is stationary, homogeneous and has Palm law ``build_Q(law)``."""
    if not is_homogeneous(nu):
        raise NotHomogeneous("constructed measure is not homogeneous")
    if not is_stationary(nu):
        raise NotStationary("constructed measure is not shift invariant")
    issues = measure_difference(palm_of_exceedance(nu), build_Q(law))
    if issues:
        raise PalmViolated("Palm law of the constructed measure differs: " + issues[0])


def default_H(group: Group) -> Callable:
    """Weight built from the partition of the group into singletons.

    ``H(omega, s) = 2^-n(s) / (1{|omega(s)|>0} + 1) / S(omega)``, with ``n(s)``
    the 1-based position of ``s`` in row-major order and ``S`` the sum of the
    unnormalized weights over the support of ``omega``.
    """
    rank = {e: i + 1 for i, e in enumerate(group.elements)}

    def raw(y, s):
        return 2.0 ** -rank[s] / (float(y.norm_at(s) > 0) + 1.0)

    def H(y, s):
        s = group.element(s)
        S = sum(raw(y, t) for t in group.elements if y.norm_at(t) > 0)
        return raw(y, s) / S if S > 0 else 0.0

    return H


def _weight_array(group: Group, G) -> np.ndarray:
    if G is None:
        arr = np.full(group.size, 1.0 / group.size)
    elif callable(G):
        arr = np.array([float(G(e)) for e in group.elements])
    elif isinstance(G, Mapping):
        arr = np.zeros(group.size)
        for k, v in G.items():
            arr[group.elements.index(group.element(k))] = float(v)
    else:
        arr = np.asarray(G, dtype=float).ravel()
        if arr.size != group.size:
            raise WeightInvalid(f"weight has {arr.size} entries, group has {group.size}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise WeightInvalid("weight must be finite and strictly positive")
    if abs(arr.sum() - 1.0) > TOL:
        raise WeightInvalid(f"weight sums to {arr.sum()!r}, not 1")
    return arr


def weight_H(group: Group, alpha: float, G=None) -> Callable:
    """``H(omega, s) = |omega(s)|^alpha G(s) / J_G(omega)`` with
    ``J_G(omega) = sum_t |omega(t)|^alpha G(t)``."""
    arr = _weight_array(group, G)
    idx = {e: i for i, e in enumerate(group.elements)}

    def H(y, s):
        J = float(np.dot(y.norms.ravel() ** alpha, arr))
        return y.norm_at(s) ** alpha * arr[idx[group.element(s)]] / J if J > 0 else 0.0

    return H


def tail_from_H(law: FieldLaw, H: Callable | None = None, verify: bool = True) -> RayMeasure:
    """Stationary tail measure ``E_Q sum_s int 1{u theta_{-s} W in .} H(theta_{-s} W, s)``."""
    law = _as_spectral(law)
    H = default_H(law.group) if H is None else H
    require_space_shift(law)
    _check_H(law, H)
    nu = _from_H(law, H)
    if verify:
        verify_tail(nu, law)
    return nu


def tail_from_weight(law: FieldLaw, G=None, verify: bool = True) -> RayMeasure:
    """Construction through the tilted law ``Q^G`` for a positive weight ``G``."""
    law = _as_spectral(law)
    arr = _weight_array(law.group, G)
    require_space_shift(law)
    grp, a = law.group, law.alpha
    rays = []
    for p, w in law.atoms:
        for i, s in enumerate(grp.elements):
            ws = shift(w, grp.neg(s))
            J = float(np.dot(ws.norms.ravel() ** a, arr))
            if not (J > 0 and math.isfinite(J)):
                raise ZeroField(f"shifted atom {ws.tolist()} has zero weighted energy")
            rays.append(Ray(p * arr[i], scale(J ** (-1.0 / a), ws), 0.0, inf))
    nu = RayMeasure(a, grp, tuple(rays), law.cone)
    if verify:
        verify_tail(nu, law)
    return nu


def check_anchor_validity(law: FieldLaw, T: AnchorFunction) -> None:
    """``T`` must be 0-homogeneous and pick a support site of every shifted atom."""
    grp = law.group
    for _, w in law.atoms:
        for t in grp.elements:
            wt = shift(w, t)
            a = T(wt)
            for u in (0.5, 3.0):
                if T(scale(u, wt)) != a:
                    raise AnchorInvalid(f"anchor is not 0-homogeneous at {wt.tolist()}")
            if a is None or not wt.norm_at(a) > 0:
                raise AnchorInvalid(f"anchor picks {a} outside the support of {wt.tolist()}")


def tail_from_anchor(law: FieldLaw, T: AnchorFunction | None = None,
                     verify: bool = True) -> RayMeasure:
    """Construction with the indicator weight ``H(omega, s) = 1{T(omega) = s}``."""
    law = _as_spectral(law)
    T = argmax_anchor() if T is None else T
    require_space_shift(law)
    check_anchor_validity(law, T)
    grp = law.group

    def H(y, s):
        return 1.0 if T(y) == grp.element(s) else 0.0

    _check_H(law, H, AnchorInvalid, "anchor")
    nu = _from_H(law, H)
    if verify:
        verify_tail(nu, law)
    return nu


def extract_spectral_decomposition(nu: RayMeasure) -> SpectralLaw:
    """Law of ``Y / |Y_0|`` under ``nu`` restricted to ``{|Y_0| > 1}``.

    Also confirms that ``nu`` off ``{|Y_0| = 0}`` is the Pareto ray integral
    against that law.
    """
    Q = palm_of_exceedance(nu)
    merged: dict = {}
    for at in Q.atoms:
        k = at.field.key()
        p, f = merged.get(k, (0.0, at.field))
        merged[k] = (p + at.p, f)
    law = SpectralLaw(Q.alpha, Q.group, tuple(merged[k] for k in sorted(merged)), Q.cone)
    zero = nu.group.zero
    recon = RayMeasure(law.alpha, law.group,
                       tuple(Ray(p, f, 0.0, inf) for p, f in law.atoms), law.cone)
    target = restrict(nu, lambda y: y.norm_at(zero) > 0)
    issues = measure_difference(recon, target)
    if issues:
        raise NotHomogeneous("measure is not spectrally decomposable: " + issues[0])
    return law


# ---------------------------------------------------------------------------
# spectral and moving-shift representations

def _require_tail(nu):
    if not is_homogeneous(nu):
        raise NotHomogeneous("measure has a ray not covering (0, inf)")
    # palm_of_exceedance checks normalization and stationarity
    palm_of_exceedance(nu)


def spectral_representation(nu: RayMeasure) -> FieldLaw:
    """A law ``Q*`` with ``nu = E_{Q*} int 1{uY in .} alpha u^(-alpha-1) du``.

    Each canonical ray ``(w, omega)`` becomes an atom ``(1/N, c*omega)`` with
    ``c = (w N)^(1/alpha)``.  Spectral laws are not unique; only the induced
    measures should be compared.
    """
    _require_tail(nu)
    c = canonicalize(nu)
    N = len(c.rays)
    atoms = tuple((1.0 / N, scale((r.weight * N) ** (1.0 / c.alpha), r.field)) for r in c.rays)
    return FieldLaw(c.alpha, c.group, atoms, c.cone)


def reconstruct(qstar: FieldLaw) -> RayMeasure:
    """``E_{Q*} int 1{uY in .} alpha u^(-alpha-1) du``."""
    rays = tuple(Ray(p, f, 0.0, inf) for p, f in qstar.atoms)
    return RayMeasure(qstar.alpha, qstar.group, rays, qstar.cone)


def reconstruct_moving_shift(qstar: FieldLaw) -> RayMeasure:
    """``E_{Q*} sum_s int 1{u theta_s Y in .} alpha u^(-alpha-1) du``."""
    rays = tuple(Ray(p, shift(f, s), 0.0, inf)
                 for p, f in qstar.atoms for s in qstar.group.elements)
    return RayMeasure(qstar.alpha, qstar.group, rays, qstar.cone)


def energy(y: Field, alpha: float) -> float:
    """``Z = sum_s |y(s)|^alpha``."""
    return float(np.sum(y.norms ** alpha))


def moving_shift_representation(nu: RayMeasure) -> FieldLaw:
    """``Q* = Q(Z^(-1/alpha) W in .)`` with ``Q`` the Palm law of ``nu``."""
    _require_tail(nu)
    law = spectral_of_Q(palm_of_exceedance(nu))
    atoms = []
    for p, w in law.atoms:
        Z = energy(w, law.alpha)
        if not math.isfinite(Z):
            raise DivergentEnergy(f"atom {w.tolist()} has infinite energy")
        atoms.append((p, scale(Z ** (-1.0 / law.alpha), w)))
    return FieldLaw(law.alpha, law.group, tuple(atoms), law.cone)


def check_spectral_representation(qstar: FieldLaw, nu: RayMeasure | None = None,
                                  tol: float = TOL) -> list:
    """Finite energy, stationarity on 0-homogeneous functions, per-site
    normalization, and (given ``nu``) reconstruction."""
    grp, a = qstar.group, qstar.alpha
    out = []
    tot = qstar.expect(lambda y: energy(y, a))
    out.append(IdentityReport("spectral_finite_energy", tot, tot, tol, math.isfinite(tot),
                              "sum_s E|Y_s|^alpha"))
    dirs = direction_indicators([shift(f, t) for f in qstar.fields for t in grp.elements])
    for d in dirs:
        for s in grp.elements:
            ms = grp.neg(s)
            lhs = qstar.expect(lambda y: d(y) * y.norm_at(s) ** a if y.norm_at(s) > 0 else 0.0)
            rhs = qstar.expect(lambda y: d(shift(y, ms)) * y.norm_at(grp.zero) ** a
                               if shift(y, ms).max_norm > 0 else 0.0)
            out.append(IdentityReport.exact("spectral_stationarity", lhs, rhs,
                                            f"{d.fid}@s={list(s)}", tol))
    for s in grp.elements:
        out.append(IdentityReport.exact("spectral_normalization",
                                        qstar.expect(lambda y: y.norm_at(s) ** a), 1.0,
                                        f"E|Y_s|^alpha@s={list(s)}", tol))
    if nu is not None:
        issues = measure_difference(reconstruct(qstar), nu, tol)
        out.append(IdentityReport.exact("spectral_reconstruction", float(len(issues)), 0.0,
                                        "canonical_form", 0.0,
                                        **({"issues": issues[:5]} if issues else {})))
    return out


def check_moving_shift(qstar: FieldLaw, nu: RayMeasure | None = None,
                       tol: float = TOL) -> list:
    a = qstar.alpha
    tot = qstar.expect(lambda y: energy(y, a))
    out = [IdentityReport.exact("moving_shift_intensity", tot, 1.0, "sum_s E|Y_s|^alpha", tol)]
    if nu is not None:
        issues = measure_difference(reconstruct_moving_shift(qstar), nu, tol)
        out.append(IdentityReport.exact("moving_shift_reconstruction", float(len(issues)), 0.0,
                                        "canonical_form", 0.0,
                                        **({"issues": issues[:5]} if issues else {})))
    return out
