"""
Anchoring maps, the anchored Palm law and the candidate extremal index.

The extremal index ``theta = E_Q 1/xi(G)`` is computed three ways: directly,
through the variable ``kappa`` of the moving-shift law, and as the probability
``Q(T = 0)`` that a covariant anchor sits at the origin.  All three agree for
every tie-free covariant anchor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, NotCovariant, PalmViolated, ZeroField
from .families import TestFunctionFamily, field_family
from .group_field import Field, scale, shift
from .palm_calculus import IdentityReport, _levels, xi
from .ray_measure import (TOL, TruncatedRayLaw, as_ray_measure, integrate,
                          law_from_measure, palm_of_exceedance, segments, split_map)
from .spectral import (AnchorFunction, FieldLaw, argmax_anchor, build_Q, energy,
                       moving_shift_representation)

inf = math.inf


def _as_Q(law) -> TruncatedRayLaw:
    return build_Q(law) if isinstance(law, FieldLaw) else law


def _reachable(Q, levels):
    m = as_ray_measure(Q)
    for r in m.rays:
        for _, _, mid in segments(r.field, levels, r.lower, r.upper):
            yield scale(mid, r.field)


def anchor_covariance_violation(T: AnchorFunction, law):
    """First ``(field, s)`` where ``T(theta_s omega) != T(omega) - s``, else ``None``.

    Fields range over the atom representatives at every radial piece with
    ``0 < xi(G)``.
    """
    Q = _as_Q(law)
    grp = Q.group
    for y in _reachable(Q, _levels(T.levels)):
        if xi(y) == 0:
            continue
        base = T(y)
        for s in grp.elements:
            want = None if base is None else grp.sub(base, s)
            if T(shift(y, s)) != want:
                return y, s
    return None


def check_anchor_covariance(T: AnchorFunction, law) -> bool:
    """Brute-force covariance check; argmax raises ``TieDetected`` on ties."""
    return anchor_covariance_violation(T, law) is None


def extremal_index_direct(Q) -> float:
    """``theta = E_Q 1/xi(G)``, summed exactly over radial pieces."""
    Q = _as_Q(Q)

    def fn(y):
        k = xi(y)
        if k == 0:
            raise InvalidArgument("law charges fields without exceedances")
        return 1.0 / k

    return integrate(Q, fn, (1.0,))


def kappa(w: Field, alpha: float) -> float:
    """``inf{u : xi(u Z^(-1/alpha) W) > 0} = min_s Z^(1/alpha) / |W_s|``."""
    mx = w.max_norm
    if mx == 0:
        raise ZeroField(f"field {w.tolist()} has no site with positive norm")
    return energy(w, alpha) ** (1.0 / alpha) / mx


def extremal_index_kappa(Q) -> float:
    """``E_Q kappa^(-alpha)`` for a spectrally decomposable law."""
    Q = _as_Q(Q)
    zero = Q.group.zero
    total = 0.0
    for at in Q.atoms:
        if abs(at.lower - 1.0) > 1e-9 or at.upper != inf or abs(at.field.norm_at(zero) - 1) > TOL:
            raise InvalidArgument("kappa route needs atoms in spectral form (|W_0| = 1, radius on (1, inf))")
        total += at.p * kappa(at.field, Q.alpha) ** -Q.alpha
    return total


def anchor_probability(Q, T: AnchorFunction) -> float:
    """``Q(T = 0)``."""
    Q = _as_Q(Q)
    zero = Q.group.zero
    return integrate(Q, lambda y: float(T(y) == zero), _levels(T.levels))


@dataclass(frozen=True)
class AnchoredLaw:
    """The anchored Palm law ``Q_T`` together with ``theta``."""

    base: TruncatedRayLaw
    theta: float
    anchor_kind: str = ""


def anchored_palm(Q, T: AnchorFunction | None = None, check: bool = True) -> AnchoredLaw:
    """``Q_T = theta^-1 E_Q xi(G)^-1 1{theta_T Y in .}``.

    Atoms are split where ``xi(G)`` or ``T`` change and then shifted so the
    anchor sits at the origin.
    """
    Q = _as_Q(Q)
    T = argmax_anchor() if T is None else T
    if check:
        bad = anchor_covariance_violation(T, Q)
        if bad is not None:
            y, s = bad
            raise NotCovariant(f"anchor {T.kind!r} is not covariant at {y.tolist()}, shift {list(s)}")
    theta = extremal_index_direct(Q)
    if not (0 < theta < inf):
        raise InvalidArgument(f"extremal index must be finite and positive, got {theta}")

    def mapper(y):
        t = T(y)
        if t is None:
            return []
        return [(1.0 / (theta * xi(y)), lambda f, t=t: shift(f, t))]

    base = law_from_measure(split_map(Q, mapper, _levels(T.levels)))
    zero = Q.group.zero
    for at in base.atoms:
        if T(scale(at.lower * 1.5 if at.upper == inf else 0.5 * (at.lower + at.upper),
                   at.field)) != zero:
            raise PalmViolated("anchored law does not have its anchor at the origin")
    return AnchoredLaw(base, theta, T.kind)


def check_palm1(Q, T: AnchorFunction | None = None, fam: TestFunctionFamily | None = None,
                tol: float = TOL) -> list:
    """``E_Q g = theta E_{Q_T} sum_s g(theta_s Y) 1{|Y_s| > 1}`` on a family of ``g(omega)``.

    When ``|Y_T| > 1`` on every reachable field, also compares ``theta`` with
    ``Q(T = 0)`` and ``Q_T`` with ``Q(. | T = 0)``.
    """
    Q = _as_Q(Q)
    T = argmax_anchor() if T is None else T
    grp = Q.group
    al = anchored_palm(Q, T)
    fam = field_family(grp) if fam is None else fam
    out = []
    for g in fam:
        lv = _levels(g.levels, T.levels)
        lhs = integrate(Q, lambda y: g(y), lv)
        rhs = al.theta * integrate(al.base, lambda y: sum(g(shift(y, s)) for s in grp.elements
                                                          if y.norm_at(s) > 1.0), lv)
        out.append(IdentityReport.exact("palm1", lhs, rhs, g.fid, tol))
    mean_xi = integrate(al.base, lambda y: float(xi(y)), _levels(T.levels))
    out.append(IdentityReport.exact("palm1", 1.0, al.theta * mean_xi, "theta*E_QT[xi(G)]", tol))

    lv = _levels(T.levels)
    on_xi = all(y.norm_at(T(y)) > 1.0 for y in _reachable(Q, lv) if T(y) is not None)
    if on_xi:
        p0 = anchor_probability(Q, T)
        out.append(IdentityReport.exact("palm1", al.theta, p0, "theta=Q(T=0)", tol))
        zero = grp.zero
        for g in fam:
            gl = _levels(g.levels, lv)
            cond = integrate(Q, lambda y: g(y) * (T(y) == zero), gl) / p0
            out.append(IdentityReport.exact("palm1", integrate(al.base, lambda y: g(y), gl), cond,
                                            f"Q_T=Q(.|T=0):{g.fid}", tol))
    return out


def anchor_density(nu, T: AnchorFunction | None = None, tol: float = TOL) -> dict:
    """``f(s) = Q(tau(0) = s)`` for the allocation ``tau(omega, s) = T(theta_s omega) + s``.

    Computed under the Palm law and again through the moving-shift law; the
    two routes must agree and the density must sum to one.
    """
    T = argmax_anchor() if T is None else T
    Q = palm_of_exceedance(nu)
    bad = anchor_covariance_violation(T, Q)
    if bad is not None:
        y, s = bad
        raise NotCovariant(f"anchor {T.kind!r} is not covariant at {y.tolist()}, shift {list(s)}")
    grp = Q.group
    lv = _levels(T.levels)
    direct = {s: integrate(Q, lambda y, s=s: float(T(y) == s), lv) for s in grp.elements}

    qstar = moving_shift_representation(nu)
    a = qstar.alpha
    via = {}
    for s in grp.elements:
        total = 0.0
        for p, y in qstar.atoms:
            k = 1.0 / y.max_norm  # the ray u*y has an exceedance iff u > k

            def fn(f, s=s):
                t = T(f)
                return float(t is not None and f.norm_at(grp.sub(t, s)) > 1.0)

            for x, hi, mid in segments(y, lv, k, inf):
                if fn(scale(mid, y)):
                    total += p * (x ** -a - (0.0 if hi == inf else hi ** -a))
        via[s] = total
    for s in grp.elements:
        if abs(direct[s] - via[s]) > tol:
            raise PalmViolated(f"anchor density routes disagree at {list(s)}: "
                               f"{direct[s]!r} vs {via[s]!r}")
    if abs(sum(direct.values()) - 1.0) > tol:
        raise PalmViolated(f"anchor density sums to {sum(direct.values())!r}")
    return direct


def index_report(law, T: AnchorFunction | None = None, tol: float = TOL) -> dict:
    """Extremal index by every available route, with an agreement verdict."""
    Q = _as_Q(law)
    T = argmax_anchor() if T is None else T
    direct = extremal_index_direct(Q)
    out = {"theta_direct": direct, "anchor_kind": T.kind}
    try:
        out["theta_kappa"] = extremal_index_kappa(Q)
    except InvalidArgument:
        out["theta_kappa"] = None
    if check_anchor_covariance(T, Q):
        al = anchored_palm(Q, T, check=False)
        out["theta_anchor"] = anchor_probability(Q, T)
        out["theta_conditional_mean"] = 1.0 / integrate(al.base, lambda y: float(xi(y)),
                                                        _levels(T.levels))
    else:
        out["theta_anchor"] = None
        out["theta_conditional_mean"] = None
    vals = [v for k, v in out.items() if k.startswith("theta_") and v is not None]
    out["agree"] = bool(max(vals) - min(vals) <= tol)
    return out
