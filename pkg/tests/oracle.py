"""Independent numerical oracle: adaptive quadrature along each ray.

Nothing here reuses the package's breakpoint or closed-form code; the radial
integral is done by ``scipy.integrate.quad`` with cut points computed from
scratch.
"""

import math

import numpy as np
from scipy import integrate as si

from palmtail.group_field import Field


def _cuts(values, levels, lo, hi):
    norms = np.abs(np.asarray(values, float)).ravel()
    pts = {lo, hi}
    for c in levels:
        for n in norms:
            if n > 0 and lo < c / n < hi:
                pts.add(c / n)
    return sorted(pts)


def quad_integral(measure, fn, levels=(1.0,)):
    """``sum_r w_r int_{a_r}^{b_r} fn(u omega_r) alpha u^(-alpha-1) du``."""
    a = measure.alpha
    total = 0.0
    for r in (rays(measure) if hasattr(measure, "rays") else _rays_of_law(measure)):
        w, f, lo, hi = r
        pts = _cuts(f.values, levels, lo, hi)
        for x, y in zip(pts[:-1], pts[1:]):
            def dens(u):
                return fn(Field(f.group, u * f.values, f.cone)) * a * u ** (-a - 1)
            if x == 0:
                probe = dens(y / 2) if y < math.inf else dens(1.0)
                if probe != 0:
                    return math.inf
                continue
            val, _ = si.quad(dens, x, y, epsabs=1e-13, epsrel=1e-12, limit=200)
            total += w * val
    return total


def _rays_of_law(law):
    a = law.alpha
    out = []
    for at in law.atoms:
        seg = at.lower ** -a - (0.0 if at.upper == math.inf else at.upper ** -a)
        out.append((at.p / seg, at.field, at.lower, at.upper))
    return out


def rays(measure):
    return [(r.weight, r.field, r.lower, r.upper) for r in measure.rays]
