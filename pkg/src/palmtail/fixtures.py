"""
Reference fixtures: the two-site example, a negative control, and random
admissible spectral laws.
"""

from __future__ import annotations

import numpy as np

from .group_field import Group
from .ray_measure import RayMeasure, normalize, stationarize
from .spectral import FieldLaw, SpectralLaw, extract_spectral_decomposition


def e1_measure() -> RayMeasure:
    """Tail measure on Z_2 with alpha = 1: rays (1, 1/2) and (1/2, 1), weight 2/3 each."""
    return RayMeasure.from_rays(1.0, Group.cyclic(2), [(2 / 3, [1.0, 0.5]), (2 / 3, [0.5, 1.0])])


def e1_spectral() -> SpectralLaw:
    return SpectralLaw.from_atoms(1.0, Group.cyclic(2), [(2 / 3, [1.0, 0.5]), (1 / 3, [1.0, 2.0])])


def negative_control() -> SpectralLaw:
    """A single normalized field on Z_2; not mass-stationary."""
    return SpectralLaw.from_atoms(1.0, Group.cyclic(2), [(1.0, [1.0, 0.5])])


def unit_atom(n: int, alpha: float = 1.0) -> SpectralLaw:
    """All norms equal to one on Z_n (argmax is tied, so anchors must not be argmax)."""
    return SpectralLaw.from_atoms(alpha, Group.cyclic(n), [(1.0, np.ones(n))])


def random_tail_measure(rng: np.random.Generator, n: int, alpha: float,
                        n_rays: int | None = None, zero_prob: float = 0.2) -> RayMeasure:
    """Normalized stationarized measure built from a few random rays on Z_n.

    Values are drawn from a continuous law so maxima are almost surely unique;
    some sites are zeroed to exercise partial supports.
    """
    grp = Group.cyclic(n)
    k = int(rng.integers(1, 4)) if n_rays is None else n_rays
    rays = []
    for _ in range(k):
        vals = rng.uniform(0.1, 3.0, size=n)
        mask = rng.random(n) < zero_prob
        mask[int(np.argmax(vals))] = False
        vals[mask] = 0.0
        rays.append((float(rng.uniform(0.2, 2.0)), vals))
    m = RayMeasure.from_rays(alpha, grp, rays)
    return normalize(stationarize(m))


def random_spectral_law(seed: int, n: int | None = None, alpha: float | None = None):
    """Admissible spectral law obtained by Palm-extracting a random tail measure.

    Returns ``(law, nu)``.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.choice([2, 3, 4, 6])) if n is None else n
    alpha = float(rng.choice([0.5, 1.0, 2.0])) if alpha is None else alpha
    nu = random_tail_measure(rng, n, alpha)
    return extract_spectral_decomposition(nu), nu
