"""
JSON scenario files.

A scenario names a group, an index ``alpha``, a value cone and exactly one
source: ``rayMeasure``, ``spectralLaw`` or ``sampler``.  Optional keys tune
the anchor, the weight ``G``, the test family, tolerances and seeds::

    {
      "group": {"kind": "cyclic", "shape": [2]},
      "alpha": 1,
      "spectralLaw": {"atoms": [{"p": 0.6666666666666666, "field": [1, 0.5]},
                                {"p": 0.3333333333333333, "field": [1, 2]}]},
      "anchor": {"kind": "argmax"},
      "seed": 1
    }
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import PalmtailError, ScenarioError
from .families import TestFunctionFamily, canary_family, field_family
from .group_field import SCALAR, Cone, Field, Group
from .montecarlo import SamplerSpec, iid_window_base
from .ray_measure import Ray, RayMeasure
from .spectral import (AnchorFunction, FieldLaw, SpectralLaw, argmax_anchor, constant_anchor,
                       first_exceedance_anchor)

SOURCES = ("rayMeasure", "spectralLaw", "sampler")
_KNOWN = {"name", "description", "group", "alpha", "cone", "anchor", "weight", "family",
          "tolerances", "seed", "levels", "rGrid", "mc", *SOURCES}


@dataclass
class Scenario:
    raw: dict
    group: Group
    alpha: float
    cone: Cone
    source: str
    measure: RayMeasure | None = None
    law: FieldLaw | None = None
    sampler: SamplerSpec | None = None
    anchor: AnchorFunction = field(default_factory=argmax_anchor)
    weight: list | None = None
    family_size: int = 64
    thresholds: tuple = (1.0, 2.0)
    lags: list | None = None
    exact_tol: float = 1e-12
    seed: int = 0
    exchange_levels: tuple = (1.0, 2.0)
    allocation_levels: tuple = (1.0, 1.0)
    r_grid: tuple = (0.5, 1.0, 2.0, 4.0)
    mc_n: int = 100_000
    mc_sites: list | None = None

    def family(self) -> TestFunctionFamily:
        return canary_family(self.group, self.family_size, self.thresholds, lags=self.lags)

    def field_family(self) -> TestFunctionFamily:
        return field_family(self.group, max(8, self.family_size // 2), self.thresholds,
                            lags=self.lags)

    def sampler_spec(self, seed: int | None = None) -> SamplerSpec:
        """Sampler for the source: the declared one, or atomic on the spectral law."""
        seed = self.seed if seed is None else seed
        if self.sampler is not None:
            return self.sampler.with_seed(seed)
        from .spectral import extract_spectral_decomposition
        law = self.law if self.law is not None else extract_spectral_decomposition(self.measure)
        return SamplerSpec.atomic(law, seed=seed)


def _req(d: dict, key: str, where: str):
    if key not in d:
        raise ScenarioError(f"missing required key {key!r}", where)
    return d[key]


def _num(x, where, positive=False) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ScenarioError(f"expected a number, got {x!r}", where)
    x = float(x)
    if not math.isfinite(x) or (positive and x <= 0):
        raise ScenarioError(f"expected a {'positive ' if positive else ''}finite number, got {x!r}",
                            where)
    return x


def _parse_group(d, where="group") -> Group:
    if not isinstance(d, dict):
        raise ScenarioError("expected an object", where)
    kind = _req(d, "kind", where)
    try:
        if kind == "cyclic":
            shape = _req(d, "shape", where)
            shape = [shape] if isinstance(shape, int) else shape
            return Group.cyclic(*[int(n) for n in shape])
        if kind == "window":
            return Group.window(_req(d, "bounds", where))
    except (PalmtailError, TypeError, ValueError) as e:
        raise ScenarioError(str(e), where) from None
    raise ScenarioError(f"unknown group kind {kind!r}", f"{where}.kind")


def _parse_cone(d, where="cone") -> Cone:
    if d is None:
        return SCALAR
    kind = d.get("kind", "scalar") if isinstance(d, dict) else None
    if kind == "scalar":
        return SCALAR
    if kind == "vector":
        return Cone(int(_req(d, "dim", where)))
    raise ScenarioError(f"unknown cone {d!r}", where)


def _field(group, cone, vals, where) -> Field:
    try:
        return Field(group, np.asarray(vals, dtype=float), cone)
    except (PalmtailError, TypeError, ValueError) as e:
        raise ScenarioError(str(e), where) from None


def _element(group, s, where):
    try:
        raw = (int(s),) if isinstance(s, int) else tuple(int(v) for v in s)
        e = group.element(raw)
    except (PalmtailError, TypeError, ValueError) as ex:
        raise ScenarioError(str(ex), where) from None
    # raw coordinates must already lie in the box; no silent reduction mod n
    if not all(o <= v < o + n for v, o, n in zip(raw, group.origin, group.shape)):
        raise ScenarioError(f"site {s!r} lies outside the group", where)
    return e


def _parse_atoms(group, alpha, cone, items, where, cls):
    if not isinstance(items, list) or not items:
        raise ScenarioError("expected a nonempty list of atoms", where)
    atoms = []
    for i, a in enumerate(items):
        w = f"{where}[{i}]"
        atoms.append((_num(_req(a, "p", w), f"{w}.p", positive=True),
                      _field(group, cone, _req(a, "field", w), f"{w}.field")))
    try:
        return cls(alpha, group, tuple(atoms), cone)
    except PalmtailError as e:
        raise ScenarioError(str(e), where) from None


def _parse_anchor(group, d, where="anchor") -> AnchorFunction:
    if d is None:
        return argmax_anchor()
    kind = d.get("kind") if isinstance(d, dict) else d
    if kind == "argmax":
        return argmax_anchor()
    if kind == "firstExceedance":
        return first_exceedance_anchor(_num(d.get("level", 1.0), f"{where}.level", True))
    if kind == "constant":
        return constant_anchor(_element(group, d.get("site", 0), f"{where}.site"))
    raise ScenarioError(f"unknown anchor kind {kind!r}", f"{where}.kind")


def parse_scenario(doc: dict) -> Scenario:
    """Validate a decoded scenario document and build the library objects."""
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    unknown = sorted(set(doc) - _KNOWN)
    if unknown:
        raise ScenarioError(f"unknown keys {unknown}")
    present = [k for k in SOURCES if k in doc]
    if len(present) != 1:
        raise ScenarioError(f"exactly one of {list(SOURCES)} is required, found {present}")
    group = _parse_group(_req(doc, "group", ""))
    alpha = _num(_req(doc, "alpha", ""), "alpha", positive=True)
    cone = _parse_cone(doc.get("cone"))
    sc = Scenario(doc, group, alpha, cone, present[0])
    src = doc[present[0]]

    if sc.source == "rayMeasure":
        rays = []
        for i, r in enumerate(_req(src, "rays", "rayMeasure")):
            w = f"rayMeasure.rays[{i}]"
            up = r.get("upper")
            try:
                rays.append(Ray(_num(_req(r, "w", w), f"{w}.w"),
                                _field(group, cone, _req(r, "field", w), f"{w}.field"),
                                _num(r.get("lower", 0.0), f"{w}.lower"),
                                math.inf if up is None else _num(up, f"{w}.upper")))
            except PalmtailError as e:
                raise ScenarioError(str(e), w) from None
        sc.measure = RayMeasure(alpha, group, tuple(rays), cone)
    elif sc.source == "spectralLaw":
        sc.law = _parse_atoms(group, alpha, cone, _req(src, "atoms", "spectralLaw"),
                              "spectralLaw.atoms", SpectralLaw)
    else:
        kind = _req(src, "kind", "sampler")
        seed = int(doc.get("seed", 0))
        if kind == "atomicSpectral":
            law = _parse_atoms(group, alpha, cone, _req(src, "atoms", "sampler"),
                               "sampler.atoms", SpectralLaw)
            sc.sampler = SamplerSpec.atomic(law, seed)
            sc.law = law
        elif kind == "tiltedStationarization":
            base = src.get("base", {})
            sup = base.get("support")
            if sup is None:
                sup = [[o, o + n - 1] for o, n in zip(group.origin, group.shape)]
            dist = base.get("dist", "uniform")
            if dist not in ("uniform", "exponential"):
                raise ScenarioError(f"unknown base distribution {dist!r}", "sampler.base.dist")
            fn = iid_window_base(group, sup, dist, cone.vector_dim)
            sc.sampler = SamplerSpec("tiltedStationarization", alpha, group, seed,
                                     int(src.get("streams", 1)), base=fn,
                                     tilt=bool(src.get("tilt", True)), cone=cone)
        else:
            raise ScenarioError(f"unknown sampler kind {kind!r}", "sampler.kind")

    sc.anchor = _parse_anchor(group, doc.get("anchor"))
    if "weight" in doc:
        sc.weight = [_num(x, f"weight[{i}]") for i, x in enumerate(doc["weight"])]
    fam = doc.get("family", {})
    sc.family_size = int(fam.get("size", 64))
    sc.thresholds = tuple(_num(c, "family.thresholds", True) for c in fam.get("thresholds", (1, 2)))
    if "lags" in fam:
        sc.lags = [_element(group, l, "family.lags") for l in fam["lags"]]
    sc.exact_tol = _num(doc.get("tolerances", {}).get("exact", 1e-12), "tolerances.exact", True)
    sc.seed = int(doc.get("seed", 0))
    lv = doc.get("levels", {})
    sc.exchange_levels = tuple(_num(c, "levels.exchange", True) for c in lv.get("exchange", (1, 2)))
    sc.allocation_levels = tuple(_num(c, "levels.allocation", True)
                                 for c in lv.get("allocation", (1, 1)))
    if "rGrid" in doc:
        sc.r_grid = tuple(_num(r, "rGrid", True) for r in doc["rGrid"])
    mc = doc.get("mc", {})
    sc.mc_n = int(mc.get("n", 100_000))
    if "sites" in mc:
        sc.mc_sites = [_element(group, s, "mc.sites") for s in mc["sites"]]
    return sc


def load_scenario(path) -> Scenario:
    """Read and parse a scenario; syntax errors carry the line and column."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"invalid JSON: {e.msg}", f"line {e.lineno}, column {e.colno}") from None
    return parse_scenario(doc)
