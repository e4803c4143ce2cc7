"""
Finite families of test functions standing in for "all measurable g".

Every member is a product of simple factors: a site indicator ``1{s = s0}``,
threshold indicators ``1{|omega(l)| > c}``, an exceedance-count indicator, a
direction or exact-match indicator, and optionally a custom callable.  Such
functions are piecewise constant along rays, with breakpoints at the declared
``levels``, which is what the exact integrator needs.  They can also be
evaluated on whole batches of sampled fields for Monte Carlo work.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .group_field import Field, Group, shift

_MATCH_ATOL = 1e-9


@dataclass(frozen=True, eq=False)
class TestFunction:
    """A nonnegative test function ``g(omega, s)``."""

    __test__ = False  # not a pytest class

    fid: str
    site: tuple | None = None
    thresholds: tuple = ()
    count: int | None = None
    count_level: float = 1.0
    match: Field | None = None
    direction: Field | None = None
    custom: Callable | None = None
    custom_levels: tuple = ()

    @property
    def levels(self) -> tuple:
        lv = {c for _, c in self.thresholds} | set(self.custom_levels)
        if self.count is not None:
            lv.add(self.count_level)
        return tuple(sorted(lv))

    @property
    def vectorizable(self) -> bool:
        return self.custom is None

    def __call__(self, fld: Field, s=None) -> float:
        g = fld.group
        if self.site is not None and s is not None and g.element(s) != self.site:
            return 0.0
        for lag, c in self.thresholds:
            if not fld.norm_at(lag) > c:
                return 0.0
        if self.count is not None and int(np.count_nonzero(fld.norms > self.count_level)) != self.count:
            return 0.0
        if self.match is not None and not np.allclose(fld.values, self.match.values,
                                                      rtol=0, atol=_MATCH_ATOL):
            return 0.0
        if self.direction is not None:
            mx = fld.max_norm
            if mx == 0 or not np.allclose(fld.values / mx, self.direction.values,
                                          rtol=0, atol=_MATCH_ATOL):
                return 0.0
        if self.custom is not None:
            return float(self.custom(fld, s))
        return 1.0

    def batch(self, group: Group, values: np.ndarray, norms: np.ndarray, s=None) -> np.ndarray:
        """Vectorized evaluation over ``n`` fields (leading axis)."""
        if self.custom is not None:
            raise TypeError(f"{self.fid} has a custom factor and cannot be vectorized")
        n = values.shape[0]
        out = np.ones(n)
        if self.site is not None and s is not None and group.element(s) != self.site:
            return np.zeros(n)
        flat = norms.reshape(n, -1)
        for lag, c in self.thresholds:
            if group.contains(lag):
                idx = np.ravel_multi_index(group.index(lag), group.shape)
                out *= flat[:, idx] > c
            else:
                out *= 0.0 > c
        if self.count is not None:
            out *= np.count_nonzero(flat > self.count_level, axis=1) == self.count
        if self.match is not None:
            diff = np.abs(values - self.match.values).reshape(n, -1).max(axis=1)
            out *= diff <= _MATCH_ATOL
        if self.direction is not None:
            mx = flat.max(axis=1)
            safe = np.where(mx > 0, mx, 1.0)
            scaled = values / safe.reshape((n,) + (1,) * (values.ndim - 1))
            diff = np.abs(scaled - self.direction.values).reshape(n, -1).max(axis=1)
            out *= (diff <= _MATCH_ATOL) & (mx > 0)
        return out


class TestFunctionFamily(list):
    """A list of :class:`TestFunction` with the union of their levels."""

    __test__ = False

    @property
    def levels(self) -> tuple:
        lv = set()
        for f in self:
            lv.update(f.levels)
        return tuple(sorted(lv))

    def __add__(self, other):
        return TestFunctionFamily(list(self) + list(other))


def _near_zero(group: Group, k: int) -> list:
    def dist(e):
        if group.is_cyclic:
            return sum(min(v, n - v) for v, n in zip(e, group.shape))
        return sum(abs(v) for v in e)
    pts = [e for e in group.elements]
    return sorted(pts, key=lambda e: (dist(e), e))[:k]


def _fmt(x):
    return f"{x:g}"


def _site_str(s):
    return "(" + ",".join(str(v) for v in s) + ")"


def _patterns(group: Group, thresholds: Sequence[float], lags: list, sites: list,
              with_sites: bool, with_counts: bool):
    singles = [((l, c),) for l in lags for c in thresholds]
    pairs = [((l1, c1), (l2, c2))
             for l1, l2 in itertools.combinations(lags, 2)
             for c1 in thresholds for c2 in thresholds]
    counts = [k for k in range(1, min(group.size, 3) + 1)] if with_counts else []
    yield (None, (), None)
    if with_sites:
        for s in sites:
            yield (s, (), None)
    for th in singles:
        yield (None, th, None)
    for k in counts:
        yield (None, (), k)
    if with_sites:
        for s in sites:
            for th in singles:
                yield (s, th, None)
    for th in pairs:
        yield (None, th, None)
    if with_sites:
        for s in sites:
            for k in counts:
                yield (s, (), k)
        for s in sites:
            for th in pairs:
                yield (s, th, None)


def _build(group, size, thresholds, extra_thresholds, lags, with_sites, prefix):
    if lags is None:
        lags = _near_zero(group, min(group.size, 4))
    lags = [group.element(l) for l in lags]
    sites = _near_zero(group, min(group.size, 8))
    out, seen = TestFunctionFamily(), set()
    for ths, counts in ((tuple(thresholds), True), (tuple(extra_thresholds), False)):
        for site, th, k in _patterns(group, ths, lags, sites, with_sites, counts):
            key = (site, th, k)
            if key in seen:
                continue
            seen.add(key)
            parts = []
            if site is not None:
                parts.append(f"s={_site_str(site)}")
            parts += [f"|w{_site_str(l)}|>{_fmt(c)}" for l, c in th]
            if k is not None:
                parts.append(f"xi={k}")
            fid = f"{prefix}{len(out):02d}:" + ("&".join(parts) or "1")
            out.append(TestFunction(fid, site=site, thresholds=th, count=k))
            if len(out) >= size:
                return out
    return out


def canary_family(group: Group, size: int = 64, thresholds: Sequence[float] = (1.0, 2.0),
                  extra_thresholds: Sequence[float] = (0.5, 3.0, 1.5, 4.0), lags=None) -> TestFunctionFamily:
    """Default family of ``g(omega, s)``: site indicators times threshold
    indicators at lags near the origin, plus exceedance-count indicators."""
    return _build(group, size, thresholds, extra_thresholds, lags, True, "canary")


def field_family(group: Group, size: int = 32, thresholds: Sequence[float] = (1.0, 2.0),
                 extra_thresholds: Sequence[float] = (0.5, 3.0), lags=None) -> TestFunctionFamily:
    """Family of functions of the field alone (no site argument)."""
    return _build(group, size, thresholds, extra_thresholds, lags, False, "field")


def pair_family(group: Group, size: int = 16, thresholds: Sequence[float] = (1.0, 2.0),
                lags=None) -> list:
    """Functions ``h(omega, omega')`` as products ``f1(omega) * f2(omega')``."""
    base = field_family(group, size=max(4, int(np.ceil(np.sqrt(size))) + 1),
                        thresholds=thresholds, lags=lags)
    out = []
    for f1, f2 in itertools.product(base, base):
        out.append(PairFunction(f"pair{len(out):02d}:[{f1.fid}]x[{f2.fid}]", f1, f2))
        if len(out) >= size:
            break
    return out


@dataclass(frozen=True, eq=False)
class PairFunction:
    fid: str
    first: TestFunction
    second: TestFunction

    @property
    def levels(self) -> tuple:
        return tuple(sorted(set(self.first.levels) | set(self.second.levels)))

    def __call__(self, a: Field, b: Field) -> float:
        x = self.first(a)
        return 0.0 if x == 0 else x * self.second(b)


def match_indicators(fields: Sequence[Field], prefix: str = "match") -> TestFunctionFamily:
    """Indicators ``1{omega = f}`` of the given fields (duplicates removed)."""
    out, seen = TestFunctionFamily(), set()
    for f in fields:
        k = f.key()
        if k in seen:
            continue
        seen.add(k)
        out.append(TestFunction(f"{prefix}:{f.tolist()}", match=f))
    return out


def direction_indicators(fields: Sequence[Field], prefix: str = "dir") -> TestFunctionFamily:
    """0-homogeneous indicators ``1{omega / max|omega| = f / max|f|}``."""
    out, seen = TestFunctionFamily(), set()
    for f in fields:
        d = Field(f.group, f.values / f.max_norm, f.cone)
        k = d.key()
        if k in seen:
            continue
        seen.add(k)
        out.append(TestFunction(f"{prefix}:{d.tolist()}", direction=d))
    return out


def mirror(tf: TestFunction) -> TestFunction:
    """``g(omega, s) -> g(theta_s omega, -s)``; swaps the two Mecke sides."""
    def fn(fld, s):
        g = fld.group
        return tf(shift(fld, s), g.neg(s))
    return TestFunction(f"mirror[{tf.fid}]", custom=fn, custom_levels=tf.levels)
