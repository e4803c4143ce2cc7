"""
Finite Abelian groups with counting Haar measure, cone-valued fields on them,
and the exceedance / support sets of a field.

Two kinds of groups are supported:

- ``cyclic``: the product Z_{n_1} x ... x Z_{n_d}; every shift is a bijection.
- ``window``: a finite box of Z^d.  Addition is ambient Z^d addition and
  reads outside the box return a zero-norm padding value.

Group elements are tuples of ints; one-dimensional groups also accept a plain
int wherever an element is expected.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidArgument


@dataclass(frozen=True)
class Group:
    """Finite Abelian group descriptor.

    Parameters
    ----------
    kind : {'cyclic', 'window'}
    shape : tuple of int
        Number of sites per axis.
    origin : tuple of int
        Lowest coordinate per axis (always zeros for cyclic groups).
    """

    kind: str
    shape: tuple
    origin: tuple

    def __post_init__(self):
        if self.kind not in ("cyclic", "window"):
            raise InvalidArgument(f"unknown group kind {self.kind!r}")
        if len(self.shape) == 0 or any(int(n) < 1 for n in self.shape):
            raise InvalidArgument(f"invalid group shape {self.shape!r}")
        if len(self.origin) != len(self.shape):
            raise DimensionMismatch("origin and shape have different lengths")
        if self.kind == "cyclic" and any(o != 0 for o in self.origin):
            raise InvalidArgument("cyclic groups have origin 0")

    @classmethod
    def cyclic(cls, *shape: int) -> "Group":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        shape = tuple(int(n) for n in shape)
        return cls("cyclic", shape, (0,) * len(shape))

    @classmethod
    def window(cls, bounds: Sequence[tuple[int, int]]) -> "Group":
        """Box ``prod [lo_i, hi_i]`` of Z^d (bounds inclusive)."""
        bounds = [tuple(int(v) for v in b) for b in bounds]
        if any(hi < lo for lo, hi in bounds):
            raise InvalidArgument(f"empty window {bounds!r}")
        return cls("window", tuple(hi - lo + 1 for lo, hi in bounds),
                   tuple(lo for lo, _ in bounds))

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @property
    def is_cyclic(self) -> bool:
        return self.kind == "cyclic"

    @cached_property
    def elements(self) -> tuple:
        """All group points in row-major order."""
        ranges = [range(o, o + n) for o, n in zip(self.origin, self.shape)]
        return tuple(itertools.product(*ranges))

    @property
    def zero(self) -> tuple:
        return (0,) * self.dim

    def element(self, t) -> tuple:
        if isinstance(t, (int, np.integer)):
            t = (int(t),)
        t = tuple(int(v) for v in t)
        if len(t) != self.dim:
            raise DimensionMismatch(f"element {t} does not match group dimension {self.dim}")
        if self.is_cyclic:
            t = tuple(v % n for v, n in zip(t, self.shape))
        return t

    def add(self, s, t) -> tuple:
        s, t = self.element(s), self.element(t)
        return self.element(tuple(a + b for a, b in zip(s, t)))

    def neg(self, s) -> tuple:
        return self.element(tuple(-a for a in self.element(s)))

    def sub(self, s, t) -> tuple:
        return self.add(s, self.neg(t))

    def contains(self, s) -> bool:
        s = self.element(s)
        return all(o <= v < o + n for v, o, n in zip(s, self.origin, self.shape))

    def index(self, s) -> tuple:
        """Array index of a group element (raises if outside a window)."""
        s = self.element(s)
        if not self.contains(s):
            raise InvalidArgument(f"{s} lies outside the window")
        return tuple(v - o for v, o in zip(s, self.origin))

    def haar(self, subset: Iterable) -> int:
        """Counting measure of a set of group elements."""
        return len({self.element(s) for s in subset if self.contains(s)})

    def to_dict(self) -> dict:
        if self.is_cyclic:
            return {"kind": "cyclic", "shape": list(self.shape)}
        return {"kind": "window",
                "bounds": [[o, o + n - 1] for o, n in zip(self.origin, self.shape)]}


@dataclass(frozen=True)
class Cone:
    """Value cone: nonnegative scalars (``vector_dim=None``) or R^k with the
    Euclidean norm."""

    vector_dim: int | None = None

    @property
    def value_shape(self) -> tuple:
        return () if self.vector_dim is None else (self.vector_dim,)

    def norms(self, values: np.ndarray) -> np.ndarray:
        if self.vector_dim is None:
            return np.abs(values)
        return np.linalg.norm(values, axis=-1)

    @property
    def unit(self) -> np.ndarray:
        """The designated element x0 with norm 1."""
        if self.vector_dim is None:
            return np.array(1.0)
        e = np.zeros(self.vector_dim)
        e[0] = 1.0
        return e

    def to_dict(self) -> dict:
        return {"kind": "scalar"} if self.vector_dim is None else {
            "kind": "vector", "dim": self.vector_dim}


SCALAR = Cone()


@dataclass(frozen=True, eq=False)
class Field:
    """A cone-valued function on a finite group.

    ``values`` has shape ``group.shape + cone.value_shape``.  Instances are
    treated as immutable; the array is made read-only on construction.
    """

    group: Group
    values: np.ndarray
    cone: Cone = field(default=SCALAR)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        expected = tuple(self.group.shape) + self.cone.value_shape
        if vals.shape != expected:
            if vals.size == math.prod(expected):
                vals = vals.reshape(expected)
            else:
                raise DimensionMismatch(
                    f"field values have shape {vals.shape}, expected {expected}")
        if not np.all(np.isfinite(vals)):
            raise InvalidArgument("field values must be finite")
        if self.cone.vector_dim is None and np.any(vals < 0):
            raise InvalidArgument("scalar cone values must be nonnegative")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_list(cls, group: Group, values, cone: Cone = SCALAR) -> "Field":
        return cls(group, np.asarray(values, dtype=float), cone)

    @classmethod
    def _raw(cls, group: Group, values: np.ndarray, cone: Cone) -> "Field":
        # trusted fast path for internal arithmetic; skips validation
        obj = object.__new__(cls)
        values.setflags(write=False)
        object.__setattr__(obj, "group", group)
        object.__setattr__(obj, "values", values)
        object.__setattr__(obj, "cone", cone)
        return obj

    @cached_property
    def norms(self) -> np.ndarray:
        """Pseudo-norm at every site, shaped like the group."""
        n = self.cone.norms(self.values)
        n.setflags(write=False)
        return n

    def norm_at(self, s) -> float:
        s = self.group.element(s)
        if not self.group.contains(s):
            return 0.0
        return float(self.norms[self.group.index(s)])

    def __call__(self, s):
        return self.values[self.group.index(s)]

    @property
    def max_norm(self) -> float:
        return float(self.norms.max())

    def allclose(self, other: "Field", atol: float = 1e-9) -> bool:
        return (self.group == other.group and self.cone == other.cone
                and np.allclose(self.values, other.values, rtol=0.0, atol=atol))

    def key(self, decimals: int = 10) -> tuple:
        """Hashable rounded key used for sorting and merging."""
        return tuple(np.round(self.values, decimals).ravel().tolist())

    def tolist(self) -> list:
        return self.values.ravel().tolist() if self.cone.vector_dim is None \
            else self.values.reshape(-1, self.cone.vector_dim).tolist()

    def __repr__(self):
        return f"Field({self.tolist()})"


def shift(fld: Field, t) -> Field:
    """Shifted field ``s -> fld(s + t)``.

    On window groups, reads that land outside the box give the zero value.
    """
    g = fld.group
    t = g.element(t)
    if g.is_cyclic:
        vals = np.roll(fld.values, shift=tuple(-v for v in t), axis=tuple(range(g.dim)))
        return Field._raw(g, vals, fld.cone)
    vals = np.zeros_like(fld.values)
    dst, src = [], []
    for v, n in zip(t, g.shape):
        lo, hi = max(0, -v), min(n, n - v)
        if lo >= hi:
            return Field._raw(g, vals, fld.cone)
        dst.append(slice(lo, hi))
        src.append(slice(lo + v, hi + v))
    vals[tuple(dst)] = fld.values[tuple(src)]
    return Field._raw(g, vals, fld.cone)


def _check_scale(u) -> float:
    u = float(u)
    if not math.isfinite(u) or u <= 0:
        raise InvalidArgument(f"scale factor must be a finite positive real, got {u}")
    return u


def scale(u: float, fld: Field) -> Field:
    """Cone action ``s -> u * fld(s)``."""
    u = _check_scale(u)
    return Field._raw(fld.group, u * fld.values, fld.cone)


def normalize_to_W(fld: Field) -> Field:
    """Spectral field ``|Y_0|^{-1} Y``, or the constant-x0 field when ``|Y_0| = 0``."""
    n0 = fld.norm_at(fld.group.zero)
    if n0 > 0:
        return Field._raw(fld.group, fld.values / n0, fld.cone)
    unit = fld.cone.unit
    vals = np.broadcast_to(unit, tuple(fld.group.shape) + unit.shape).copy()
    return Field(fld.group, vals, fld.cone)


def exceedance_support(fld: Field, level: float = 1.0) -> frozenset:
    """Sites whose norm strictly exceeds ``level``; its size is xi(G)."""
    mask = fld.norms > level
    return frozenset(e for e, m in zip(fld.group.elements, mask.ravel()) if m)


def support_measure(fld: Field) -> frozenset:
    """Sites with positive norm (the support measure xi')."""
    return exceedance_support(fld, 0.0)


def exceedance_count(fld: Field, level: float = 1.0) -> int:
    return int(np.count_nonzero(fld.norms > level))
