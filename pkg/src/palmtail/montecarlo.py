"""
Seeded samplers for Palm laws and two-sided Monte Carlo identity checks.

Samples are produced in fixed-size blocks.  Block ``b`` draws from a Philox
generator keyed by ``(root_seed, b)``, so the ``i``-th sample depends only on
the seed and ``i``, never on ``n``, the number of streams, or scheduling.

Identity checks evaluate both sides on the same samples (common random
numbers) and pass when ``|lhs - rhs| <= 3 (SE_lhs + SE_rhs) + 1e-3``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidSpec, UnknownIdentity
from .families import TestFunctionFamily, canary_family, field_family
from .group_field import SCALAR, Cone, Field, Group
from .palm_calculus import IdentityReport
from .spectral import FieldLaw

BLOCK = 4096
Z_SCORE = 3.0
FLOOR = 1e-3
MC_IDENTITIES = ("space_shift", "mecke", "mecke7", "palm1")

KINDS = ("atomicSpectral", "tiltedStationarization", "custom")


@dataclass(frozen=True)
class SamplerSpec:
    """How to draw the normalized field ``W``.

    kind
        ``atomicSpectral``: ``W`` from the finite law ``law``.
        ``tiltedStationarization``: draw a base field ``X = base(rng, m)``,
        pick a site ``t`` with probability proportional to ``|X_t|^alpha``
        and set ``W = theta_t X / |X_t|``.  With ``tilt=False`` the shift is
        skipped (``W = X / |X_0|``), which is a deliberately wrong sampler.
        ``custom``: ``W = custom(rng, m)``.
    """

    kind: str
    alpha: float
    group: Group
    root_seed: int = 0
    stream_count: int = 1
    law: FieldLaw | None = None
    base: Callable | None = None
    custom: Callable | None = None
    tilt: bool = True
    cone: Cone = field(default=SCALAR)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown sampler kind {self.kind!r}")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise InvalidSpec(f"alpha must be a positive real, got {self.alpha}")
        if self.kind == "atomicSpectral" and self.law is None:
            raise InvalidSpec("atomicSpectral needs a law")
        if self.kind == "tiltedStationarization" and self.base is None:
            raise InvalidSpec("tiltedStationarization needs a base sampler")
        if self.kind == "custom" and self.custom is None:
            raise InvalidSpec("custom sampler needs a callable")
        if int(self.stream_count) < 1:
            raise InvalidSpec("stream_count must be at least 1")
        if not 0 <= int(self.root_seed) < 2 ** 64:
            raise InvalidSpec("root_seed must be a 64-bit unsigned integer")

    @classmethod
    def atomic(cls, law: FieldLaw, seed: int = 0, streams: int = 1) -> "SamplerSpec":
        return cls("atomicSpectral", law.alpha, law.group, seed, streams, law=law, cone=law.cone)

    def with_seed(self, seed: int) -> "SamplerSpec":
        from dataclasses import replace
        return replace(self, root_seed=int(seed))


@dataclass(frozen=True)
class Estimate:
    mean: float
    standard_error: float
    sample_count: int

    @classmethod
    def of(cls, x: np.ndarray) -> "Estimate":
        x = np.asarray(x, dtype=float)
        n = x.size
        se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(float(x.mean()), se, n)

    def ci(self, z: float = Z_SCORE) -> tuple:
        return (self.mean - z * self.standard_error, self.mean + z * self.standard_error)

    def to_dict(self) -> dict:
        return {"mean": self.mean, "standard_error": self.standard_error,
                "sample_count": self.sample_count}


def mc_agree(a: Estimate, b, floor: float = FLOOR) -> bool:
    """CI rule; ``b`` may be an :class:`Estimate` or an exact number."""
    if isinstance(b, Estimate):
        return abs(a.mean - b.mean) <= Z_SCORE * (a.standard_error + b.standard_error) + floor
    return abs(a.mean - float(b)) <= Z_SCORE * a.standard_error + floor


# ---------------------------------------------------------------------------
# array helpers

def _norms(spec: SamplerSpec, values: np.ndarray) -> np.ndarray:
    return spec.cone.norms(values)


def _flat(group: Group, s) -> int | None:
    if not group.contains(s):
        return None
    return int(np.ravel_multi_index(group.index(s), group.shape))


def batch_shift(group: Group, values: np.ndarray, t) -> np.ndarray:
    """``theta_t`` applied to every field in the batch (zero padding on windows)."""
    t = group.element(t)
    axes = tuple(range(1, group.dim + 1))
    if group.is_cyclic:
        return np.roll(values, tuple(-v for v in t), axis=axes)
    out = np.zeros_like(values)
    dst, src = [slice(None)], [slice(None)]
    for v, n in zip(t, group.shape):
        lo, hi = max(0, -v), min(n, n - v)
        if lo >= hi:
            return out
        dst.append(slice(lo, hi))
        src.append(slice(lo + v, hi + v))
    out[tuple(dst)] = values[tuple(src)]
    return out


def _shift_each(group: Group, values: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Shift field ``i`` by the group element with flat index ``idx[i]``."""
    m = values.shape[0]
    vshape = values.shape[1 + group.dim:]
    coords = np.array(group.elements)                       # (size, d)
    flat = values.reshape((m, group.size) + vshape)
    t = coords[idx]                                         # (m, d)
    src = coords[None, :, :] + t[:, None, :]                # (m, size, d)
    if group.is_cyclic:
        src = src % np.array(group.shape)
        inside = np.ones(src.shape[:2], dtype=bool)
    else:
        lo = np.array(group.origin)
        hi = lo + np.array(group.shape)
        inside = np.all((src >= lo) & (src < hi), axis=2)
        src = np.where(inside[..., None], src, lo)
    lin = np.ravel_multi_index(tuple((src - np.array(group.origin)).transpose(2, 0, 1)),
                               group.shape)
    out = np.take_along_axis(flat, lin.reshape(lin.shape + (1,) * len(vshape)), axis=1)
    out = np.where(inside.reshape(inside.shape + (1,) * len(vshape)), out, 0.0)
    return out.reshape(values.shape)


# ---------------------------------------------------------------------------
# sampling

def _block_rng(seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


def _draw_block(spec: SamplerSpec, block: int) -> tuple:
    rng = _block_rng(spec.root_seed, block)
    m = BLOCK
    grp = spec.group
    shape = (m,) + tuple(grp.shape) + spec.cone.value_shape
    atom = np.full(m, -1)
    if spec.kind == "atomicSpectral":
        law = spec.law
        probs = np.array([p for p, _ in law.atoms])
        atom = rng.choice(len(probs), size=m, p=probs / probs.sum())
        stack = np.stack([f.values for f in law.fields])
        W = stack[atom]
    elif spec.kind == "tiltedStationarization":
        X = np.asarray(spec.base(rng, m), dtype=float).reshape(shape)
        nrm = _norms(spec, X).reshape(m, -1)
        if spec.tilt:
            w = nrm ** spec.alpha
            Z = w.sum(axis=1)
            bad = ~np.isfinite(Z) | (Z <= 0)
            if bad.any():
                raise InvalidSpec(f"{int(bad.sum())} base fields in block {block} have "
                                  f"zero or infinite energy")
            cum = np.cumsum(w / Z[:, None], axis=1)
            pick = np.minimum((cum < rng.random(m)[:, None]).sum(axis=1), grp.size - 1)
            X = _shift_each(grp, X, pick)
            nrm = _norms(spec, X).reshape(m, -1)
        z0 = _flat(grp, grp.zero)
        n0 = nrm[:, z0]
        if np.any(n0 <= 0):
            raise InvalidSpec(f"{int((n0 <= 0).sum())} fields in block {block} vanish at the origin")
        W = X / n0.reshape((m,) + (1,) * (X.ndim - 1))
    else:
        W = np.asarray(spec.custom(rng, m), dtype=float).reshape(shape)
    if not np.all(np.isfinite(W)):
        raise InvalidSpec(f"non-finite sampled fields in block {block}")
    U = (1.0 - rng.random(m)) ** (-1.0 / spec.alpha)
    return W, U, atom


def sample_W(spec: SamplerSpec, n: int, start: int = 0) -> tuple:
    """``(W, U, atom)`` for samples ``start .. start + n - 1``.

    ``atom`` holds the atom index for atomic samplers and ``-1`` otherwise.
    """
    if n < 1:
        raise InvalidSpec("sample count must be at least 1")
    first, last = start // BLOCK, (start + n - 1) // BLOCK
    blocks = range(first, last + 1)
    if spec.stream_count > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=int(spec.stream_count)) as ex:
            parts = list(ex.map(lambda b: _draw_block(spec, b), blocks))
    else:
        parts = [_draw_block(spec, b) for b in blocks]
    W = np.concatenate([p[0] for p in parts])
    U = np.concatenate([p[1] for p in parts])
    A = np.concatenate([p[2] for p in parts])
    lo = start - first * BLOCK
    return W[lo:lo + n], U[lo:lo + n], A[lo:lo + n]


def sample_Q(spec: SamplerSpec, n: int, start: int = 0) -> np.ndarray:
    """``n`` draws of ``Y = U * W`` with ``U = V^(-1/alpha)``, as an array."""
    W, U, _ = sample_W(spec, n, start)
    return W * U.reshape((-1,) + (1,) * (W.ndim - 1))


def as_fields(spec: SamplerSpec, values: np.ndarray) -> list:
    return [Field(spec.group, v, spec.cone) for v in values]


# ---------------------------------------------------------------------------
# identities

def _report(identity, fid, lhs: Estimate, rhs: Estimate, seed, **extra) -> IdentityReport:
    tol = Z_SCORE * (lhs.standard_error + rhs.standard_error) + FLOOR
    detail = {"se_lhs": lhs.standard_error, "se_rhs": rhs.standard_error,
              "n": lhs.sample_count, "seed": int(seed),
              "ci_lhs": list(lhs.ci()), "ci_rhs": list(rhs.ci()), **extra}
    return IdentityReport(identity, lhs.mean, rhs.mean, tol, abs(lhs.mean - rhs.mean) <= tol,
                          fid, "montecarlo", detail)


def _sites(grp: Group, sites):
    if sites is not None:
        return [grp.element(s) for s in sites]
    from .families import _near_zero
    return _near_zero(grp, min(grp.size, 8))


def estimate_identity(identity: str, spec: SamplerSpec, fam: TestFunctionFamily | None = None,
                      n: int = 100_000, seed: int | None = None, sites=None,
                      r_grid: Sequence[float] = (0.5, 1.0, 2.0, 4.0)) -> list:
    """Monte Carlo version of an identity check, one report per test function.

    ``space_shift`` is evaluated at ``sites`` (default: up to eight sites near
    the origin); the other identities sum over the whole group.
    """
    if identity not in MC_IDENTITIES:
        raise UnknownIdentity(f"no Monte Carlo estimator for {identity!r}; "
                              f"choose from {', '.join(MC_IDENTITIES)}")
    if seed is not None:
        spec = spec.with_seed(seed)
    grp, a = spec.group, spec.alpha
    W, U, _ = sample_W(spec, n)
    Y = W * U.reshape((-1,) + (1,) * (W.ndim - 1))
    nY = _norms(spec, Y)
    flatY = nY.reshape(n, -1)
    out = []

    if identity == "space_shift":
        fam = canary_family(grp) if fam is None else fam
        nW = _norms(spec, W).reshape(n, -1)
        for s in _sites(grp, sites):
            ms = grp.neg(s)
            iw_ms, iw_s = _flat(grp, ms), _flat(grp, s)
            pos_ms = nW[:, iw_ms] > 0 if iw_ms is not None else np.zeros(n, bool)
            ns = nW[:, iw_s] if iw_s is not None else np.zeros(n)
            Wl = batch_shift(grp, W, ms)
            Wr = W / np.where(ns > 0, ns, 1.0).reshape((-1,) + (1,) * (W.ndim - 1))
            nl, nr = _norms(spec, Wl), _norms(spec, Wr)
            for g in fam:
                lhs = g.batch(grp, Wl, nl, s) * pos_ms
                rhs = np.where(ns > 0, g.batch(grp, Wr, nr, s) * ns ** a, 0.0)
                out.append(_report("space_shift", f"{g.fid}@s={list(s)}",
                                   Estimate.of(lhs), Estimate.of(rhs), spec.root_seed, s=list(s)))
        return out

    if identity == "mecke":
        fam = canary_family(grp) if fam is None else fam
        xi0 = (flatY > 1.0).sum(axis=1)
        out.append(_report("mecke", "side:Q(xi=0)", Estimate.of(xi0 == 0),
                           Estimate.of(np.zeros(n)), spec.root_seed))
        lhs = {g.fid: np.zeros(n) for g in fam}
        rhs = {g.fid: np.zeros(n) for g in fam}
        for s in grp.elements:
            ex = flatY[:, _flat(grp, s)] > 1.0
            if not ex.any():
                continue
            Ys = batch_shift(grp, Y, s)
            ns = _norms(spec, Ys)
            for g in fam:
                lhs[g.fid] += g.batch(grp, Ys, ns, grp.neg(s)) * ex
                rhs[g.fid] += g.batch(grp, Y, nY, s) * ex
        for g in fam:
            out.append(_report("mecke", g.fid, Estimate.of(lhs[g.fid]), Estimate.of(rhs[g.fid]),
                               spec.root_seed))
        return out

    if identity == "mecke7":
        fam = canary_family(grp) if fam is None else fam
        for r in r_grid:
            r = float(r)
            lhs = {g.fid: np.zeros(n) for g in fam}
            rhs = {g.fid: np.zeros(n) for g in fam}
            for s in grp.elements:
                ms = grp.neg(s)
                ex = flatY[:, _flat(grp, s)] > r
                i_ms = _flat(grp, ms)
                ex2 = (r * flatY[:, i_ms] > 1.0) if i_ms is not None else np.zeros(n, bool)
                Ys = r * batch_shift(grp, Y, ms)
                ns = _norms(spec, Ys)
                for g in fam:
                    if ex.any():
                        lhs[g.fid] += g.batch(grp, Y, nY, s) * ex
                    if ex2.any():
                        rhs[g.fid] += g.batch(grp, Ys, ns, s) * ex2
            for g in fam:
                out.append(_report("mecke7", f"{g.fid}@r={r:g}", Estimate.of(lhs[g.fid]),
                                   Estimate.of(r ** -a * rhs[g.fid]), spec.root_seed, r=r))
        return out

    # palm1 in its mass-transport form: E g(Y) = E xi^-1 sum_s g(theta_s Y) 1{|Y_s| > 1}
    fam = field_family(grp) if fam is None else fam
    xi = (flatY > 1.0).sum(axis=1)
    inv = np.where(xi > 0, 1.0 / np.maximum(xi, 1), 0.0)
    rhs = {g.fid: np.zeros(n) for g in fam}
    for s in grp.elements:
        ex = flatY[:, _flat(grp, s)] > 1.0
        if not ex.any():
            continue
        Ys = batch_shift(grp, Y, s)
        ns = _norms(spec, Ys)
        for g in fam:
            rhs[g.fid] += g.batch(grp, Ys, ns) * ex * inv
    for g in fam:
        out.append(_report("palm1", g.fid, Estimate.of(g.batch(grp, Y, nY)),
                           Estimate.of(rhs[g.fid]), spec.root_seed))
    return out


def estimate_theta(spec: SamplerSpec, n: int = 100_000, seed: int | None = None) -> tuple:
    """Estimates of ``E 1/xi(G)`` and ``E kappa^(-alpha) = E max|W|^alpha / Z``."""
    if seed is not None:
        spec = spec.with_seed(seed)
    W, U, _ = sample_W(spec, n)
    a = spec.alpha
    nW = _norms(spec, W).reshape(n, -1)
    xi = (nW * U[:, None] > 1.0).sum(axis=1)
    if np.any(xi == 0):
        raise InvalidSpec("sampled field without exceedances; law is not a Palm law")
    Z = (nW ** a).sum(axis=1)
    if not np.all(np.isfinite(Z)) or np.any(Z <= 0):
        raise InvalidSpec(f"{int((~np.isfinite(Z) | (Z <= 0)).sum())} samples with invalid energy")
    return Estimate.of(1.0 / xi), Estimate.of(nW.max(axis=1) ** a / Z)


def compare_with_exact(mc_reports: Sequence[IdentityReport],
                       exact_reports: Sequence[IdentityReport]) -> list:
    """Check each Monte Carlo side against the exact value of the same report.

    Returns reports named ``<identity>:mc_vs_exact`` whose lhs is the largest
    side discrepancy and whose tolerance is the CI half width plus the floor.
    """
    exact = {(r.identity, r.function_id): r for r in exact_reports}
    out = []
    for r in mc_reports:
        ex = exact.get((r.identity, r.function_id))
        if ex is None:
            continue
        sl, sr = r.detail["se_lhs"], r.detail["se_rhs"]
        dl, dr = abs(r.lhs - ex.lhs), abs(r.rhs - ex.rhs)
        ok = dl <= Z_SCORE * sl + FLOOR and dr <= Z_SCORE * sr + FLOOR
        tol = Z_SCORE * (sl + sr) + FLOOR
        out.append(IdentityReport(f"{r.identity}:mc_vs_exact", max(dl, dr), 0.0, tol, ok,
                                  r.function_id, "montecarlo",
                                  {"exact_lhs": ex.lhs, "exact_rhs": ex.rhs,
                                   "mc_lhs": r.lhs, "mc_rhs": r.rhs}))
    return out


# ---------------------------------------------------------------------------
# base field samplers

def iid_window_base(group: Group, support: tuple, dist: str = "uniform",
                    vector_dim: int | None = None) -> Callable:
    """i.i.d. base field on the sub-box ``support`` (inclusive bounds per axis)
    of a window ``group``, zero elsewhere.

    ``dist`` is ``uniform`` (on (0, 1]) or ``exponential``.
    """
    if group.is_cyclic:
        mask = np.ones(group.shape, dtype=bool)
    else:
        sup = [tuple(b) for b in support] if np.ndim(support) == 2 else [tuple(support)]
        mask = np.zeros(group.shape, dtype=bool)
        sl = tuple(slice(lo - o, hi - o + 1) for (lo, hi), o in zip(sup, group.origin))
        mask[sl] = True
    vshape = () if vector_dim is None else (vector_dim,)

    def base(rng, m):
        shape = (m,) + tuple(group.shape) + vshape
        if dist == "uniform":
            x = 1.0 - rng.random(shape)
        elif dist == "exponential":
            x = rng.exponential(size=shape)
        else:
            raise InvalidSpec(f"unknown base distribution {dist!r}")
        return x * mask.reshape(mask.shape + (1,) * len(vshape))

    return base
