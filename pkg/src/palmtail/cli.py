"""
Command-line front end: ``python -m palmtail {verify,construct,index,sample}``.

Exit codes: 0 when every identity passes, 1 when any fails, 2 on a
configuration error.  Reports are JSON with sorted keys, so identical inputs
give byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

from . import __version__
from .anchoring import anchor_density, check_palm1, index_report
from .errors import (NotCovariant, PalmtailError, ScenarioError, SpaceShiftFailed,
                     TieDetected)
from .montecarlo import compare_with_exact, estimate_identity, estimate_theta, mc_agree, sample_Q
from .palm_calculus import (IdentityReport, argmax_allocation, check_allocation,
                            check_exchange, check_inversion_roundtrip, check_mecke,
                            check_refined_campbell, failures, identity_allocation,
                            sort_reports)
from .ray_measure import (canonicalize, exceedance_mass, is_homogeneous, is_stationary,
                          measure_difference, palm_of_exceedance, scale_pushforward,
                          shift_pushforward)
from .scenario import Scenario, load_scenario
from .spectral import (build_Q, check_mecke7, check_moving_shift, check_space_shift,
                       check_spectral_representation, extract_spectral_decomposition,
                       moving_shift_representation, spectral_representation,
                       tail_from_anchor, tail_from_H, tail_from_weight)

SUITES = ("palm", "spectral", "tail", "anchor", "all")


def _g(x: float, digits: int = 12) -> float:
    return float(f"{x:.{digits}g}")


def canonical_dict(m) -> dict:
    """Canonical ray listing with numbers rounded to 12 significant digits, so
    measures equal within the exact tolerance serialize identically."""
    c = canonicalize(m)
    return {"alpha": c.alpha, "group": c.group.to_dict(), "cone": c.cone.to_dict(),
            "rays": [{"w": _g(r.weight), "lower": _g(r.lower),
                      "upper": None if r.upper == math.inf else _g(r.upper),
                      "field": [_g(v) if not isinstance(v, list) else [_g(x) for x in v]
                                for v in r.field.tolist()]} for r in c.rays]}


# ---------------------------------------------------------------------------
# suites

class _Run:
    def __init__(self, sc: Scenario):
        self.sc = sc
        self.reports: list = []
        self.skipped: list = []
        self._nu = None
        self._nu_done = False

    def skip(self, what, why):
        self.skipped.append({"item": what, "reason": why})

    @property
    def law(self):
        sc = self.sc
        return sc.law if sc.law is not None else extract_spectral_decomposition(sc.measure)

    def nu(self):
        """The tail measure: given, or constructed when the law is admissible."""
        if not self._nu_done:
            self._nu_done = True
            if self.sc.measure is not None:
                self._nu = self.sc.measure
            else:
                try:
                    self._nu = tail_from_weight(self.sc.law, self.sc.weight)
                except SpaceShiftFailed:
                    self._nu = None
        return self._nu


def _exact_palm(run: _Run):
    sc = run.sc
    fam = sc.family()
    nu = run.nu()
    Q = palm_of_exceedance(nu) if nu is not None else build_Q(sc.law)
    run.reports += check_mecke(Q, fam, sc.exact_tol)
    if nu is None:
        for item in ("refined_campbell", "inversion_roundtrip", "exchange", "allocation"):
            run.skip(item, "no stationary tail measure: the law fails the space-shift check")
        return
    run.reports += check_refined_campbell(nu, Q, fam, sc.exact_tol)
    run.reports += check_inversion_roundtrip(nu, fam, sc.exact_tol)
    run.reports += check_exchange(nu, sc.exchange_levels, fam, sc.exact_tol)
    c1, c2 = sc.allocation_levels
    run.reports += check_allocation(nu, identity_allocation(c2), (c1, c2), tol=sc.exact_tol)
    try:
        run.reports += check_allocation(nu, argmax_allocation(c2), (c1, c2), tol=sc.exact_tol)
    except (TieDetected, NotCovariant) as e:
        run.skip("allocation:argmax", str(e))


def _exact_spectral(run: _Run):
    sc = run.sc
    fam = sc.family()
    law = run.law
    run.reports += check_space_shift(law, fam, sc.exact_tol)
    run.reports += check_mecke7(law, sc.r_grid, fam, sc.exact_tol)
    nu = run.nu()
    if nu is None:
        run.skip("spectral_representation", "no stationary tail measure")
        run.skip("moving_shift_representation", "no stationary tail measure")
        return
    run.reports += check_spectral_representation(spectral_representation(nu), nu, sc.exact_tol)
    run.reports += check_moving_shift(moving_shift_representation(nu), nu, sc.exact_tol)


def _compare(name, fid, a, b, tol):
    issues = measure_difference(a, b, tol)
    return IdentityReport.exact(name, float(len(issues)), 0.0, fid, 0.0,
                                **({"issues": issues[:5]} if issues else {}))


def tail_reports(nu, tol=1e-12) -> list:
    """Homogeneity, stationarity and normalization of a constructed measure."""
    out = []
    a = nu.alpha
    for u in (0.5, 2.0, 5.0):
        out.append(_compare("homogeneity", f"u={u:g}", scale_pushforward(nu, u),
                            nu.scaled_weights(u ** a), tol))
    for t in nu.group.elements:
        out.append(_compare("stationarity", f"t={list(t)}", shift_pushforward(nu, t), nu, tol))
    out.append(IdentityReport.exact("normalization", exceedance_mass(nu), 1.0,
                                    "nu(|Y_0|>1)", tol))
    return out


def _exact_tail(run: _Run):
    sc = run.sc
    law = run.law
    try:
        built = {"anchor": tail_from_anchor(law, sc.anchor),
                 "weight": tail_from_weight(law, sc.weight),
                 "H": tail_from_H(law)}
    except SpaceShiftFailed as e:
        r = e.counterexample
        run.reports.append(IdentityReport("construction", r.lhs, r.rhs, r.tol, False,
                                          r.function_id, "exact", dict(r.detail)))
        return
    except TieDetected as e:
        run.skip("construction", str(e))
        return
    ref = built["weight"]
    for k in ("anchor", "H"):
        run.reports.append(_compare("construction_agreement", f"{k}_vs_weight", built[k], ref,
                                    sc.exact_tol))
    if sc.measure is not None:
        run.reports.append(_compare("construction_agreement", "weight_vs_source", ref,
                                    sc.measure, sc.exact_tol))
    run.reports += tail_reports(ref, sc.exact_tol)


def _exact_anchor(run: _Run):
    sc = run.sc
    nu = run.nu()
    Q = palm_of_exceedance(nu) if nu is not None else build_Q(sc.law)
    try:
        run.reports += check_palm1(Q, sc.anchor, sc.field_family(), sc.exact_tol)
    except NotCovariant as e:
        run.reports.append(IdentityReport("palm1", 1.0, 0.0, sc.exact_tol, False,
                                          "anchor_covariance", "exact", {"error": str(e)}))
        return
    idx = index_report(Q, sc.anchor, sc.exact_tol)
    for k in ("theta_kappa", "theta_anchor", "theta_conditional_mean"):
        if idx[k] is not None:
            run.reports.append(IdentityReport.exact("extremal_index", idx["theta_direct"], idx[k],
                                                    f"direct_vs_{k[6:]}", sc.exact_tol))
    if nu is not None:
        dens = anchor_density(nu, sc.anchor, sc.exact_tol)
        run.reports.append(IdentityReport.exact("anchor_density", sum(dens.values()), 1.0,
                                                "total", sc.exact_tol,
                                                density={str(list(k)): v for k, v in dens.items()}))


def _mc(run: _Run, suite: str, seed: int):
    sc = run.sc
    spec = sc.sampler_spec(seed)
    exact_law = sc.law if sc.law is not None else (
        extract_spectral_decomposition(sc.measure) if sc.measure is not None else None)
    fam = sc.family()
    wanted = {"palm": ("mecke", "palm1"), "spectral": ("space_shift", "mecke7"),
              "anchor": ("palm1",), "tail": (), "all": ("space_shift", "mecke", "mecke7", "palm1")}
    if suite in ("tail",):
        run.skip("tail", "constructions are exact-only")
    for ident in wanted[suite]:
        f = sc.field_family() if ident == "palm1" else fam
        reps = estimate_identity(ident, spec, f, sc.mc_n, sites=sc.mc_sites, r_grid=sc.r_grid)
        run.reports += reps
        if exact_law is not None and sc.exact_tol:
            if ident == "space_shift":
                exact = check_space_shift(exact_law, f, supports=False)
            elif ident == "mecke":
                exact = check_mecke(build_Q(exact_law), f)
            elif ident == "mecke7":
                exact = check_mecke7(exact_law, sc.r_grid, f)
            else:
                exact = []
            run.reports += compare_with_exact(reps, exact)
    if suite in ("anchor", "all"):
        a, b = estimate_theta(spec, sc.mc_n)
        tol = 3 * (a.standard_error + b.standard_error) + 1e-3
        run.reports.append(IdentityReport("extremal_index", a.mean, b.mean, tol, mc_agree(a, b),
                                          "direct_vs_kappa", "montecarlo",
                                          {"se_lhs": a.standard_error, "se_rhs": b.standard_error,
                                           "n": a.sample_count, "seed": int(spec.root_seed)}))


def run_verify(sc: Scenario, suite: str = "all", mode: str = "exact", seed: int | None = None):
    if suite not in SUITES:
        raise ScenarioError(f"unknown suite {suite!r}", "--suite")
    run = _Run(sc)
    seed = sc.seed if seed is None else seed
    if mode == "exact":
        if sc.law is None and sc.measure is None:
            raise ScenarioError("exact mode needs a rayMeasure or spectralLaw source", "--mode")
        steps = {"palm": [_exact_palm], "spectral": [_exact_spectral], "tail": [_exact_tail],
                 "anchor": [_exact_anchor],
                 "all": [_exact_palm, _exact_spectral, _exact_tail, _exact_anchor]}[suite]
        for step in steps:
            step(run)
    elif mode == "mc":
        _mc(run, suite, seed)
    else:
        raise ScenarioError(f"unknown mode {mode!r}", "--mode")
    reports = sort_reports(run.reports)
    failed = sum(1 for r in reports if not r.passed)
    return {"command": "verify", "version": __version__, "suite": suite, "mode": mode,
            "seed": seed, "scenario": sc.raw,
            "reports": [r.to_dict() for r in reports],
            "failures": [r.to_dict() for r in reports if not r.passed],
            "skipped": run.skipped,
            "summary": {"passed": len(reports) - failed, "failed": failed,
                        "skipped": len(run.skipped)}}


def run_construct(sc: Scenario, via: str = "anchor"):
    law = sc.law if sc.law is not None else extract_spectral_decomposition(sc.measure)
    if via == "anchor":
        nu = tail_from_anchor(law, sc.anchor)
    elif via == "weight":
        nu = tail_from_weight(law, sc.weight)
    elif via == "H":
        nu = tail_from_H(law)
    else:
        raise ScenarioError(f"unknown construction {via!r}", "--via")
    Q = palm_of_exceedance(nu)
    return {"command": "construct", "version": __version__, "via": via,
            "measure": canonical_dict(nu),
            "validation": {"stationary": is_stationary(nu), "homogeneous": is_homogeneous(nu),
                           "palm_roundtrip": not measure_difference(Q, build_Q(law)),
                           "exceedance_mass": _g(exceedance_mass(nu))}}


def run_index(sc: Scenario, seed: int | None = None):
    out = {"command": "index", "version": __version__}
    if sc.law is not None or sc.measure is not None:
        law = sc.law if sc.law is not None else extract_spectral_decomposition(sc.measure)
        rep = index_report(build_Q(law), sc.anchor, sc.exact_tol)
        out.update({k: rep[k] for k in sorted(rep)})
        out["verdict"] = "agree" if rep["agree"] else "disagree"
        ok = rep["agree"]
    else:
        spec = sc.sampler_spec(sc.seed if seed is None else seed)
        a, b = estimate_theta(spec, sc.mc_n)
        ok = mc_agree(a, b)
        out.update({"theta_direct": a.to_dict(), "theta_kappa": b.to_dict(),
                    "ci_direct": list(a.ci()), "ci_kappa": list(b.ci()),
                    "seed": int(spec.root_seed),
                    "verdict": "consistent" if ok else "inconsistent"})
    return out, ok


def run_sample(sc: Scenario, n: int, seed: int | None = None):
    spec = sc.sampler_spec(sc.seed if seed is None else seed)
    Y = sample_Q(spec, n)
    return {"command": "sample", "version": __version__, "kind": spec.kind,
            "alpha": spec.alpha, "group": spec.group.to_dict(), "cone": spec.cone.to_dict(),
            "seed": int(spec.root_seed), "n": int(n),
            "fields": [y.reshape(-1, *spec.cone.value_shape).tolist() for y in Y]}


def _unstring(x):
    if isinstance(x, str) and x in ("inf", "-inf", "nan"):
        return float(x)
    return x


def load_report(path) -> dict:
    """Read a report written by :func:`main`; ``"inf"`` markers become floats."""
    with open(path) as fh:
        doc = json.load(fh)
    for r in doc.get("reports", []):
        for k in ("lhs", "rhs"):
            r[k] = _unstring(r[k])
    return doc


# ---------------------------------------------------------------------------
# entry point

def _emit(doc: dict, out: str | None):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="palmtail", description="Palm calculus checks for tail measures")
    p.add_argument("--version", action="version", version=f"palmtail {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run identity suites on a scenario")
    v.add_argument("scenario")
    v.add_argument("--suite", choices=SUITES, default="all")
    v.add_argument("--mode", choices=("exact", "mc"), default="exact")
    v.add_argument("--seed", type=int, default=None)
    v.add_argument("--timing", action="store_true", help="add wall-clock timing (breaks byte identity)")
    v.add_argument("--out")

    c = sub.add_parser("construct", help="build the tail measure of a spectral law")
    c.add_argument("scenario")
    c.add_argument("--via", choices=("anchor", "weight", "H"), default="anchor")
    c.add_argument("--out")

    i = sub.add_parser("index", help="extremal index by every available route")
    i.add_argument("scenario")
    i.add_argument("--seed", type=int, default=None)
    i.add_argument("--out")

    s = sub.add_parser("sample", help="draw fields from the Palm law")
    s.add_argument("scenario")
    s.add_argument("-n", type=int, default=10)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        sc = load_scenario(args.scenario)
        if args.command == "verify":
            doc = run_verify(sc, args.suite, args.mode, args.seed)
            if args.timing:
                doc["timing"] = {"seconds": time.perf_counter() - t0}
            code = 0 if doc["summary"]["failed"] == 0 else 1
        elif args.command == "construct":
            try:
                doc = run_construct(sc, args.via)
                code = 0
            except SpaceShiftFailed as e:
                r = e.counterexample
                doc = {"command": "construct", "version": __version__, "error": "SpaceShiftFailed",
                       "message": str(e), "counterexample": r.to_dict() if r else None}
                code = 1
        elif args.command == "index":
            doc, ok = run_index(sc, args.seed)
            code = 0 if ok else 1
        else:
            if args.n < 1:
                raise ScenarioError("sample count must be at least 1", "-n")
            doc = run_sample(sc, args.n, args.seed)
            code = 0
    except (PalmtailError, OSError) as e:
        sys.stderr.write(f"palmtail: error: {type(e).__name__}: {e}\n")
        return 2
    _emit(doc, args.out)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
