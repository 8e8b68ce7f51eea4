"""End-to-end checks on a structure or an optimizer run, collected into a JSON-ready report.

Hard checks are proved properties (energy identities, width bound, exclusion
triangle, parity, phase monotonicity, interval lengths); a failure sets
``ok = False``.  Soft checks (bang-bang fraction, quarter-wave widths) are
numerical observations and only reported.
"""
from __future__ import annotations

import math

import numpy as np

from . import analysis
from .bragg import compare_to_bragg
from .core import AdmissibleSet, InapplicableError, ResforgeError, SearchRect, Structure, asymmetry, validate_structure
from .forward1d import EPS_TOP, find_resonances, newton_resonance
from .optimizer import bangbang_metrics, extract_transitions

IDENTITY_TOL = 1e-8
PARITY_TOL = 1e-6


class Report:
    def __init__(self):
        self.checks: list[dict] = []

    def add(self, name: str, passed, hard: bool, value=None, detail: str = ""):
        self.checks.append({"name": name, "passed": passed, "hard": hard, "value": value, "detail": detail})

    def skip(self, name: str, reason: str):
        self.checks.append({"name": name, "passed": None, "hard": False, "value": None, "detail": reason})

    @property
    def ok(self) -> bool:
        return all(c["passed"] is not False for c in self.checks if c["hard"])


def _resonance_checks(rep: Report, pairs, a: AdmissibleSet, symmetric: bool):
    rows = []
    for p in pairs:
        w = p.omega
        ident = analysis.variational_residuals(p)
        bound = analysis.lower_bound_width(abs(w.real), a.n_plus, a.L)
        row = {"omega": w, "identity_re": ident.re_residual, "identity_im": ident.im_residual,
               "bound": bound, "bound_ok": abs(w.imag) >= bound}
        rep.add(f"energy identities at {w:.6g}", max(ident.re_residual, ident.im_residual) < IDENTITY_TOL, True,
                max(ident.re_residual, ident.im_residual))
        if abs(w.real) > 1e-12 * abs(w):
            row["width_identity"] = ident.width_identity_residual
            rep.add(f"width identity at {w:.6g}", ident.width_identity_residual < IDENTITY_TOL, True,
                    ident.width_identity_residual)
        rep.add(f"width lower bound at {w:.6g}", row["bound_ok"], True, abs(w.imag) - bound)
        if symmetric:
            tri = analysis.in_exclusion_triangle(w, a.n_plus, a.L)
            row["in_triangle"] = tri
            rep.add(f"outside exclusion triangle at {w:.6g}", not tri, True, tri)
            par = analysis.classify_parity(p.mode, PARITY_TOL)
            row["parity"] = par.parity.value
            row["parity_score"] = par.score
            rep.add(f"parity at {w:.6g}", par.parity.value in ("even", "odd"), True, par.score, par.parity.value)
        rows.append(row)
    return rows


def verify_structure(s: Structure, a: AdmissibleSet, rect: SearchRect | None = None) -> dict:
    rep = Report()
    mem = validate_structure(s, a)
    rep.add("admissible", mem.member, True, list(mem.bound_violations),
            "" if mem.length_ok else f"L = {s.L} differs from {a.L}")
    symmetric = asymmetry(s) == 0.0
    if rect is None:
        top = a.rho if math.isfinite(a.rho) else 10.0
        rect = SearchRect(0.0, top, -2.0, -EPS_TOP)
    roots = find_resonances(s, rect)
    rep.add("contour count matches", roots.complete, False, [len(roots), roots.expected])
    rows = _resonance_checks(rep, roots, a, symmetric)
    return {"input": "structure", "symmetric": symmetric, "rect": [rect.re_min, rect.re_max, rect.im_min, rect.im_max],
            "resonances": rows, "checks": rep.checks, "ok": rep.ok}


def verify_run(s: Structure, diagnostics: dict) -> dict:
    cfg = diagnostics.get("config", {})
    rho = cfg.get("rho")
    a = AdmissibleSet(cfg.get("L", s.L), cfg.get("n_minus", float(np.min(s.n))),
                      cfg.get("n_plus", float(np.max(s.n))), math.inf if rho is None else rho)
    rep = Report()
    mem = validate_structure(s, a)
    rep.add("admissible", mem.member, True, list(mem.bound_violations))
    pair = newton_resonance(s, complex(*diagnostics["omega"]))
    symmetric = asymmetry(s) == 0.0
    rows = _resonance_checks(rep, [pair], a, symmetric)
    tol = 1e-3 * (a.n_plus - a.n_minus)
    m = bangbang_metrics(s, a, tol)
    rep.add("bang-bang fraction > 0.99", m.fraction_at_bounds > 0.99, False, m.fraction_at_bounds)
    rep.add("asymmetry < 1e-2", m.asymmetry < 1e-2, False, m.asymmetry)
    rep.add("sign condition agreement", None, False,
            analysis.sign_structure_agreement(pair, s, a.n_minus, a.n_plus))
    out = {"input": "run", "omega": pair.omega, "symmetric": symmetric, "resonances": rows}
    try:
        tr = extract_transitions(s, a.n_minus, a.n_plus)
    except InapplicableError as exc:
        rep.skip("transitions", str(exc))
        tr = None
    if tr is not None:
        out["transitions"] = tr.to_dict()
        rep.add("N = 4M + 1", tr.M is not None, False, tr.N)
        if symmetric:
            mono = analysis.phase_monotone(pair.mode)
            rep.add("phase monotone on each half", mono, True, mono)
            if tr.interior:
                ch = analysis.interval_phase_changes(pair.mode, tr.points, tr.interior)
                rep.add("interior phase change pi/2", None, False, float(np.max(np.abs(np.abs(ch) - np.pi / 2))))
            for k in tr.interior:
                b = analysis.interior_interval_bound(pair, s, k, tr)
                rep.add(f"interior interval {k} length bound", b.holds, True, [b.lhs, b.rhs])
        else:
            rep.skip("phase monotone on each half", "structure is not mirror symmetric")
        try:
            br = compare_to_bragg(tr, pair.omega, a.n_plus, a.n_minus)
        except ResforgeError as exc:
            rep.skip("quarter-wave comparison", str(exc))
        else:
            out["bragg"] = {"max_deviation": br.max_deviation, "center_width": br.center_width,
                            "d_plus": br.d_plus, "ratios": [iv.ratio for iv in br.intervals]}
            rep.add("non-center widths within 10% of quarter wave", br.max_deviation < 0.1, False, br.max_deviation)
            rep.add("center interval < 2 d_plus", br.center_ok, False,
                    None if br.center_width is None else br.center_width / (2 * br.d_plus))
    out.update({"checks": rep.checks, "ok": rep.ok})
    return out
