"""Minimize the width ``|Im w|`` of a tracked resonance over bounded cell values.

Projected gradient descent with Barzilai-Borwein steps and Armijo
backtracking.  Steps use the L2 (length-weighted) metric so that the method
is unchanged when cells are split; after convergence on the starting grid the
cells next to each index jump are bisected and the descent resumes, which
places the jumps to a fraction of the original cell width.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .analysis import sign_structure_agreement
from .core import (
    AdmissibleSet,
    DomainError,
    InapplicableError,
    ResforgeError,
    ResonancePair,
    SearchRect,
    Structure,
    asymmetry,
    merge_cells,
    symmetrize,
)
from .forward1d import EPS_TOP, evaluate_mode, find_resonances, newton_resonance
from .gradient import gradient_cells, interface_gradient

log = logging.getLogger(__name__)


class SelectorError(ResforgeError):
    pass


class TrackingLoss(ResforgeError):
    pass


@dataclass
class OptimizerConfig:
    L: float = 1.0
    n_minus: float = 1.0
    n_plus: float = 2.0
    rho: float = math.inf
    cells: int = 512
    j: int | None = 0
    omega0: complex | None = None
    max_iter: int = 4000
    g_tol: float = 1e-10
    f_rtol: float = 1e-13
    armijo: float = 1e-4
    refine_levels: int = 1
    polish: bool = True
    symmetric: bool = False
    max_failures: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.cells < 16:
            raise DomainError("need at least 16 cells")
        if self.j is None and self.omega0 is None:
            raise DomainError("give a mode index j or a starting frequency omega0")
        if self.j is not None and self.j < 0:
            raise DomainError("mode index j must be nonnegative")
        if self.refine_levels < 0 or self.max_iter < 1:
            raise DomainError("refine_levels >= 0 and max_iter >= 1 required")
        self.admissible()

    def admissible(self) -> AdmissibleSet:
        return AdmissibleSet(self.L, self.n_minus, self.n_plus, self.rho, self.symmetric)

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.omega0 is not None:
            d["omega0"] = [self.omega0.real, self.omega0.imag]
        d["rho"] = None if math.isinf(self.rho) else self.rho
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerConfig":
        d = dict(d)
        if d.get("omega0") is not None:
            re, im = d["omega0"]
            d["omega0"] = complex(re, im)
        if d.get("rho") is None:
            d.pop("rho", None)
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise DomainError(f"unknown optimizer options: {sorted(extra)}")
        return cls(**d)


# ---------------------------------------------------------------- mode selection

def count_minima(pair: ResonancePair, samples: int | None = None) -> int:
    """Strict interior local minima of ``|u|`` on a dense uniform grid."""
    s = pair.mode.structure
    if samples is None:
        samples = max(4001, int(64 * abs(pair.omega) * float(np.max(s.n)) * s.L))
    x = np.linspace(0.0, s.L, samples)
    a = np.abs(evaluate_mode(pair.mode, x)[0])
    inner = a[1:-1]
    return int(np.sum((inner < a[:-2]) & (inner < a[2:])))


def select_mode(s0: Structure, j: int, im_floor: float = -3.0) -> ResonancePair:
    """Resonance whose mode modulus has ``j`` interior minima.

    ``j = 0`` picks the purely imaginary resonance (its modulus has a single minimum).
    """
    if int(j) != j or j < 0:
        raise DomainError("mode index j must be a nonnegative integer")
    optical = float(np.dot(s0.n, s0.widths))
    spacing = math.pi / optical
    rect = SearchRect(-0.25 * spacing, (j + 1.5) * spacing, im_floor, -EPS_TOP)
    roots = find_resonances(s0, rect, grid_nx=max(8, 4 * (j + 2)), grid_ny=6)
    counts = []
    for p in roots:
        imaginary = abs(p.omega.real) <= 1e-8 * (1 + abs(p.omega))
        if p.omega.real < 0 and not imaginary:
            continue
        c = count_minima(p)
        counts.append((p.omega, c, imaginary))
        if j == 0 and imaginary and c == 1:
            return p
        if j > 0 and not imaginary and c == j:
            return p
    listing = ", ".join(f"{w:.4g}: {c}{' (imaginary)' if im else ''}" for w, c, im in counts)
    raise SelectorError(f"no resonance with {j} minima; available: {listing or 'none'}")


# ---------------------------------------------------------------- tracking

def neighbour_roots(s: Structure, omega: complex, exclude_radius: float = 1e-6) -> list[complex]:
    """Other resonances near ``omega`` (within about 1.5 mode spacings)."""
    spacing = math.pi / float(np.dot(s.n, s.widths))
    depth = min(3 * omega.imag, omega.imag - 1.0)
    rect = SearchRect(omega.real - 1.5 * spacing, omega.real + 1.5 * spacing, depth, -EPS_TOP)
    roots = find_resonances(s, rect, grid_nx=8, grid_ny=4)
    return [p.omega for p in roots if abs(p.omega - omega) > exclude_radius * (1 + abs(omega))]


def track_resonance(s_new: Structure, omega_prev: complex, neighbours=(), tol: float = 1e-12) -> ResonancePair:
    """Newton from ``omega_prev``; the root must stay within half the distance to the nearest other root."""
    radius = min((abs(omega_prev - w) for w in neighbours), default=math.inf) * 0.5
    try:
        pair = newton_resonance(s_new, omega_prev, tol=tol, max_iter=30,
                                max_step=None if math.isinf(radius) else radius)
    except ResforgeError as exc:
        raise TrackingLoss(f"Newton failed from {omega_prev}: {exc}") from exc
    if abs(pair.omega - omega_prev) > radius:
        raise TrackingLoss(f"root jumped from {omega_prev} to {pair.omega} (radius {radius:.3g})")
    return pair


# ---------------------------------------------------------------- structure diagnostics

@dataclass(frozen=True)
class BangBangMetrics:
    fraction_at_bounds: float
    max_interior_deviation: float
    asymmetry: float


def bangbang_metrics(s: Structure, a: AdmissibleSet, tol: float) -> BangBangMetrics:
    dev = np.minimum(np.abs(s.n - a.n_minus), np.abs(s.n - a.n_plus))
    at = dev <= tol
    frac = float(np.sum(s.widths[at]) / s.L)
    inner = float(np.max(dev[~at])) if np.any(~at) else 0.0
    return BangBangMetrics(frac, inner, asymmetry(s))


@dataclass(frozen=True)
class Interval:
    x0: float
    x1: float
    high: bool
    kind: str

    @property
    def width(self) -> float:
        return self.x1 - self.x0


@dataclass
class Transitions:
    points: list[float]
    intervals: list[Interval]
    leading: float = 0.0
    trailing: float = 0.0
    center_index: int | None = None

    @property
    def N(self) -> int:
        return len(self.intervals)

    @property
    def M(self) -> int | None:
        return (self.N - 1) // 4 if self.N % 4 == 1 else None

    @property
    def interior(self) -> list[int]:
        return [k for k, iv in enumerate(self.intervals) if iv.kind == "interior"]

    @property
    def high_count(self) -> int:
        return sum(iv.high for iv in self.intervals)

    def to_dict(self) -> dict:
        return {
            "points": self.points,
            "N": self.N,
            "M": self.M,
            "center_index": self.center_index,
            "leading": self.leading,
            "trailing": self.trailing,
            "high_count": self.high_count,
            "intervals": [{"x0": iv.x0, "x1": iv.x1, "high": iv.high, "kind": iv.kind} for iv in self.intervals],
        }


def extract_transitions(s: Structure, n_minus: float | None = None, n_plus: float | None = None,
                        threshold: float | None = None, min_fraction: float = 0.95,
                        exterior: float = 1.0) -> Transitions:
    """Discontinuity points of the binarized structure and the interval classes.

    Cells at exactly the threshold count as low.  ``x = 0`` and ``x = L`` are
    discontinuities unless the adjacent layer matches the exterior index.
    """
    lo = float(np.min(s.n)) if n_minus is None else n_minus
    hi = float(np.max(s.n)) if n_plus is None else n_plus
    if not hi > lo:
        raise InapplicableError("structure is homogeneous; bounds are needed to binarize it")
    tol = 1e-3 * (hi - lo)
    m = bangbang_metrics(s, AdmissibleSet(s.L, lo, hi), tol)
    if m.fraction_at_bounds <= min_fraction:
        raise InapplicableError(f"structure is not bang-bang (fraction at bounds {m.fraction_at_bounds:.4f})")
    thr = 0.5 * (lo + hi) if threshold is None else threshold
    high = s.n > thr
    runs = []
    start = 0
    for k in range(1, len(high) + 1):
        if k == len(high) or high[k] != high[start]:
            runs.append((float(s.edges[start]), float(s.edges[k]), bool(high[start])))
            start = k
    leading = trailing = 0.0
    low_is_exterior = abs(lo - exterior) <= tol
    if low_is_exterior and not runs[0][2] and len(runs) > 1:
        leading = runs[0][1] - runs[0][0]
        runs = runs[1:]
    if low_is_exterior and not runs[-1][2] and len(runs) > 1:
        trailing = runs[-1][1] - runs[-1][0]
        runs = runs[:-1]
    N = len(runs)
    points = [runs[0][0]] + [r[1] for r in runs]
    if N % 2 == 1:
        center = (N - 1) // 2
    else:
        mid = 0.5 * s.L
        center = next(k for k, r in enumerate(runs) if r[0] <= mid <= r[1])
    intervals = []
    for k, (a, b, h) in enumerate(runs):
        if N == 1 or k == center:
            kind = "center"
        elif k == 0:
            kind = "leftmost"
        elif k == N - 1:
            kind = "rightmost"
        else:
            kind = "interior"
        intervals.append(Interval(a, b, h, kind))
    return Transitions(points, intervals, leading, trailing, center)


def kkt_violation(grad_im: np.ndarray, s: Structure, a: AdmissibleSet, tol: float) -> float:
    """Largest sign violation of ``d(Im w)/dn_k`` at the bounds, relative to the gradient scale.

    Cells at the upper bound need ``d(Im w)/dn_k >= 0`` and cells at the lower bound
    ``<= 0`` (raising ``Im w`` shrinks the width).
    """
    g = grad_im / s.widths
    scale = float(np.max(np.abs(g))) or 1.0
    up = np.abs(s.n - a.n_plus) <= tol
    down = np.abs(s.n - a.n_minus) <= tol
    v = 0.0
    if np.any(up):
        v = max(v, float(np.max(-g[up])))
    if np.any(down):
        v = max(v, float(np.max(g[down])))
    return max(v, 0.0) / scale


# ---------------------------------------------------------------- optimization

@dataclass
class HistoryRow:
    iteration: int
    level: int
    cells: int
    re_omega: float
    im_omega: float
    step: float
    pg_norm: float


@dataclass
class OptimizationRun:
    config: OptimizerConfig
    initial: Structure
    initial_pair: ResonancePair
    structure: Structure
    pair: ResonancePair
    history: list[HistoryRow] = field(default_factory=list)
    converged: bool = False
    message: str = ""
    diagnostics: dict = field(default_factory=dict)

    @property
    def omega(self) -> complex:
        return self.pair.omega

    @property
    def width(self) -> float:
        return abs(self.pair.omega.imag)


def _refine(s: Structure, a: AdmissibleSet, tol: float) -> Structure:
    """Bisect every cell that is off the bounds or borders a jump in ``n``."""
    n = s.n
    off = np.minimum(np.abs(n - a.n_minus), np.abs(n - a.n_plus)) > tol
    jump = np.zeros(len(n), dtype=bool)
    d = n[1:] != n[:-1]
    jump[1:] |= d
    jump[:-1] |= d
    mark = off | jump
    if not np.any(mark):
        return s
    edges, vals = [0.0], []
    for k in range(len(n)):
        lo, hi = s.edges[k], s.edges[k + 1]
        if mark[k]:
            edges.append(0.5 * (lo + hi))
            vals.append(n[k])
        edges.append(hi)
        vals.append(n[k])
    return Structure(np.array(edges), np.array(vals))


def _project(values: np.ndarray, s: Structure, a: AdmissibleSet, symmetric: bool) -> np.ndarray:
    v = np.clip(values, a.n_minus, a.n_plus)
    if symmetric:
        v = symmetrize(s.with_values(v)).n
        if len(v) != len(s.n):
            raise DomainError("symmetric projection needs a mirror-symmetric grid")
    return v


def _symmetric_grid(s: Structure) -> Structure:
    return symmetrize(s)


class _Descent:
    """State of one projected-gradient descent on a fixed cell grid."""

    def __init__(self, cfg: OptimizerConfig, a: AdmissibleSet):
        self.cfg = cfg
        self.a = a
        self.history: list[HistoryRow] = []
        self.iteration = 0
        self.step = None

    def run(self, s: Structure, pair: ResonancePair, level: int, budget: int):
        cfg, a = self.cfg, self.a
        w = s.widths
        neighbours = neighbour_roots(s, pair.omega)
        g = -gradient_cells(pair, s).d_im_omega  # gradient of f = |Im w| = -Im w
        dens = g / w
        f = -pair.omega.imag
        if self.step is None:
            self.step = 0.25 * (a.n_plus - a.n_minus) / max(float(np.max(np.abs(dens))), 1e-300)
        t = self.step
        recent = [f]
        converged, message = False, "iteration budget exhausted"
        for _ in range(budget):
            pg = s.n - _project(s.n - dens, s, a, cfg.symmetric)
            pg_norm = float(np.sqrt(np.sum(w * pg**2)))
            if pg_norm <= cfg.g_tol:
                converged, message = True, "projected gradient below g_tol"
                break
            failures = 0
            while True:
                trial = _project(s.n - t * dens, s, a, cfg.symmetric)
                dn = trial - s.n
                if not np.any(dn):
                    break
                s_try = s.with_values(trial)
                try:
                    p_try = track_resonance(s_try, pair.omega, neighbours)
                except TrackingLoss as exc:
                    failures += 1
                    if failures > cfg.max_failures:
                        raise TrackingLoss(f"{failures} consecutive tracking failures: {exc}") from exc
                    t *= 0.5
                    continue
                f_try = -p_try.omega.imag
                if f_try <= f + cfg.armijo * float(np.dot(g, dn)):
                    break
                t *= 0.5
                if t * float(np.max(np.abs(dens))) < 1e-15:
                    dn = np.zeros_like(dn)
                    break
            if not np.any(dn):
                converged, message = True, "no admissible descent step"
                break
            g_new = -gradient_cells(p_try, s_try).d_im_omega
            dens_new = g_new / w
            sy = float(np.sum(w * dn * (dens_new - dens)))
            ss = float(np.sum(w * dn * dn))
            t = ss / sy if sy > 0 else 2 * t
            s, pair, g, dens, f = s_try, p_try, g_new, dens_new, f_try
            self.iteration += 1
            self.history.append(HistoryRow(self.iteration, level, len(s), pair.omega.real,
                                           pair.omega.imag, t, pg_norm))
            recent.append(f)
            if self.iteration % 200 == 0:
                neighbours = neighbour_roots(s, pair.omega)
            if len(recent) > 50:
                recent.pop(0)
                if recent[0] - recent[-1] <= cfg.f_rtol * abs(recent[-1]):
                    converged, message = True, "objective stalled"
                    break
        self.step = t
        return s, pair, converged, message


def binarize(s: Structure, a: AdmissibleSet) -> Structure:
    """Two-level structure with the same layer pattern (cells at the midpoint go low)."""
    vals = np.where(s.n > a.n_mid, a.n_plus, a.n_minus)
    return merge_cells(s.with_values(vals))


def polish_interfaces(s: Structure, pair: ResonancePair, a: AdmissibleSet, cfg: OptimizerConfig,
                      history: list, level: int, max_iter: int = 400):
    """Move the breakpoints of a two-level structure continuously to minimize the width.

    Stationarity means ``Im(alpha w^2 u(p)^2) = 0`` at every interior breakpoint.
    Returns ``(structure, pair, converged, message)``.
    """
    L = s.L
    if len(s) < 2:
        return s, pair, True, "single layer"
    gap = 1e-9 * L
    it0 = history[-1].iteration if history else 0
    neighbours = neighbour_roots(s, pair.omega)
    f = -pair.omega.imag
    g = -np.imag(interface_gradient(pair, s))  # gradient of f = -Im w wrt the breakpoints
    t = 1e-3 * L / max(float(np.max(np.abs(g))), 1e-300)
    scale = float(np.max(np.abs(interface_gradient(pair, s))))
    converged, message = False, "interface budget exhausted"
    for k in range(max_iter):
        gmax = float(np.max(np.abs(g)))
        if gmax <= 1e-12 * scale:
            converged, message = True, "interface gradient below tolerance"
            break
        p = s.edges[1:-1]
        while True:
            q = p - t * g
            edges = np.concatenate([[0.0], q, [L]])
            if np.all(np.diff(edges) > gap):
                s_try = Structure(edges, s.n)
                try:
                    p_try = track_resonance(s_try, pair.omega, neighbours)
                except TrackingLoss:
                    p_try = None
                if p_try is not None and -p_try.omega.imag <= f - cfg.armijo * t * float(np.dot(g, g)):
                    break
            t *= 0.5
            if t * gmax < 1e-16 * L:
                return s, pair, True, "interface step below rounding"
        g_new = -np.imag(interface_gradient(p_try, s_try))
        dp = q - p
        sy = float(np.dot(dp, g_new - g))
        t = float(np.dot(dp, dp)) / sy if sy > 0 else 2 * t
        s, pair, g, f = s_try, p_try, g_new, -p_try.omega.imag
        history.append(HistoryRow(it0 + k + 1, level, len(s), pair.omega.real, pair.omega.imag,
                                  t, float(np.sqrt(np.dot(g, g)))))
    return s, pair, converged, message


def optimize_width(cfg: OptimizerConfig, initial: Structure | None = None) -> OptimizationRun:
    """Local minimization of ``|Im w|`` for the resonance chosen by ``cfg.j`` or ``cfg.omega0``."""
    a = cfg.admissible()
    if initial is None:
        initial = Structure.uniform_grid(np.full(cfg.cells, a.n_mid), cfg.L)
    if abs(initial.L - cfg.L) > 1e-12 * cfg.L:
        raise DomainError("initial structure length differs from L")
    if np.any(initial.n < a.n_minus) or np.any(initial.n > a.n_plus):
        raise DomainError("initial structure violates the index bounds")
    if cfg.symmetric:
        initial = _symmetric_grid(initial)
    if cfg.j is not None:
        pair0 = select_mode(initial, cfg.j)
    else:
        pair0 = newton_resonance(initial, cfg.omega0)
    desc = _Descent(cfg, a)
    s, pair = initial, pair0
    converged, message = False, ""
    tol = 1e-3 * (a.n_plus - a.n_minus)
    for level in range(cfg.refine_levels + 1):
        if level > 0:
            s = _refine(s, a, tol)
            if cfg.symmetric:
                s = _symmetric_grid(s)
            pair = track_resonance(s, pair.omega)
        budget = cfg.max_iter - desc.iteration
        if budget <= 0:
            break
        s, pair, converged, message = desc.run(s, pair, level, budget)
    if cfg.polish and bangbang_metrics(s, a, tol).fraction_at_bounds > 0.95:
        s_b = binarize(s, a)
        try:
            p_b = track_resonance(s_b, pair.omega, neighbour_roots(s, pair.omega))
        except TrackingLoss as exc:
            log.warning("skipping interface polish: %s", exc)
        else:
            s_p, p_p, ok, msg = polish_interfaces(s_b, p_b, a, cfg, desc.history, cfg.refine_levels + 1)
            if -p_p.omega.imag <= -pair.omega.imag:
                s, pair, converged, message = s_p, p_p, ok, f"{message}; {msg}"
            else:
                # keep the grid optimum and drop the polish rows
                desc.history[:] = [r for r in desc.history if r.level <= cfg.refine_levels]
                message = f"{message}; polish did not improve ({msg})"
    run = OptimizationRun(cfg, initial, pair0, s, pair, desc.history, converged, message)
    run.diagnostics = diagnose(run)
    return run


def diagnose(run: OptimizationRun) -> dict:
    cfg = run.config
    a = cfg.admissible()
    s, pair = run.structure, run.pair
    tol = 1e-3 * (a.n_plus - a.n_minus)
    m = bangbang_metrics(s, a, tol)
    out = {
        "omega": [pair.omega.real, pair.omega.imag],
        "width": abs(pair.omega.imag),
        "iterations": len(run.history),
        "converged": run.converged,
        "message": run.message,
        "cells_initial": len(run.initial),
        "cells_final": len(s),
        "fraction_at_bounds": m.fraction_at_bounds,
        "max_interior_deviation": m.max_interior_deviation,
        "asymmetry": m.asymmetry,
        "n_at_0_center_L": [float(s.value_at(0.0)), float(s.value_at(0.5 * s.L)), float(s.value_at(s.L * (1 - 1e-12)))],
        "re_within_rho": abs(pair.omega.real) <= a.rho,
    }
    grad = gradient_cells(pair, s).d_im_omega
    out["kkt_violation"] = kkt_violation(grad, s, a, tol)
    out["sign_agreement"] = sign_structure_agreement(pair, s, a.n_minus, a.n_plus)
    try:
        tr = extract_transitions(s, a.n_minus, a.n_plus)
        out["transitions"] = tr.to_dict()
    except InapplicableError as exc:
        out["transitions"] = None
        out["transitions_error"] = str(exc)
    return out
