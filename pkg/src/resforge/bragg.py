"""Two-layer periodic media: dispersion relation, first band gap, quarter-wave design.

Also compares the layers of optimized 1D structures with the quarter-wave
(Bragg) widths at the optimized frequency.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core import DomainError, InapplicableError, ResforgeError


class NoGapError(ResforgeError):
    pass


@dataclass(frozen=True)
class LayeredMedium:
    n1: float
    n2: float
    b: float
    d: float = 1.0

    def __post_init__(self):
        if not (self.n1 > 0 and self.n2 > 0 and self.d > 0):
            raise DomainError("indices and period must be positive")
        if not 0 < self.b < self.d:
            raise DomainError("layer width b must lie in (0, d)")

    @property
    def n_h(self) -> float:
        return harmonic_mean(self.n1, self.n2)

    @classmethod
    def quarter_wave(cls, n1: float, n2: float, d: float = 1.0) -> "LayeredMedium":
        # equal optical thickness: n1 b = n2 (d - b)
        return cls(n1, n2, n2 * d / (n1 + n2), d)

    @classmethod
    def from_gamma(cls, n1: float, n2: float, d: float, gamma: float) -> "LayeredMedium":
        return cls(n1, n2, gamma * harmonic_mean(n1, n2) / n1 * d / 2, d)


@dataclass(frozen=True)
class BandGap:
    omega1: float
    omega2: float

    def __post_init__(self):
        if not self.omega1 < self.omega2:
            raise DomainError("gap edges must satisfy omega1 < omega2")

    @property
    def center(self) -> float:
        return 0.5 * (self.omega1 + self.omega2)

    @property
    def width(self) -> float:
        return self.omega2 - self.omega1

    @property
    def ratio(self) -> float:
        return self.width / self.center


def harmonic_mean(a: float, b: float) -> float:
    return 2.0 / (1.0 / a + 1.0 / b)


def dispersion_rhs(m: LayeredMedium, omega):
    """Right-hand side of ``cos(k d) = ...``; magnitude above one inside a gap."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise DomainError("omega must be nonnegative")
    p = w * m.n1 * m.b
    q = w * m.n2 * (m.d - m.b)
    out = np.cos(p) * np.cos(q) - 0.5 * (m.n2 / m.n1 + m.n1 / m.n2) * np.sin(p) * np.sin(q)
    return float(out) if out.ndim == 0 else out


def simplified_rhs(n1: float, n2: float, d: float, omega):
    """Quarter-wave form ``1 - (n1 + n2)^2 / (2 n1 n2) sin^2(w n_h d / 2)``."""
    w = np.asarray(omega, dtype=float)
    nh = harmonic_mean(n1, n2)
    return 1 - 0.5 * (n1 + n2) ** 2 / (n1 * n2) * np.sin(w * nh * d / 2) ** 2


def first_gap_edges(m: LayeredMedium, samples_per_band: int = 400, max_bands: int = 64,
                    xtol: float = 1e-13) -> BandGap:
    """Edges of the lowest frequency interval with ``|rhs| > 1``."""
    if m.n1 == m.n2:
        raise NoGapError("n1 = n2: homogeneous medium has no gap")
    # optical period sets the band spacing
    scale = math.pi / (m.n1 * m.b + m.n2 * (m.d - m.b))
    top = max_bands * scale
    w = np.linspace(0.0, top, samples_per_band * max_bands + 1)[1:]
    g = np.abs(dispersion_rhs(m, w)) - 1.0
    inside = np.flatnonzero(g > 0)
    if inside.size == 0:
        raise NoGapError(f"no gap below omega = {top:.4g}")
    i = int(inside[0])
    run_end = i
    while run_end + 1 < len(g) and g[run_end + 1] > 0:
        run_end += 1

    def f(x):
        return abs(dispersion_rhs(m, x)) - 1.0

    lo = brentq(f, w[i - 1], w[i], xtol=xtol, rtol=1e-15) if i > 0 else 0.0
    hi = brentq(f, w[run_end], w[run_end + 1], xtol=xtol, rtol=1e-15)
    return BandGap(lo, hi)


def quarter_wave_widths(omega: float, n_plus: float, n_minus: float):
    """``(d_plus, d_minus, period, n_h)`` with ``d_pm = pi / (2 n_pm omega)``."""
    if not omega > 0:
        raise DomainError("omega must be positive")
    dp = math.pi / (2 * n_plus * omega)
    dm = math.pi / (2 * n_minus * omega)
    return dp, dm, dp + dm, harmonic_mean(n_plus, n_minus)


@dataclass
class GammaScan:
    gamma: np.ndarray
    ratio: np.ndarray
    width: np.ndarray
    valid: np.ndarray

    @property
    def argmax(self) -> float:
        r = np.where(self.valid, self.ratio, -np.inf)
        return float(self.gamma[int(np.argmax(r))])

    @property
    def argmax_width(self) -> float:
        r = np.where(self.valid, self.width, -np.inf)
        return float(self.gamma[int(np.argmax(r))])


def scan_gamma(n1: float, n2: float, d: float, gamma_grid, workers: int = 4) -> GammaScan:
    """Gap-to-midgap ratio over the family ``b = gamma (n_h / n1) (d / 2)``.

    Values of ``gamma`` that put ``b`` outside ``(0, d)`` are flagged invalid.
    """
    g = np.asarray(gamma_grid, dtype=float)
    ratio = np.full(g.shape, np.nan)
    width = np.full(g.shape, np.nan)
    valid = np.zeros(g.shape, dtype=bool)

    def one(gi):
        try:
            return first_gap_edges(LayeredMedium.from_gamma(n1, n2, d, gi))
        except (DomainError, NoGapError):
            return None

    # samples are independent; map keeps the grid order
    with ThreadPoolExecutor(max_workers=workers) as ex:
        gaps = list(ex.map(one, g))
    for i, gap in enumerate(gaps):
        if gap is not None:
            ratio[i], width[i], valid[i] = gap.ratio, gap.width, True
    return GammaScan(g, ratio, width, valid)


def parse_range(text: str) -> np.ndarray:
    """``start:step:stop`` inclusive grid, robust to round-off at the end point."""
    try:
        a, s, b = (float(t) for t in text.split(":"))
    except ValueError as exc:
        raise DomainError("range must be start:step:stop") from exc
    if not s > 0 or b < a:
        raise DomainError("range needs step > 0 and stop >= start")
    n = int(math.floor((b - a) / s + 1e-9)) + 1
    return np.round(a + s * np.arange(n), 12)


@dataclass
class IntervalComparison:
    kind: str
    index: int
    width: float
    n: float
    quarter_wave: float

    @property
    def ratio(self) -> float:
        return self.width / self.quarter_wave


@dataclass
class BraggReport:
    omega: complex
    n_plus: float
    n_minus: float
    intervals: list[IntervalComparison] = field(default_factory=list)
    center_width: float | None = None
    d_plus: float = 0.0

    @property
    def max_deviation(self) -> float:
        devs = [abs(iv.ratio - 1) for iv in self.intervals]
        return max(devs) if devs else 0.0

    @property
    def center_ok(self) -> bool:
        return self.center_width is None or self.center_width < 2 * self.d_plus


def compare_to_bragg(transitions, omega: complex, n_plus: float, n_minus: float) -> BraggReport:
    """Non-center layer widths relative to ``lambda_eff / 4`` at ``|Re omega|``.

    ``transitions`` is the result of :func:`resforge.optimizer.extract_transitions`.
    """
    w = abs(omega.real)
    if w <= 1e-12 * (1 + abs(omega)):
        raise InapplicableError("quarter-wave widths are undefined for a purely imaginary resonance")
    dp, dm, _, _ = quarter_wave_widths(w, n_plus, n_minus)
    rep = BraggReport(omega, n_plus, n_minus, d_plus=dp)
    for k, iv in enumerate(transitions.intervals):
        if iv.kind == "center":
            rep.center_width = iv.width
            continue
        q = dp if iv.high else dm
        rep.intervals.append(IntervalComparison(iv.kind, k, iv.width, n_plus if iv.high else n_minus, q))
    return rep
