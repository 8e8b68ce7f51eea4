"""Identities, a-priori bounds and structural checks for 1D resonance pairs.

Every integral of ``|u|^2``, ``|u'|^2`` or ``u^2`` is evaluated in closed form
cell by cell (products of exponentials), so identity residuals measure the
root finder and not a quadrature rule.  Gauss-Legendre is kept as a
cross-check only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .core import InapplicableError, Mode, ResonancePair, Structure, asymmetry
from .forward1d import evaluate_mode


def _E(c, w):
    """``int_0^w exp(c t) dt`` for complex ``c``, stable as ``c w -> 0``."""
    c, w = np.broadcast_arrays(np.asarray(c, dtype=complex), np.asarray(w, dtype=float))
    z = c * w
    small = np.abs(z) < 1e-3
    out = np.empty(z.shape, dtype=complex)
    zs = z[small]
    out[small] = w[small] * (1 + zs / 2 + zs**2 / 6 + zs**3 / 24 + zs**4 / 120)
    out[~small] = np.expm1(z[~small]) / c[~small]
    return out


def _cell_terms(mode: Mode, widths=None):
    s = mode.structure
    w = s.widths if widths is None else widths
    return mode.A, mode.B, mode.omega * s.n, w


def abs2_integrals(mode: Mode, widths=None):
    """Per-cell ``int |u|^2`` and ``int |u'|^2`` over ``[x_k, x_k + widths_k]``."""
    A, B, k, w = _cell_terms(mode, widths)
    ea = _E(-2 * k.imag, w).real
    eb = _E(2 * k.imag, w).real
    ec = _E(2j * k.real, w)
    aa, bb = np.abs(A) ** 2, np.abs(B) ** 2
    cross = 2 * np.real(A * np.conj(B) * ec)
    return aa * ea + bb * eb + cross, np.abs(k) ** 2 * (aa * ea + bb * eb - cross)


def square_integrals(mode: Mode, widths=None):
    """Per-cell ``int u^2`` and ``int u'^2`` (no conjugation)."""
    A, B, k, w = _cell_terms(mode, widths)
    e_p = _E(2j * k, w)
    e_m = _E(-2j * k, w)
    base = A**2 * e_p + B**2 * e_m
    return base + 2 * A * B * w, -(k**2) * (base - 2 * A * B * w)


def cumulative_n2_abs2(mode: Mode, x) -> np.ndarray:
    """``int_0^x n^2 |u|^2`` in closed form for each ``x`` in ``[0, L]``."""
    s = mode.structure
    x = np.atleast_1d(np.asarray(x, dtype=float))
    full, _ = abs2_integrals(mode)
    csum = np.concatenate([[0.0], np.cumsum(s.n**2 * full)])
    idx = s.cell_index(x)
    part_w = x - s.edges[idx]
    A, B, k = mode.A[idx], mode.B[idx], mode.omega * s.n[idx]
    ea = _E(-2 * k.imag, part_w).real
    eb = _E(2 * k.imag, part_w).real
    ec = _E(2j * k.real, part_w)
    part = np.abs(A) ** 2 * ea + np.abs(B) ** 2 * eb + 2 * np.real(A * np.conj(B) * ec)
    return csum[idx] + s.n[idx] ** 2 * part


def gauss_integrals(mode: Mode, order: int = 12):
    """Gauss-Legendre cross-check: ``(int |u'|^2, int n^2 |u|^2)`` over ``[0, L]``."""
    s = mode.structure
    t, wt = np.polynomial.legendre.leggauss(order)
    lo, hi = s.edges[:-1], s.edges[1:]
    x = (0.5 * (hi - lo))[:, None] * (t[None, :] + 1) + lo[:, None]
    # stay inside each cell so the derivative comes from the right coefficients
    u, up = evaluate_mode(mode, x.ravel())
    u, up = u.reshape(x.shape), up.reshape(x.shape)
    jac = 0.5 * (hi - lo)[:, None]
    d2 = float(np.sum(wt * jac * np.abs(up) ** 2))
    n2u2 = float(np.sum(wt * jac * (s.n**2)[:, None] * np.abs(u) ** 2))
    return d2, n2u2


@dataclass(frozen=True)
class IdentityReport:
    re_residual: float
    im_residual: float
    width_identity_residual: float


def _energy_terms(mode: Mode):
    s = mode.structure
    a2, d2 = abs2_integrals(mode)
    n2u2 = float(np.sum(s.n**2 * a2))
    u0, _ = evaluate_mode(mode, 0.0)
    uL, _ = evaluate_mode(mode, s.L)
    return float(np.sum(d2)), n2u2, abs(u0) ** 2 + abs(uL) ** 2


def variational_residuals(pair: ResonancePair, s: Structure | None = None,
                          method: str = "closed") -> IdentityReport:
    """Relative residuals of the real/imaginary energy identities and of the width formula."""
    mode = pair.mode
    w = pair.omega
    if method == "closed":
        d2, n2u2, bnd = _energy_terms(mode)
    else:
        d2, n2u2 = gauss_integrals(mode)
        _, _, bnd = _energy_terms(mode)
    w2 = w * w
    re_lhs, re_rhs = w2.real * n2u2, d2 + w.imag * bnd
    re_res = abs(re_lhs - re_rhs) / (abs(re_lhs) + d2 + abs(w.imag) * bnd)
    if abs(w.real) <= 1e-12 * abs(w):
        # both sides of the imaginary identity carry a factor Re w: 0 = 0, and tau does not apply
        return IdentityReport(float(re_res), 0.0, math.nan)
    im_lhs, im_rhs = w2.imag * n2u2, -w.real * bnd
    im_res = abs(im_lhs - im_rhs) / (abs(im_lhs) + abs(w.real) * bnd)
    tau = bnd / (2 * n2u2)
    return IdentityReport(float(re_res), float(im_res), float(abs(tau - abs(w.imag)) / abs(w.imag)))


def width_from_identity(pair: ResonancePair, s: Structure | None = None) -> float:
    """``(|u(0)|^2 + |u(L)|^2) / (2 int n^2 |u|^2)``, which should equal ``|Im w|``."""
    w = pair.omega
    if abs(w.real) <= 1e-12 * abs(w):
        raise InapplicableError("width identity needs Re(omega) != 0")
    _, n2u2, bnd = _energy_terms(pair.mode)
    return bnd / (2 * n2u2)


def _bound_f(xi, re_omega, n_plus, L):
    q = re_omega**2 + xi**2
    return 3 * math.exp(-q * n_plus**2 * L**2) / (n_plus**2 * L * (3 + L**2 * q))


def closed_form_width_bound(re_omega: float, n_plus: float, L: float) -> float:
    """Explicit lower bound on ``|Im w|``, valid when ``n_plus > 1/e``."""
    if not n_plus > math.exp(-1):
        raise InapplicableError("closed form needs n_plus > 1/e")
    q = n_plus**2 * L**2 * re_omega**2
    return 3 * math.exp(-q) / (math.e * L * (1 + 3 * n_plus**2 + q))


def lower_bound_width(re_omega: float, n_plus: float, L: float) -> float:
    """``max_xi min(xi, f(xi))``: the fixed point of the decreasing bound function ``f``."""
    f0 = _bound_f(0.0, re_omega, n_plus, L)
    if f0 == 0.0:
        return 0.0
    g = lambda xi: xi - _bound_f(xi, re_omega, n_plus, L)
    return brentq(g, 0.0, f0, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def pointwise_bound(x, omega: complex, s: Structure):
    """Gronwall bound on ``|u(x)|`` for a mode with ``u(0) = 1 <= |u(L)|``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lo, hi, n2 = s.edges[:-1], s.edges[1:], s.n**2
    a = np.minimum(lo[None, :], x[:, None])
    b = np.minimum(hi[None, :], x[:, None])
    # int_a^b (x - y) dy per cell, clipped to [0, x]
    integral = np.sum(n2 * 0.5 * ((x[:, None] - a) ** 2 - (x[:, None] - b) ** 2), axis=1)
    m2 = abs(omega) ** 2
    with np.errstate(over="ignore"):
        out = np.sqrt(1 + m2 * x**2) * np.exp(m2 * integral)
    return out if out.size > 1 else float(out[0])


def oriented_mode(mode: Mode) -> tuple[Mode, bool]:
    """Return the mode in the orientation where ``|u(0)| <= |u(L)|``, rescaled to ``u(0) = 1``.

    The flag reports whether the structure was mirrored.
    """
    from .forward1d import reconstruct_mode

    s = mode.structure
    u0, _ = evaluate_mode(mode, 0.0)
    uL, _ = evaluate_mode(mode, s.L)
    if abs(u0) <= abs(uL):
        return mode.scaled(1 / u0), False
    return reconstruct_mode(s.reversed(), mode.omega, tol=1e-6), True


def in_exclusion_triangle(omega: complex, n_plus: float, L: float) -> bool:
    g = abs(omega.imag)
    return g > abs(omega.real) and g <= 1 / (n_plus**2 * L)


def quality_factor(omega: complex) -> float:
    if omega.imag == 0:
        raise ZeroDivisionError("quality factor undefined for real omega")
    return abs(omega.real) / (2 * abs(omega.imag))


class Parity(Enum):
    EVEN = "even"
    ODD = "odd"
    NEITHER = "neither"


@dataclass(frozen=True)
class ParityResult:
    parity: Parity
    score: float


def sample_grid(mode: Mode, per_wavelength: int = 16, minimum: int = 2001) -> np.ndarray:
    """Mirror-symmetric sample grid with ``per_wavelength`` points per shortest local wavelength."""
    s = mode.structure
    kmax = abs(mode.omega) * float(np.max(s.n))
    n = max(minimum, int(per_wavelength * kmax * s.L / (2 * np.pi)) + 1)
    x = np.linspace(0.0, s.L, n)
    return 0.5 * (x + (s.L - x[::-1]))


def classify_parity(mode: Mode, tol: float = 1e-6, sym_tol: float = 1e-9) -> ParityResult:
    """Even/odd test of ``u`` about ``L/2`` (relative sup-norm of ``u(x) -+ u(L - x)``)."""
    s = mode.structure
    if asymmetry(s) > sym_tol:
        raise InapplicableError("parity is only defined for mirror-symmetric structures")
    x = sample_grid(mode)
    u, _ = evaluate_mode(mode, x)
    ur, _ = evaluate_mode(mode, s.L - x)
    scale = np.max(np.abs(u))
    e = float(np.max(np.abs(u - ur)) / scale)
    o = float(np.max(np.abs(u + ur)) / scale)
    if e < tol and e <= o:
        return ParityResult(Parity.EVEN, e)
    if o < tol:
        return ParityResult(Parity.ODD, o)
    return ParityResult(Parity.NEITHER, min(e, o))


def phase_derivative(mode: Mode, s: Structure | None, x, floor: float = 1e-12):
    """``d/dx arg u`` from the integral formula valid for symmetric structures."""
    s = mode.structure if s is None else s
    w = mode.omega
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u, _ = evaluate_mode(mode, x)
    umax = np.max(np.abs(evaluate_mode(mode, sample_grid(mode, minimum=257))[0]))
    if np.any(np.abs(u) < floor * umax):
        raise InapplicableError("phase derivative undefined where u vanishes")
    inner = cumulative_n2_abs2(mode, x) - cumulative_n2_abs2(mode, np.array([s.L / 2]))[0]
    out = 2 * w.real * abs(w.imag) * inner / np.abs(u) ** 2
    return out if out.size > 1 else float(out[0])


def unwrapped_phase(mode: Mode, x) -> np.ndarray:
    """``arg u`` along ``x`` by nearest-branch continuation (guarded to steps below pi/2)."""
    u, _ = evaluate_mode(mode, x)
    ph = np.angle(u)
    d = np.diff(ph)
    d = (d + np.pi) % (2 * np.pi) - np.pi
    if np.any(np.abs(d) > np.pi / 2):
        raise InapplicableError("phase steps exceed pi/2; sample more densely")
    return np.concatenate([[ph[0]], ph[0] + np.cumsum(d)])


def adaptive_phase(mode: Mode, lo: float, hi: float, n: int = 2001, max_step: float = np.pi / 8,
                   rounds: int = 40):
    """``(x, arg u)`` on ``[lo, hi]``, bisecting wherever the wrapped step exceeds ``max_step``.

    Near-real modes (high Q) turn their phase by about pi over a short stretch
    around each zero of ``Re u``, which a uniform grid can miss.
    """
    x = np.linspace(lo, hi, n)
    u, _ = evaluate_mode(mode, x)
    for _ in range(rounds):
        d = np.angle(u[1:] / u[:-1])
        bad = np.flatnonzero(np.abs(d) > max_step)
        if bad.size == 0:
            break
        mid = 0.5 * (x[bad] + x[bad + 1])
        um, _ = evaluate_mode(mode, mid)
        x = np.insert(x, bad + 1, mid)
        u = np.insert(u, bad + 1, np.atleast_1d(um))
    else:
        raise InapplicableError("phase could not be resolved; u nearly vanishes")
    d = np.angle(u[1:] / u[:-1])
    return x, np.concatenate([[np.angle(u[0])], np.angle(u[0]) + np.cumsum(d)])


def phase_monotone(mode: Mode, exclude: float = 1e-3) -> bool:
    """Unwrapped ``arg u`` is monotone on each half of ``[0, L]`` (away from the centre)."""
    s = mode.structure
    sign = 1.0 if mode.omega.real >= 0 else -1.0
    for lo, hi, direction in ((0.0, s.L / 2 - exclude, -1.0), (s.L / 2 + exclude, s.L, 1.0)):
        n = max(2001, int(64 * abs(mode.omega) * float(np.max(s.n)) * (hi - lo)))
        _, ph = adaptive_phase(mode, lo, hi, n)
        if np.any(np.diff(ph) * direction * sign < -1e-12):
            return False
    return True


@dataclass(frozen=True)
class IntervalBound:
    lhs: float
    rhs: float
    vacuous: bool = False

    @property
    def holds(self) -> bool:
        return self.vacuous or self.lhs >= self.rhs


def interior_interval_bound(pair: ResonancePair, s: Structure, j: int, transitions=None) -> IntervalBound:
    """Lower bound on the length of interior interval ``j`` from the phase monotonicity.

    ``transitions`` is the result of ``optimizer.extract_transitions``; it is
    computed from ``s`` when omitted.
    """
    from .optimizer import extract_transitions

    if transitions is None and np.ptp(s.n) == 0:
        return IntervalBound(0.0, 0.0, vacuous=True)
    tr = extract_transitions(s) if transitions is None else transitions
    if not tr.interior:
        return IntervalBound(0.0, 0.0, vacuous=True)
    if j not in tr.interior:
        raise InapplicableError(f"interval {j} is not interior (interior: {tr.interior})")
    a, b = tr.points[j], tr.points[j + 1]
    x = np.linspace(a, b, 513)
    u, _ = evaluate_mode(pair.mode, x)
    u0, _ = evaluate_mode(pair.mode, 0.0)
    ratio = float(np.min(np.abs(u) ** 2) / abs(u0) ** 2)
    return IntervalBound(b - a, ratio * np.pi / (2 * abs(pair.omega.real)))


def sign_structure_agreement(pair: ResonancePair, s: Structure, n_minus: float, n_plus: float) -> float:
    """Length fraction where ``n`` sits on the side of the midpoint predicted by ``sigma = Im(a w^2 u^2)``.

    Since ``d(Im w)/dn = -2 n Im(a w^2 u^2)`` per unit length, a local minimizer of
    the width (a maximizer of ``Im w``) has ``n = n_plus`` where ``sigma < 0`` and
    ``n = n_minus`` where ``sigma > 0``.
    """
    from .gradient import compute_alpha

    alpha, _ = compute_alpha(pair, s)
    mids = 0.5 * (s.edges[:-1] + s.edges[1:])
    u, _ = evaluate_mode(pair.mode, mids)
    sigma = np.imag(alpha * pair.omega**2 * u**2)
    side = np.where(s.n > 0.5 * (n_minus + n_plus), 1.0, -1.0)
    agree = -np.sign(sigma) == side
    return float(np.sum(s.widths[agree]) / s.L)


def sigma_profile(pair: ResonancePair, s: Structure, x) -> np.ndarray:
    """``Im(alpha w^2 u(x)^2)``, whose sign predicts the optimal index."""
    from .gradient import compute_alpha

    alpha, _ = compute_alpha(pair, s)
    u, _ = evaluate_mode(pair.mode, x)
    return np.imag(alpha * pair.omega**2 * u**2)


def interval_phase_changes(mode: Mode, points, indices=None) -> np.ndarray:
    """Change of unwrapped ``arg u`` across the intervals between consecutive ``points``.

    ``indices`` selects intervals; an interval containing a zero of ``u`` (the
    centre interval of an odd mode) has no continuous phase and is rejected.
    """
    out = []
    if indices is None:
        indices = range(len(points) - 1)
    for k in indices:
        a, b = points[k], points[k + 1]
        n = max(257, int(64 * abs(mode.omega) * float(np.max(mode.structure.n)) * (b - a)))
        _, ph = adaptive_phase(mode, a, b, n)
        out.append(ph[-1] - ph[0])
    return np.array(out)
