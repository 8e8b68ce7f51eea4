"""Resonances of piecewise-constant 1D structures.

The outgoing state ``(u, u') = (1, -i w)`` is carried across the cells with
exact 2x2 transfer maps; resonances are the zeros of the right boundary
residual ``F(w) = u'(L) - i w u(L)``, an entire function of ``w``.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DomainError,
    Mode,
    ResforgeError,
    ResonancePair,
    SearchRect,
    Structure,
    AdmissibleSet,
)

log = logging.getLogger(__name__)

EPS_TOP = 1e-6


class DegenerateFrequencyError(DomainError):
    pass


class DivergenceError(ResforgeError):
    def __init__(self, message: str, last: complex):
        super().__init__(f"{message}; last iterate {last}")
        self.last = last


class SpuriousRootError(ResforgeError):
    def __init__(self, omega: complex, message: str | None = None):
        super().__init__(message or f"Newton converged to {omega}, which is not in the open lower half plane")
        self.omega = omega


class NotAResonanceError(ResforgeError):
    pass


class BoundaryZeroError(ResforgeError):
    """|F| is too small somewhere on a contour; shift or resample the rectangle."""


@dataclass(frozen=True)
class BoundaryState:
    u: complex
    up: complex
    du_domega: complex
    dup_domega: complex


def _cell_trig(s: Structure, omega: complex):
    k = omega * s.n
    kw = k * s.widths
    return k, np.cos(kw), np.sin(kw)


def _sinc_like(k, w, s):
    """``sin(k w) / k`` without the removable singularity at ``k = 0``."""
    small = np.abs(k * w) < 1e-6
    out = np.empty_like(k)
    out[~small] = s[~small] / k[~small]
    kw2 = (k[small] * w[small]) ** 2
    out[small] = w[small] * (1 - kw2 / 6)
    return out


def _dsinc_like(k, w, c, s):
    """``d/dk [sin(k w) / k] = (k w cos(k w) - sin(k w)) / k^2``."""
    small = np.abs(k * w) < 1e-3
    out = np.empty_like(k)
    ks, ws = k[~small], w[~small]
    out[~small] = (ks * ws * c[~small] - s[~small]) / ks**2
    kl, wl = k[small], w[small]
    out[small] = -kl * wl**3 / 3 + kl**3 * wl**5 / 30
    return out


def _check_omega(omega: complex):
    if omega == 0:
        raise DegenerateFrequencyError("omega = 0 is excluded: the outgoing condition degenerates")


def _sweep(s: Structure, omega: complex, derivative: bool = True, keep: bool = False):
    """Carry ``(u, u')`` and optionally ``d/dw (u, u')`` from x = 0 to x = L.

    With ``keep`` the state at the left edge of every cell is returned as well.
    """
    _check_omega(omega)
    omega = complex(omega)
    n, w = s.n, s.widths
    k, c, sn = _cell_trig(s, omega)
    sk = _sinc_like(k, w, sn)
    m21 = -k * sn
    u, up = 1.0 + 0j, -1j * omega
    if keep:
        states = np.empty((len(n), 2), dtype=complex)
    c_l, sk_l, m21_l = c.tolist(), sk.tolist(), m21.tolist()
    if not derivative:
        for i in range(len(c_l)):
            if keep:
                states[i] = (u, up)
            ci = c_l[i]
            u, up = ci * u + sk_l[i] * up, m21_l[i] * u + ci * up
        return (u, up, 0j, 0j, states if keep else None)
    # derivatives of the cell map entries with respect to omega
    dc = (-n * w * sn).tolist()
    dsk = (n * _dsinc_like(k, w, c, sn)).tolist()
    dm21 = (-n * sn - k * n * w * c).tolist()
    du, dup = 0j, -1j
    for i in range(len(c_l)):
        if keep:
            states[i] = (u, up)
        ci, ski, mi = c_l[i], sk_l[i], m21_l[i]
        du, dup = (dc[i] * u + dsk[i] * up + ci * du + ski * dup,
                   dm21[i] * u + dc[i] * up + mi * du + ci * dup)
        u, up = ci * u + ski * up, mi * u + ci * up
    return (u, up, du, dup, states if keep else None)


def propagate(s: Structure, omega: complex) -> BoundaryState:
    u, up, du, dup, _ = _sweep(s, omega)
    return BoundaryState(u, up, du, dup)


def transfer_matrix(s: Structure, omega: complex) -> np.ndarray:
    """Accumulated 2x2 map taking ``(u, u')(0)`` to ``(u, u')(L)``."""
    _check_omega(omega)
    k, c, sn = _cell_trig(s, complex(omega))
    sk = _sinc_like(k, s.widths, sn)
    M = np.eye(2, dtype=complex)
    for ci, ski, si, ki in zip(c, sk, sn, k):
        M = np.array([[ci, ski], [-ki * si, ci]]) @ M
    return M


def resonance_residual(s: Structure, omega: complex) -> tuple[complex, complex]:
    """``F(w) = u'(L) - i w u(L)`` and its derivative in ``w``."""
    u, up, du, dup, _ = _sweep(s, omega)
    F = up - 1j * omega * u
    dF = dup - 1j * u - 1j * omega * du
    return F, dF


def _residual_batch(s: Structure, omegas: np.ndarray, derivative: bool = True):
    """Vectorized ``F`` (and ``dF``) over an array of frequencies."""
    om = np.asarray(omegas, dtype=complex)
    if np.any(om == 0):
        raise DegenerateFrequencyError("omega = 0 in batch")
    u = np.ones_like(om)
    up = -1j * om
    du = np.zeros_like(om)
    dup = np.full_like(om, -1j)
    for nk, wk in zip(s.n.tolist(), s.widths.tolist()):
        k = om * nk
        kw = k * wk
        c, sn = np.cos(kw), np.sin(kw)
        small = np.abs(kw) < 1e-6
        with np.errstate(invalid="ignore", divide="ignore"):
            sk = np.where(small, wk * (1 - kw**2 / 6), sn / k)
        m21 = -k * sn
        if derivative:
            with np.errstate(invalid="ignore", divide="ignore"):
                dsk = np.where(np.abs(kw) < 1e-3, -k * wk**3 / 3 + k**3 * wk**5 / 30,
                               (kw * c - sn) / k**2) * nk
            dc = -nk * wk * sn
            dm21 = -nk * sn - k * nk * wk * c
            du, dup = dc * u + dsk * up + c * du + sk * dup, dm21 * u + dc * up + m21 * du + c * dup
        u, up = c * u + sk * up, m21 * u + c * up
    F = up - 1j * om * u
    if not derivative:
        return F, None, np.abs(u) + np.abs(up)
    dF = dup - 1j * u - 1j * om * du
    return F, dF, np.abs(u) + np.abs(up)


def _scale(omega: complex, u: complex, up: complex) -> float:
    # size of the two terms that cancel in F at a root
    return 1.0 + abs(up) + abs(omega) * abs(u)


def reconstruct_mode(s: Structure, omega: complex, tol: float = 1e-8) -> Mode:
    """Per-cell exponential coefficients of the outgoing solution with ``u(0) = 1``."""
    omega = complex(omega)
    u, up, _, _, states = _sweep(s, omega, derivative=False, keep=True)
    F = up - 1j * omega * u
    if abs(F) > tol * _scale(omega, u, up):
        raise NotAResonanceError(f"|F({omega})| = {abs(F):.3e} is not a root")
    k = omega * s.n
    ratio = states[:, 1] / (1j * k)
    A = 0.5 * (states[:, 0] + ratio)
    B = 0.5 * (states[:, 0] - ratio)
    A.setflags(write=False)
    B.setflags(write=False)
    return Mode(s, omega, A, B)


def evaluate_mode(m: Mode, x, exterior: bool = False):
    """``(u(x), u'(x))`` from the containing cell.

    Outside ``[0, L]`` the outgoing continuation is used, but only when
    ``exterior`` is set because it grows exponentially for ``Im w < 0``.
    """
    s, w = m.structure, m.omega
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    L = s.L
    outside = (x < 0) | (x > L)
    if np.any(outside) and not exterior:
        raise DomainError("x outside [0, L]; pass exterior=True for the outgoing continuation")
    xi = np.clip(x, 0.0, L)
    idx = s.cell_index(xi)
    k = w * s.n[idx]
    t = xi - s.edges[idx]
    ep = np.exp(1j * k * t)
    em = np.exp(-1j * k * t)
    u = m.A[idx] * ep + m.B[idx] * em
    up = 1j * k * (m.A[idx] * ep - m.B[idx] * em)
    if np.any(outside):
        u0, _ = evaluate_mode(m, 0.0)
        uL, _ = evaluate_mode(m, L)
        left, right = x < 0, x > L
        u[left] = u0 * np.exp(-1j * w * x[left])
        up[left] = -1j * w * u[left]
        u[right] = uL * np.exp(1j * w * (x[right] - L))
        up[right] = 1j * w * u[right]
    if scalar:
        return complex(u[0]), complex(up[0])
    return u, up


def newton_resonance(s: Structure, omega0: complex, tol: float = 1e-12, max_iter: int = 60,
                     max_step: float | None = None) -> ResonancePair:
    """Newton's method on ``F`` from ``omega0``; returns a certified pair."""
    if not tol > 0:
        raise DomainError("tol must be positive")
    w = complex(omega0)
    if w.imag > tol * (1 + abs(w)):
        raise SpuriousRootError(w, f"start {w} lies in the upper half plane, where F has no zeros")
    depth = float(np.max(s.n)) * s.L
    for it in range(max_iter + 1):
        if abs(w.imag) * depth > 600:
            raise DivergenceError("iterate left the range where cos/sin are finite", w)
        u, up, du, dup, _ = _sweep(s, w)
        F = up - 1j * w * u
        dF = dup - 1j * u - 1j * w * du
        if not (cmath.isfinite(F) and cmath.isfinite(dF)):
            raise DivergenceError("non-finite residual", w)
        scale = _scale(w, u, up)
        if abs(F) <= tol * scale:
            if w.imag >= 0:
                raise SpuriousRootError(w)
            mode = reconstruct_mode(s, w, tol=max(1e3 * tol, 1e-8))
            return ResonancePair(w, mode, abs(F), it, dF)
        if dF == 0:
            raise DivergenceError("zero derivative", w)
        step = F / dF
        if max_step is not None and abs(step) > max_step:
            step *= max_step / abs(step)
        w = w - step
        if w == 0:
            raise DivergenceError("iterate hit omega = 0", w)
        if abs(step) <= 1e-15 * (1 + abs(w)) and abs(F) <= 1e3 * tol * scale:
            # step stagnated at rounding level: accept the looser residual
            if w.imag >= 0:
                raise SpuriousRootError(w)
            mode = reconstruct_mode(s, w, tol=max(1e3 * tol, 1e-8))
            return ResonancePair(w, mode, abs(F), it + 1, dF)
    raise DivergenceError(f"no convergence in {max_iter} iterations", w)


def _boundary_points(rect: SearchRect, n: int) -> np.ndarray:
    """Counter-clockwise closed contour with samples spread by edge length."""
    wr = rect.re_max - rect.re_min
    hi = rect.im_max - rect.im_min
    per = 2 * (wr + hi)
    nw = max(4, int(round(n * wr / per)))
    nh = max(4, int(round(n * hi / per)))
    t_w = np.linspace(0, 1, nw, endpoint=False)
    t_h = np.linspace(0, 1, nh, endpoint=False)
    bottom = rect.re_min + wr * t_w + 1j * rect.im_min
    right = rect.re_max + 1j * (rect.im_min + hi * t_h)
    top = rect.re_max - wr * t_w + 1j * rect.im_max
    left = rect.re_min + 1j * (rect.im_max - hi * t_h)
    pts = np.concatenate([bottom, right, top, left])
    return np.append(pts, pts[0])


def count_zeros(s: Structure, rect: SearchRect, n_boundary_samples: int = 256,
                max_samples: int = 1 << 17, floor: float = 1e-13) -> int:
    """Number of zeros of ``F`` inside ``rect`` from the winding of ``arg F`` along its boundary."""
    n = n_boundary_samples
    prev_jump = None
    while True:
        pts = _boundary_points(rect, n)
        F, _, size = _residual_batch(s, pts, derivative=False)
        # F ~ -2i w near the excluded point w = 0; dividing it out keeps the
        # winding (0 is never inside) but removes the phase swing along Im w = -eps
        F = F / pts
        if np.any(np.abs(F) <= floor * (1 + size)):
            raise BoundaryZeroError("F vanishes (numerically) on the contour; shift the rectangle")
        dphi = np.angle(F[1:] / F[:-1])
        total = dphi.sum() / (2 * np.pi)
        resolved = np.max(np.abs(dphi)) < np.pi / 4
        if resolved and abs(total - round(total)) < 0.01:
            return int(round(total))
        # a zero on the contour shows up as a phase jump of pi that stays put under refinement
        k = int(np.argmax(np.abs(dphi)))
        at = 0.5 * (pts[k] + pts[k + 1])
        if abs(dphi[k]) > 0.9 * np.pi:
            if prev_jump is not None and abs(at - prev_jump[0]) <= prev_jump[1]:
                raise BoundaryZeroError(f"F has a zero on the contour near {at:.6g}; shift the rectangle")
            prev_jump = (at, 2 * abs(pts[k + 1] - pts[k]))
        else:
            prev_jump = None
        if n >= max_samples:
            raise BoundaryZeroError(f"winding not resolved with {n} samples (raw {total:.4f})")
        n *= 2


class ResonanceList(list):
    """Sorted resonance pairs plus the completeness verdict of the argument-principle check."""

    def __init__(self, pairs=(), expected: int | None = None, rect: SearchRect | None = None):
        super().__init__(pairs)
        self.expected = expected
        self.rect = rect
        self.failures = 0

    @property
    def complete(self) -> bool:
        return self.expected is None or self.expected == len(self)

    @property
    def warning(self) -> str | None:
        if self.complete:
            return None
        return (f"found {len(self)} distinct resonances but the contour count is {self.expected}"
                " (missed roots or multiplicity > 1)")


def _batch_newton(s: Structure, starts: np.ndarray, rect: SearchRect, iters: int = 40) -> np.ndarray:
    """Run Newton from every start at once; return the iterates that settled inside ``rect``."""
    w = np.asarray(starts, dtype=complex).copy()
    alive = np.ones(w.shape, dtype=bool)
    span = max(rect.re_max - rect.re_min, rect.im_max - rect.im_min)
    for _ in range(iters):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        F, dF, _ = _residual_batch(s, w[idx])
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            step = F / dF
        bad = ~np.isfinite(step)
        step = np.where(bad, 0, step)
        w[idx] -= step
        far = (np.abs(w[idx] - (rect.re_min + rect.re_max) / 2 - 1j * (rect.im_min + rect.im_max) / 2)
               > 2 * span) | bad | (w[idx] == 0)
        alive[idx[far]] = False
        done = np.abs(step) < 1e-11 * (1 + np.abs(w[idx]))
        alive[idx[done]] = False
        w[idx[far]] = np.nan
    return w[np.isfinite(w)]


def _dedup(ws, radius_rel: float = 1e-8):
    out = []
    for w in sorted(ws, key=lambda z: (z.real, z.imag)):
        if all(abs(w - v) > radius_rel * (1 + abs(w)) for v in out):
            out.append(w)
    return out


def find_resonances(s: Structure, rect: SearchRect, grid_nx: int = 24, grid_ny: int = 6,
                    tol: float = 1e-12, n_boundary_samples: int = 256) -> ResonanceList:
    """Newton from a grid of starts, deduplicated and cross-checked against :func:`count_zeros`."""
    if grid_nx < 2 or grid_ny < 2:
        raise DomainError("grid must be at least 2x2")
    try:
        expected = count_zeros(s, rect, n_boundary_samples)
    except BoundaryZeroError as exc:
        log.warning("contour count unavailable: %s", exc)
        expected = None
    roots: list[complex] = []
    failures = 0
    nx, ny = grid_nx, grid_ny
    for attempt in range(2):
        xs = rect.re_min + (np.arange(nx) + 0.5) / nx * (rect.re_max - rect.re_min)
        ys = rect.im_min + (np.arange(ny) + 0.5) / ny * (rect.im_max - rect.im_min)
        starts = (xs[None, :] + 1j * ys[:, None]).ravel()
        starts = starts[starts != 0]
        cand = _batch_newton(s, starts, rect)
        cand = [complex(c) for c in cand if rect.contains(complex(c), pad=1e-9 * (1 + abs(c)))]
        for c in _dedup(cand):
            try:
                pair = newton_resonance(s, c, tol=tol)
            except ResforgeError:
                failures += 1
                continue
            if rect.contains(pair.omega) and all(
                    abs(pair.omega - r.omega) > 1e-8 * (1 + abs(pair.omega)) for r in roots):
                roots.append(pair)
        if expected is None or len(roots) >= expected:
            break
        nx, ny = 2 * nx, 2 * ny
    roots.sort(key=lambda p: (p.omega.real, p.omega.imag))
    out = ResonanceList(roots, expected, rect)
    out.failures = failures
    if not out.complete:
        log.warning(out.warning)
    return out


@dataclass(frozen=True)
class MinWidth:
    gamma: float
    pair: ResonancePair
    window: SearchRect


def min_width(s: Structure, a: AdmissibleSet, im_floor: float = -2.0, re_pad: float = 0.05,
              grid_density: float = 4.0) -> MinWidth | None:
    """Smallest ``|Im w|`` over resonances with ``0 <= Re w <= rho`` above ``im_floor``.

    Only the window ``Im w >= im_floor`` is searched; ``None`` means no
    resonance there (the infimum is infinite as far as that window certifies).
    """
    if not im_floor < 0:
        raise DomainError("im_floor must be negative")
    rho = a.rho if math.isfinite(a.rho) else 20.0
    rect = SearchRect(-re_pad, rho, im_floor, -EPS_TOP)
    spacing = math.pi / (float(np.max(s.n)) * s.L)
    nx = max(4, int(grid_density * (rho + re_pad) / spacing))
    ny = max(3, int(abs(im_floor) * 4))
    roots = [p for p in find_resonances(s, rect, nx, ny) if p.omega.real >= -1e-12]
    if not roots:
        return None
    best = min(roots, key=lambda p: abs(p.omega.imag))
    return MinWidth(abs(best.omega.imag), best, rect)


def transmission(s: Structure, omega_real: float) -> tuple[complex, complex]:
    """Transmission and reflection for a unit wave incident from the left."""
    w = float(omega_real)
    if not w > 0:
        raise DomainError("transmission needs omega > 0")
    P = transfer_matrix(s, w)
    a = 1j * w * P[0, 0] - P[1, 0]
    b = -(w**2) * P[0, 1] - 1j * w * P[1, 1]
    r = -(a + b) / (a - b)
    t = cmath.exp(-1j * w * s.L) * (P[0, 0] * (1 + r) + 1j * w * P[0, 1] * (1 - r))
    return complex(t), complex(r)
