"""Resonances of homogeneous disks, balls and slabs with index ``n0`` in vacuum.

For angular momentum ``ell`` the radial matching condition is
``f(n0 w a) h'(w a) - n0 h(w a) f'(n0 w a) = 0`` with ``f`` the regular and
``h`` the outgoing Bessel-type function (cylindrical in 2D, spherical in 3D).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError, ResforgeError, SearchRect
from .forward1d import DivergenceError, _dedup
from .specfun import cyl_bessel_j, cyl_hankel1, sph_bessel_j, sph_hankel1


@dataclass(frozen=True)
class RadialCavity:
    dim: int
    n0: float
    a: float = 1.0
    ell: int = 0

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise DomainError("dim must be 1, 2 or 3")
        if not self.n0 > 1:
            raise DomainError("n0 must exceed 1")
        if not self.a > 0:
            raise DomainError("a must be positive")
        if int(self.ell) != self.ell or self.ell < 0:
            raise DomainError("ell must be a nonnegative integer")
        if self.dim == 1 and self.ell != 0:
            raise DomainError("ell must be 0 in one dimension")

    @property
    def multiplicity(self) -> int:
        if self.dim == 3:
            return 2 * self.ell + 1
        if self.dim == 2 and self.ell >= 1:
            return 2
        return 1


@dataclass(frozen=True)
class RadialResonance:
    omega: complex
    multiplicity: int
    residual: float
    note: str = ""

    def __iter__(self):
        # unpacks as (omega, multiplicity note)
        yield self.omega
        yield self.note


def slab_resonances(n0: float, a: float, m_list) -> list[complex]:
    """Closed-form roots for the slab of half-width ``a``."""
    if n0 == 1:
        raise DomainError("n0 = 1 has no resonances")
    if not n0 > 1 or not a > 0:
        raise DomainError("need n0 > 1 and a > 0")
    im = -math.log((n0 + 1) / (n0 - 1)) / (2 * n0 * a)
    return [complex(math.pi * m / (2 * n0 * a), im) for m in m_list]


def _funcs(c: RadialCavity):
    if c.dim == 2:
        return cyl_bessel_j, cyl_hankel1, 1
    if c.dim == 3:
        return sph_bessel_j, sph_hankel1, 2
    raise DomainError("radial determinant needs dim 2 or 3")


def _det_and_derivative(c: RadialCavity, omega: complex):
    fj, fh, p = _funcs(c)
    w = complex(omega)
    zi, zo = c.n0 * w * c.a, w * c.a
    J = fj(c.ell, zi)
    H = fh(c.ell, zo)
    det = J.value * H.derivative - c.n0 * H.value * J.derivative
    # second derivatives from the radial ODE f'' = -(p/z) f' - (1 - q/z^2) f
    q = c.ell**2 if p == 1 else c.ell * (c.ell + 1)
    J2 = -p / zi * J.derivative - (1 - q / zi**2) * J.value
    H2 = -p / zo * H.derivative - (1 - q / zo**2) * H.value
    ddet = c.a * (J.value * H2 - c.n0**2 * H.value * J2)
    scale = abs(J.value * H.derivative) + abs(c.n0 * H.value * J.derivative)
    return det, ddet, scale


def radial_determinant(c: RadialCavity, omega: complex) -> complex:
    return _det_and_derivative(c, omega)[0]


def asymptotic_resonance(c: RadialCavity, j_index: int) -> complex:
    """High-frequency approximation of the ``j``-th root for angular momentum ``ell``."""
    shift = {1: None, 2: 0.25, 3: 0.5}[c.dim]
    if shift is None:
        raise DomainError("asymptotics are defined for dim 2 and 3")
    re = math.pi / (c.n0 * c.a) * (j_index + shift + c.ell / 2)
    im = -math.log((c.n0 + 1) / (c.n0 - 1)) / (2 * c.n0 * c.a)
    return complex(re, im)


def newton_radial(c: RadialCavity, omega0: complex, tol: float = 1e-13, max_iter: int = 60):
    w = complex(omega0)
    for _ in range(max_iter):
        det, ddet, scale = _det_and_derivative(c, w)
        if abs(det) <= tol * scale:
            return w, abs(det) / scale
        if ddet == 0 or not cmath.isfinite(ddet):
            raise DivergenceError("bad determinant derivative", w)
        step = det / ddet
        if abs(step) > 1.0:
            step /= abs(step)
        w -= step
        if abs(step) < 1e-15 * (1 + abs(w)):
            det, _, scale = _det_and_derivative(c, w)
            if abs(det) <= 1e3 * tol * scale:
                return w, abs(det) / scale
    raise DivergenceError(f"no convergence in {max_iter} iterations", w)


def find_radial_resonances(c: RadialCavity, rect: SearchRect, grid_nx: int | None = None,
                           grid_ny: int = 4, tol: float = 1e-13) -> list[RadialResonance]:
    """Roots of the radial determinant in ``rect``, sorted by real part."""
    if c.dim == 1:
        im = slab_resonances(c.n0, c.a, [1])[0].imag
        spacing = math.pi / (2 * c.n0 * c.a)
        m_lo = max(1, math.ceil(rect.re_min / spacing))
        m_hi = math.floor(rect.re_max / spacing)
        roots = slab_resonances(c.n0, c.a, range(m_lo, m_hi + 1)) if rect.im_min <= im <= rect.im_max else []
        return [RadialResonance(w, 1, 0.0, "closed form") for w in roots]
    spacing = math.pi / (c.n0 * c.a)
    seeds = []
    j = 0
    while True:
        s = asymptotic_resonance(c, j)
        if s.real > rect.re_max + spacing:
            break
        seeds.append(s)
        j += 1
    if grid_nx is None:
        grid_nx = max(4, int(2 * (rect.re_max - rect.re_min) / spacing))
    xs = rect.re_min + (np.arange(grid_nx) + 0.5) / grid_nx * (rect.re_max - rect.re_min)
    ys = rect.im_min + (np.arange(grid_ny) + 0.5) / grid_ny * (rect.im_max - rect.im_min)
    seeds += [complex(x, y) for y in ys for x in xs]
    found = []
    for s0 in seeds:
        try:
            w, res = newton_radial(c, s0, tol)
        except ResforgeError:
            continue
        if rect.contains(w) and w.imag < 0:
            found.append((w, res))
    keep = _dedup([w for w, _ in found])
    out = []
    mult = c.multiplicity
    note = "simple" if mult == 1 else f"multiplicity {mult}"
    for w in keep:
        res = min(r for v, r in found if abs(v - w) <= 1e-8 * (1 + abs(w)))
        out.append(RadialResonance(w, mult, res, note))
    out.sort(key=lambda r: (r.omega.real, r.omega.imag))
    return out


def lowest_branch_resonance(c: RadialCavity, re_max: float | None = None) -> RadialResonance:
    """Lowest-frequency root of the main branch (the ``j = 0`` whispering-gallery family).

    Roots much deeper than the high-frequency width are a separate family
    and are skipped.
    """
    depth = 2 * abs(asymptotic_resonance(c, 0).imag) if c.dim > 1 else 1.0
    if re_max is None:
        re_max = asymptotic_resonance(c, 2).real if c.dim > 1 else 4 * math.pi / (2 * c.n0 * c.a)
    rect = SearchRect(0.05 / c.a, re_max, -depth, -1e-8)
    roots = [r for r in find_radial_resonances(c, rect)]
    if not roots:
        raise ResforgeError(f"no resonance on the main branch below Re = {re_max}")
    return roots[0]
