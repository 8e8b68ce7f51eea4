"""Integer-order Bessel and Hankel functions of complex argument.

Cylindrical ``J`` and ``Y`` come from their ascending series.  In double
precision those series lose about ``|z| / ln 10`` digits to cancellation, so
the sums are carried out in ``gmpy2`` multiprecision with that many guard digits and
rounded back to ``complex``.  Spherical ``j`` uses Miller's downward
recurrence and spherical ``h`` the (stable) upward recurrence.

Every routine enforces its validated domain and raises
:class:`UnsupportedDomainError` outside it.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass

import gmpy2

from .core import DomainError

MAX_ORDER = 30
CYL_MAX_ABS = 60.0
HANKEL_MIN_ABS = 0.05
HANKEL_MIN_IMAG = -20.0
SPH_MIN_ABS = 1e-8
SPH_MAX_ABS = 100.0


class UnsupportedDomainError(DomainError):
    pass


class NearSingularityError(UnsupportedDomainError):
    pass


@dataclass(frozen=True)
class BesselResult:
    value: complex
    derivative: complex


def _check_order(ell):
    if int(ell) != ell or not 0 <= ell <= MAX_ORDER:
        raise UnsupportedDomainError(f"order {ell} outside 0..{MAX_ORDER}")
    return int(ell)


def _check_finite(z):
    z = complex(z)
    if not cmath.isfinite(z):
        raise UnsupportedDomainError("non-finite argument")
    return z


def _bits(z: complex) -> int:
    # series terms reach ~exp(|z|); H = J + iY cancels another exp(2 Im z) for Im z > 0
    return 80 + int(1.4427 * (abs(z) + 2 * max(z.imag, 0.0)))


def _j_series(n: int, zh, q):
    """``J_n`` from ``(z/2)^n sum (-z^2/4)^k / (k! (n+k)!)`` with ``zh = z/2``, ``q = -z^2/4``."""
    term = zh**n / gmpy2.fac(n)
    total = term
    k = 0
    eps = gmpy2.mpfr(2) ** (-gmpy2.get_context().precision)
    qa = abs(complex(q)) ** 0.5
    while True:
        k += 1
        term = term * q / (k * (n + k))
        total += term
        if k > qa and abs(term) <= eps * abs(total):
            return total


def _y_series(n: int, zh, q, jn):
    """``Y_n`` by the log term, the finite sum and the digamma-weighted tail."""
    pi = gmpy2.const_pi()
    gamma2 = 2 * gmpy2.const_euler()
    out = 2 / pi * gmpy2.log(zh) * jn
    fin = gmpy2.mpc(0)
    for k in range(n):
        fin += gmpy2.fac(n - k - 1) / gmpy2.fac(k) * zh ** (2 * k - n)
    out -= fin / pi
    # psi(k+1) + psi(n+k+1) with psi(m+1) = -gamma + H_m
    hk = gmpy2.mpfr(0)
    hnk = gmpy2.mpfr(0)
    for i in range(1, n + 1):
        hnk += gmpy2.mpfr(1) / i
    term = zh**n / gmpy2.fac(n)
    tail = term * (hk + hnk - gamma2)
    eps = gmpy2.mpfr(2) ** (-gmpy2.get_context().precision)
    qa = abs(complex(q)) ** 0.5
    k = 0
    while True:
        k += 1
        hk += gmpy2.mpfr(1) / k
        hnk += gmpy2.mpfr(1) / (n + k)
        term = term * q / (k * (n + k))
        piece = term * (hk + hnk - gamma2)
        tail += piece
        if k > qa and abs(piece) <= eps * abs(tail):
            break
    return out - tail / pi


def _cyl_j_values(ell: int, z: complex, orders):
    with gmpy2.context(gmpy2.get_context(), precision=_bits(z)):
        zh = gmpy2.mpc(z) / 2
        q = -zh * zh
        return {m: complex(_j_series(m, zh, q)) for m in orders}


def cyl_bessel_j(ell, z) -> BesselResult:
    """``J_ell(z)`` and ``J_ell'(z)``."""
    ell = _check_order(ell)
    z = _check_finite(z)
    if abs(z) > CYL_MAX_ABS:
        raise UnsupportedDomainError(f"|z| = {abs(z):.3g} exceeds {CYL_MAX_ABS}")
    orders = {ell, ell + 1} | ({ell - 1} if ell > 0 else set())
    v = _cyl_j_values(ell, z, orders)
    d = -v[1] if ell == 0 else (v[ell - 1] - v[ell + 1]) / 2
    return BesselResult(complex(v[ell]), complex(d))


def _hankel_raw(ell: int, z: complex):
    """``H_ell`` and ``H_{ell+1}`` (or ``H_{ell-1}``) in extended precision."""
    with gmpy2.context(gmpy2.get_context(), precision=_bits(z)):
        zh = gmpy2.mpc(z) / 2
        q = -zh * zh
        out = {}
        for m in {ell, ell + 1 if ell == 0 else ell - 1}:
            jm = _j_series(m, zh, q)
            out[m] = complex(jm + 1j * _y_series(m, zh, q, jm))
        return out


def cyl_hankel1(ell, z) -> BesselResult:
    """``H_ell^(1)(z) = J_ell(z) + i Y_ell(z)`` on the principal branch, with derivative."""
    ell = _check_order(ell)
    z = _check_finite(z)
    if abs(z) > CYL_MAX_ABS:
        raise UnsupportedDomainError(f"|z| = {abs(z):.3g} exceeds {CYL_MAX_ABS}")
    if abs(z) < HANKEL_MIN_ABS:
        raise NearSingularityError(f"|z| = {abs(z):.3g} below {HANKEL_MIN_ABS}: log/pole terms dominate")
    if z.imag < HANKEL_MIN_IMAG:
        raise UnsupportedDomainError(f"Im z = {z.imag:.3g} below {HANKEL_MIN_IMAG}")
    h = _hankel_raw(ell, z)
    if ell == 0:
        d = -h[1]
    else:
        d = h[ell - 1] - ell / z * h[ell]
    return BesselResult(h[ell], d)


def _check_sph(z, floor):
    z = _check_finite(z)
    r = abs(z)
    if r > SPH_MAX_ABS:
        raise UnsupportedDomainError(f"|z| = {r:.3g} exceeds {SPH_MAX_ABS}")
    return z, r


def _sph_j_small(ell: int, z: complex) -> complex:
    # leading two terms of the ascending series, for |z| too small to divide by
    num = 1.0
    for k in range(1, ell + 1):
        num *= 2 * k + 1
    return z**ell / num * (1 - z * z / (2 * (2 * ell + 3)))


def _sph_j_all(lmax: int, z: complex) -> list[complex]:
    """``j_0 .. j_lmax`` by Miller's algorithm."""
    r = abs(z)
    start = int(max(lmax, r)) + 20 + int(4 * max(lmax, r) ** 0.5)
    f_next, f = 0j, 1e-300 + 0j
    vals = [0j] * (lmax + 1)
    for k in range(start, -1, -1):
        if k <= lmax:
            vals[k] = f
        f_prev = (2 * k + 1) / z * f - f_next
        f_next, f = f, f_prev
        if abs(f) > 1e250:
            f_next *= 1e-250
            f *= 1e-250
            vals = [v * 1e-250 for v in vals]
    # f now holds the unnormalized j_{-1}; normalize against the larger of j_0, j_1
    j0 = cmath.sin(z) / z
    j1 = cmath.sin(z) / z**2 - cmath.cos(z) / z
    if abs(j0) >= abs(j1) or lmax == 0:
        c = j0 / vals[0]
    else:
        c = j1 / vals[1]
    return [v * c for v in vals]


def sph_bessel_j(ell, z) -> BesselResult:
    """Spherical ``j_ell(z)`` and its derivative."""
    ell = _check_order(ell)
    z, r = _check_sph(z, SPH_MIN_ABS)
    if r < SPH_MIN_ABS:
        raise UnsupportedDomainError(f"|z| = {r:.3g} below {SPH_MIN_ABS}: use the series limit")
    if r < 1e-3:
        v = _sph_j_small(ell, z)
        if ell == 0:
            d = -_sph_j_small(1, z)
        else:
            d = _sph_j_small(ell - 1, z) - (ell + 1) / z * v
        return BesselResult(v, d)
    vals = _sph_j_all(max(ell, 1), z)
    v = vals[ell]
    d = -vals[1] if ell == 0 else vals[ell - 1] - (ell + 1) / z * v
    return BesselResult(v, d)


def _sph_h_upward(ell: int, z: complex, kind: int) -> list[complex]:
    s = 1 if kind == 1 else -1
    e = cmath.exp(s * 1j * z)
    h = [-s * 1j * e / z, -(1 + s * 1j / z) * e / z]
    for k in range(1, ell + 1):
        h.append((2 * k + 1) / z * h[k] - h[k - 1])
    return h


def sph_hankel1(ell, z) -> BesselResult:
    """Spherical ``h_ell^(1)(z)`` with derivative.

    Upward recurrence is stable for the solution that grows with the order.
    For ``Im z >= 0`` that is ``h^(1)`` itself; below the axis ``h^(1)`` is
    dominated at low order by the part that is minimal in ``ell``, so it is
    formed as ``2 j - h^(2)`` with ``h^(2)`` recurred upward instead.
    """
    ell = _check_order(ell)
    z, r = _check_sph(z, HANKEL_MIN_ABS)
    if r < HANKEL_MIN_ABS:
        raise NearSingularityError(f"|z| = {r:.3g} below {HANKEL_MIN_ABS}")
    if z.imag >= 0:
        h = _sph_h_upward(ell, z, 1)
        v = h[ell]
        d = -h[1] if ell == 0 else h[ell - 1] - (ell + 1) / z * v
        return BesselResult(v, d)
    h2 = _sph_h_upward(ell, z, 2)
    v2 = h2[ell]
    d2 = -h2[1] if ell == 0 else h2[ell - 1] - (ell + 1) / z * v2
    j = sph_bessel_j(ell, z)
    return BesselResult(2 * j.value - v2, 2 * j.derivative - d2)
