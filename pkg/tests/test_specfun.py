import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resforge.specfun import (
    NearSingularityError,
    UnsupportedDomainError,
    cyl_bessel_j,
    cyl_hankel1,
    sph_bessel_j,
    sph_hankel1,
)

import oracles



def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def close(res, ref, tol=1e-10):
    v, d = ref
    assert rel(res.value, v) < tol
    assert rel(res.derivative, d) < tol


class TestCylindricalJ:
    def test_at_zero(self):
        r = cyl_bessel_j(0, 0)
        assert r.value == 1 and r.derivative == 0
        r = cyl_bessel_j(1, 0)
        assert r.value == 0 and r.derivative == 0.5

    def test_against_series_oracle(self):
        z = 4.2 - 0.033j
        assert rel(cyl_bessel_j(6, z).value, oracles.j_series(6, z)) < 1e-10
        close(cyl_bessel_j(6, z), oracles.cyl_j(6, z))

    @pytest.mark.parametrize("ell,z", [(0, 1.0), (3, 10 - 2j), (12, 25 + 5j), (30, 59j), (1, -40 + 3j), (7, 55 - 20j)])
    def test_against_mpmath(self, ell, z):
        close(cyl_bessel_j(ell, z), oracles.cyl_j(ell, z))

    @pytest.mark.parametrize("ell,z", [(31, 1), (-1, 1), (1.5, 1), (0, 60.5)])
    def test_domain(self, ell, z):
        with pytest.raises(UnsupportedDomainError):
            cyl_bessel_j(ell, z)


class TestHankel:
    def test_wronskian_fixed(self):
        z = 2 - 0.5j
        for ell in range(10):
            J, H = cyl_bessel_j(ell, z), cyl_hankel1(ell, z)
            w = J.value * H.derivative - J.derivative * H.value
            assert abs(w - 2j / (math.pi * z)) < 1e-9

    @pytest.mark.parametrize("ell,z", [(0, 1.0), (6, 4.2 - 0.033j), (1, 0.06 + 0.01j), (9, 30 - 10j),
                                       (4, -20 + 15j), (25, 45 - 19j), (2, 58 + 5j)])
    def test_against_mpmath(self, ell, z):
        close(cyl_hankel1(ell, z), oracles.cyl_h1(ell, z))

    def test_large_argument_asymptotics(self):
        z = 40.0
        approx = cmath.sqrt(2 / (math.pi * z)) * cmath.exp(1j * (z - math.pi / 4))
        assert rel(cyl_hankel1(0, z).value, approx) < 1e-2

    def test_domain(self):
        with pytest.raises(NearSingularityError):
            cyl_hankel1(0, 0.01)
        with pytest.raises(UnsupportedDomainError):
            cyl_hankel1(0, 5 - 21j)
        with pytest.raises(UnsupportedDomainError):
            cyl_hankel1(0, 61)

    @settings(max_examples=1000)
    @given(st.integers(0, 30), st.floats(-60, 60), st.floats(-20, 60))
    def test_wronskian_property(self, ell, x, y):
        z = complex(x, y)
        if not 0.05 <= abs(z) <= 60:
            return
        J, H = cyl_bessel_j(ell, z), cyl_hankel1(ell, z)
        a, b = J.value * H.derivative, J.derivative * H.value
        # relative to the size of the two products, which is what double rounding allows
        assert abs(a - b - 2j / (math.pi * z)) <= 1e-9 * max(abs(a) + abs(b), abs(2 / (math.pi * z)))

    @settings(max_examples=200)
    @given(st.integers(1, 29), st.floats(-50, 50), st.floats(-20, 40))
    def test_recurrence_property(self, ell, x, y):
        z = complex(x, y)
        if not 0.05 <= abs(z) <= 60:
            return
        for f in (cyl_bessel_j, cyl_hankel1):
            lo, mid, hi = (f(ell + k, z).value for k in (-1, 0, 1))
            assert abs(lo + hi - 2 * ell / z * mid) <= 1e-9 * (abs(lo) + abs(hi) + abs(2 * ell / z * mid))


class TestSpherical:
    def test_j0_closed_form(self):
        z = 0.7 - 0.2j
        assert rel(sph_bessel_j(0, z).value, cmath.sin(z) / z) < 1e-14
        assert abs(sph_bessel_j(0, math.pi).value) < 1e-14

    def test_j1_closed_form(self):
        assert rel(sph_bessel_j(1, 2).value, math.sin(2) / 4 - math.cos(2) / 2) < 1e-14

    def test_h0_closed_form(self):
        z = 1.0
        assert rel(sph_hankel1(0, z).value, -1j * cmath.exp(1j * z) / z) < 1e-15

    @pytest.mark.parametrize("ell,z", [(10, 3 - 1j), (0, 1e-4), (5, 1e-3 + 1e-3j), (30, 2 + 0.5j), (3, 80 - 10j), (20, 99)])
    def test_j_against_mpmath(self, ell, z):
        close(sph_bessel_j(ell, z), oracles.sph_j(ell, z))

    @pytest.mark.parametrize("ell,z", [(6, 4.2 - 0.033j), (0, 0.05), (15, 10 + 2j), (30, 50 - 20j)])
    def test_h_against_mpmath(self, ell, z):
        close(sph_hankel1(ell, z), oracles.sph_h1(ell, z))

    def test_wronskian_fixed(self):
        z = 3 - 0.5j
        for ell in range(10):
            j, h = sph_bessel_j(ell, z), sph_hankel1(ell, z)
            assert abs(j.value * h.derivative - j.derivative * h.value - 1j / z**2) < 1e-10

    @settings(max_examples=1000)
    @given(st.integers(0, 30), st.floats(-100, 100), st.floats(-30, 30))
    def test_wronskian_property(self, ell, x, y):
        z = complex(x, y)
        if not 0.05 <= abs(z) <= 100:
            return
        j, h = sph_bessel_j(ell, z), sph_hankel1(ell, z)
        a, b = j.value * h.derivative, j.derivative * h.value
        assert abs(a - b - 1j / z**2) <= 1e-9 * max(abs(a) + abs(b), abs(1 / z**2))

    @settings(max_examples=300)
    @given(st.integers(1, 29), st.floats(-60, 60), st.floats(-20, 20))
    def test_recurrence_property(self, ell, x, y):
        z = complex(x, y)
        if not 0.05 <= abs(z) <= 100:
            return
        for f in (sph_bessel_j, sph_hankel1):
            lo, mid, hi = (f(ell + k, z).value for k in (-1, 0, 1))
            c = (2 * ell + 1) / z * mid
            assert abs(lo + hi - c) <= 1e-9 * (abs(lo) + abs(hi) + abs(c))

    def test_domain(self):
        with pytest.raises(UnsupportedDomainError):
            sph_bessel_j(0, 1e-9)
        with pytest.raises(UnsupportedDomainError):
            sph_bessel_j(0, 101)
        with pytest.raises(NearSingularityError):
            sph_hankel1(2, 0.01)
