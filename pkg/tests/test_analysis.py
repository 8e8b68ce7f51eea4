import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_structure, structures
from resforge.analysis import (
    Parity,
    classify_parity,
    closed_form_width_bound,
    in_exclusion_triangle,
    interior_interval_bound,
    lower_bound_width,
    phase_derivative,
    phase_monotone,
    pointwise_bound,
    quality_factor,
    variational_residuals,
    width_from_identity,
)
from resforge.core import InapplicableError, SearchRect, Structure
from resforge.forward1d import evaluate_mode, find_resonances, newton_resonance

LN3 = math.log(3)
RECT = SearchRect(0.05, 15.0, -3.0, -1e-6)


@pytest.fixture(scope="module")
def slab_pair():
    return newton_resonance(Structure.slab(2.0), 1.5 - 0.5j)


@pytest.fixture(scope="module")
def random_suite():
    rng = np.random.default_rng(2024)
    out = []
    for _ in range(50):
        s = random_structure(rng, int(rng.integers(1, 9)))
        out.append((s, find_resonances(s, RECT, grid_nx=48, grid_ny=6)))
    return out


@pytest.fixture(scope="module")
def symmetric_suite():
    rng = np.random.default_rng(77)
    out = []
    for _ in range(12):
        s = random_structure(rng, int(rng.integers(1, 8)), symmetric=True)
        out.append((s, find_resonances(s, SearchRect(0.05, 12.0, -3.0, -1e-6), grid_nx=40)))
    return out


class TestIdentities:
    def test_slab(self, slab_pair):
        r = variational_residuals(slab_pair)
        assert r.re_residual < 1e-8 and r.im_residual < 1e-8
        assert width_from_identity(slab_pair) == pytest.approx(LN3 / 2, rel=1e-8)

    def test_homogeneity(self, slab_pair):
        scaled = type(slab_pair)(slab_pair.omega, slab_pair.mode.scaled(3.0), slab_pair.residual,
                                 slab_pair.iterations, slab_pair.dF)
        a, b = variational_residuals(slab_pair), variational_residuals(scaled)
        assert b.re_residual == pytest.approx(a.re_residual, abs=1e-14)
        assert b.im_residual == pytest.approx(a.im_residual, abs=1e-14)
        assert width_from_identity(scaled) == pytest.approx(width_from_identity(slab_pair), rel=1e-13)

    def test_quadrature_cross_check(self, rng):
        s = random_structure(rng, 8)
        for p in find_resonances(s, SearchRect(0.3, 8.0, -2.0, -1e-4)):
            r = variational_residuals(p, method="gauss")
            assert max(r.re_residual, r.im_residual) < 1e-8

    def test_random_suite(self, random_suite):
        total = 0
        for _, roots in random_suite:
            for p in roots:
                r = variational_residuals(p)
                assert max(r.re_residual, r.im_residual, r.width_identity_residual) < 1e-8
                total += 1
        assert total > 100

    def test_width_identity_imaginary_root(self):
        p = newton_resonance(Structure.slab(2.0), -0.5j)
        assert abs(p.omega.real) < 1e-12
        with pytest.raises(InapplicableError):
            width_from_identity(p)


class TestBounds:
    def test_closed_form_value(self):
        assert closed_form_width_bound(0.0, 2.0, 1.0) == pytest.approx(3 / (13 * math.e), rel=1e-14)
        assert closed_form_width_bound(0.0, 2.0, 1.0) == pytest.approx(0.08489, abs=1e-5)

    def test_closed_form_domain(self):
        with pytest.raises(InapplicableError):
            closed_form_width_bound(1.0, 0.3, 1.0)

    @given(st.floats(0, 20), st.floats(1.0, 4.0), st.floats(0.2, 3.0))
    def test_optimized_dominates_closed_form(self, re, n_plus, L):
        assert lower_bound_width(re, n_plus, L) >= closed_form_width_bound(re, n_plus, L) * (1 - 1e-12)

    def test_decay(self):
        vals = [lower_bound_width(r, 2.0, 1.0) for r in (0, 1, 2, 4, 8)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert lower_bound_width(30.0, 2.0, 1.0) < 1e-300 or lower_bound_width(30.0, 2.0, 1.0) == 0.0

    def test_random_suite_respects_bound(self, random_suite):
        for s, roots in random_suite:
            for p in roots:
                assert abs(p.omega.imag) >= lower_bound_width(abs(p.omega.real), float(np.max(s.n)), s.L)

    def test_pointwise_at_zero(self, slab_pair):
        assert pointwise_bound(0.0, slab_pair.omega, Structure.slab(2.0)) == 1.0

    @given(st.floats(0, 1), st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
    def test_pointwise_constant_closed_form(self, x, w):
        got = pointwise_bound(x, w, Structure.slab(2.0))
        m2 = abs(w) ** 2
        assert got == pytest.approx(math.sqrt(1 + m2 * x * x) * math.exp(m2 * 4 * x * x / 2), rel=1e-12)

    @pytest.mark.parametrize("n0", [1.5, 2.0, 4.0])
    def test_pointwise_slab_modes(self, n0):
        s = Structure.slab(n0)
        x = np.linspace(0, 1, 1000)
        for p in find_resonances(s, SearchRect(0.1, 10.0, -2.0, -1e-3)):
            u, _ = evaluate_mode(p.mode, x)
            assert np.all(np.abs(u) <= pointwise_bound(x, p.omega, s) * (1 + 1e-12))


class TestTriangleAndQ:
    def test_examples(self):
        assert in_exclusion_triangle(0.1 - 0.2j, 2.0, 1.0)
        assert not in_exclusion_triangle(1 - 0.2j, 2.0, 1.0)

    def test_symmetric_suite_outside(self, symmetric_suite):
        for s, roots in symmetric_suite:
            for p in roots:
                assert not in_exclusion_triangle(p.omega, float(np.max(s.n)), s.L)

    def test_q(self):
        assert quality_factor(1 - 0.5j) == 1.0
        assert quality_factor(math.pi / 2 - 0.5j * LN3) == pytest.approx(math.pi / 2 / LN3, rel=1e-14)
        assert quality_factor(math.pi / 2 - 0.5j * LN3) == pytest.approx(1.4297, abs=2e-4)

    def test_q_real_axis(self):
        with pytest.raises(ZeroDivisionError):
            quality_factor(2.0 + 0j)

    def test_q_vanishes_on_imaginary_axis(self):
        p = newton_resonance(Structure.slab(2.0), -0.5j)
        assert quality_factor(p.omega) < 1e-12


class TestParity:
    def test_slab_modes(self):
        # closed form: u = cos(k(x - 1/2)) or sin(k(x - 1/2)) up to a factor; m odd gives odd
        s = Structure.slab(2.0)
        for m in (1, 2, 3, 4):
            w = (m * math.pi - 1j * LN3) / 2
            p = newton_resonance(s, w)
            r = classify_parity(p.mode)
            assert r.parity == (Parity.ODD if m % 2 else Parity.EVEN)
            x = np.linspace(0, 1, 101)
            u, _ = evaluate_mode(p.mode, x)
            k = 2 * p.omega
            ref = np.sin(k * (x - 0.5)) if m % 2 else np.cos(k * (x - 0.5))
            good = np.abs(ref) > 1e-3
            ratio = u[good] / ref[good]
            assert np.ptp(np.abs(ratio)) < 1e-9 * np.max(np.abs(ratio))

    def test_asymmetric_rejected(self):
        s = Structure(np.array([0, 0.3, 1.0]), np.array([1.5, 2.0]))
        p = find_resonances(s, SearchRect(0.3, 5, -2, -1e-3))[0]
        with pytest.raises(InapplicableError):
            classify_parity(p.mode)

    def test_symmetric_suite(self, symmetric_suite):
        for _, roots in symmetric_suite:
            for p in roots:
                r = classify_parity(p.mode)
                assert r.parity in (Parity.EVEN, Parity.ODD)
                assert r.score < 1e-6


class TestPhase:
    def test_centre_even(self):
        p = newton_resonance(Structure.slab(2.0), math.pi - 0.5j * LN3)
        assert classify_parity(p.mode).parity == Parity.EVEN
        assert phase_derivative(p.mode, None, 0.5) == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_fd(self, m):
        p = newton_resonance(Structure.slab(2.0), (m * math.pi - 1j * LN3) / 2)
        x = np.linspace(0.02, 0.98, 25)
        x = x[np.abs(x - 0.5) > 0.05]
        h = 1e-6
        up, _ = evaluate_mode(p.mode, x + h)
        um, _ = evaluate_mode(p.mode, x - h)
        fd = np.angle(up / um) / (2 * h)
        got = phase_derivative(p.mode, None, x)
        assert np.all(np.abs(got - fd) <= 1e-5 * np.abs(fd))

    def test_sign(self, symmetric_suite):
        for s, roots in symmetric_suite:
            for p in roots:
                x = np.linspace(0.01, 0.99, 41) * s.L
                x = x[np.abs(x - s.L / 2) > 0.01]
                try:
                    d = phase_derivative(p.mode, s, x)
                except InapplicableError:
                    continue
                assert np.all(np.sign(d) == np.sign(x - s.L / 2))

    def test_monotone_suite(self, symmetric_suite):
        for _, roots in symmetric_suite:
            for p in roots:
                assert phase_monotone(p.mode)

    @given(structures(max_cells=6, symmetric=True))
    @settings(max_examples=10)
    def test_monotone_property(self, s):
        for p in find_resonances(s, SearchRect(0.3, 6.0, -2.0, -1e-4)):
            assert phase_monotone(p.mode)


class TestIntervalBound:
    def test_slab_vacuous(self, slab_pair):
        b = interior_interval_bound(slab_pair, Structure.slab(2.0), 0)
        assert b.vacuous and b.holds

    def test_rhs_below_quarter_wave(self):
        # symmetric 9-interval stack n+/n- with transitions at the quarter-wave positions
        w0 = 10.0
        dp, dm = math.pi / (2 * 2.0 * w0), math.pi / (2 * 1.0 * w0)
        widths = [dp, dm, dp, dm]
        centre = 1.0 - 2 * sum(widths)
        cells = widths + [centre] + widths[::-1]
        n = [2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0]
        edges = np.concatenate([[0.0], np.cumsum(cells)])
        edges[-1] = 1.0
        s = Structure(edges, np.array(n))
        p = find_resonances(s, SearchRect(0.5, 20.0, -2.0, -1e-4))
        assert p
        pair = min(p, key=lambda q: abs(q.omega.imag))
        from resforge.optimizer import extract_transitions
        tr = extract_transitions(s, 1.0, 2.0)
        assert tr.interior
        for k in tr.interior:
            b = interior_interval_bound(pair, s, k, tr)
            assert b.lhs == pytest.approx(tr.points[k + 1] - tr.points[k], abs=1e-15)
            u0 = abs(evaluate_mode(pair.mode, 0.0)[0])
            xs = np.linspace(tr.points[k], tr.points[k + 1], 513)
            if np.min(np.abs(evaluate_mode(pair.mode, xs)[0])) <= u0:
                assert b.rhs <= math.pi / (2 * 1.0 * abs(pair.omega.real)) + 1e-15

    def test_not_interior(self, slab_pair):
        s = Structure(np.array([0, 0.2, 0.4, 0.6, 0.8, 1.0]), np.array([2.0, 1.0, 2.0, 1.0, 2.0]))
        p = find_resonances(s, SearchRect(0.3, 6, -2, -1e-3))[0]
        with pytest.raises(InapplicableError):
            interior_interval_bound(p, s, 99)
