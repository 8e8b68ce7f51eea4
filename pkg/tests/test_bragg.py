import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from resforge.bragg import (
    LayeredMedium,
    NoGapError,
    compare_to_bragg,
    dispersion_rhs,
    first_gap_edges,
    harmonic_mean,
    parse_range,
    quarter_wave_widths,
    scan_gamma,
    simplified_rhs,
)
from resforge.core import DomainError, InapplicableError, Structure
from resforge.optimizer import extract_transitions


class TestDispersion:
    def test_zero(self):
        assert dispersion_rhs(LayeredMedium(1.0, 2.0, 0.3), 0.0) == 1.0

    @given(st.floats(1.0, 3.0), st.floats(0.1, 0.9), st.floats(0, 30))
    def test_homogeneous(self, n, b, w):
        assert dispersion_rhs(LayeredMedium(n, n, b), w) == pytest.approx(math.cos(w * n), abs=1e-12)

    def test_center_value(self):
        m = LayeredMedium.quarter_wave(1.0, 2.0)
        w = math.pi / (m.d * m.n_h)
        assert dispersion_rhs(m, w) == pytest.approx(1 - 0.5 * 9 / 2, abs=1e-14)

    @pytest.mark.parametrize("n1,n2", [(1, 2), (1, 3), (1.5, 2.5), (3, 1.2)])
    def test_simplified_identity(self, n1, n2):
        m = LayeredMedium.quarter_wave(n1, n2)
        w = np.linspace(0, 20, 2001)
        assert np.max(np.abs(dispersion_rhs(m, w) - simplified_rhs(n1, n2, 1.0, w))) < 1e-10

    def test_negative(self):
        with pytest.raises(DomainError):
            dispersion_rhs(LayeredMedium(1.0, 2.0, 0.3), -1.0)

    def test_medium_validation(self):
        with pytest.raises(DomainError):
            LayeredMedium(1.0, 2.0, 1.2)


class TestGap:
    def test_quarter_wave_1_2(self):
        g = first_gap_edges(LayeredMedium.quarter_wave(1.0, 2.0))
        assert g.center == pytest.approx(3 * math.pi / 4, abs=1e-8)
        assert g.width == pytest.approx(3 * math.asin(1 / 3), abs=1e-8)
        assert g.ratio == pytest.approx(g.width / g.center, rel=1e-14)

    @pytest.mark.parametrize("n1,n2,d", [(1, 2, 1), (1, 3, 2), (1.5, 2.5, 0.7)])
    def test_center_general(self, n1, n2, d):
        g = first_gap_edges(LayeredMedium.quarter_wave(n1, n2, d))
        nh = harmonic_mean(n1, n2)
        assert g.center == pytest.approx(math.pi / (d * nh), abs=1e-8)
        assert g.width == pytest.approx(4 / (d * nh) * math.asin(abs(n1 - n2) / (n1 + n2)), abs=1e-8)

    def test_edges_on_band(self):
        m = LayeredMedium(1.0, 2.5, 0.4)
        g = first_gap_edges(m)
        for w in (g.omega1, g.omega2):
            assert abs(abs(dispersion_rhs(m, w)) - 1) < 1e-9

    def test_no_gap(self):
        with pytest.raises(NoGapError):
            first_gap_edges(LayeredMedium(1.5, 1.5, 0.5))


class TestQuarterWave:
    def test_values(self):
        dp, dm, period, nh = quarter_wave_widths(3 * math.pi / 4, 2.0, 1.0)
        assert (dp, dm, period) == pytest.approx((1 / 3, 2 / 3, 1.0), abs=1e-15)
        assert nh == pytest.approx(4 / 3)

    def test_equal(self):
        dp, dm, _, _ = quarter_wave_widths(2.0, 1.7, 1.7)
        assert dp == dm

    @given(st.floats(0.1, 50), st.floats(1.0, 4.0), st.floats(1.0, 4.0))
    def test_period_identity(self, w, a, b):
        _, _, period, nh = quarter_wave_widths(w, a, b)
        assert period * nh * w == pytest.approx(math.pi, rel=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            quarter_wave_widths(0.0, 2.0, 1.0)

    def test_gamma_one_is_bragg(self):
        assert LayeredMedium.from_gamma(1.0, 2.0, 1.0, 1.0).b == pytest.approx(LayeredMedium.quarter_wave(1.0, 2.0).b)


class TestScan:
    def test_argmax_coarse(self):
        sc = scan_gamma(1.0, 2.0, 1.0, parse_range("0.05:0.05:1.95"))
        assert abs(sc.argmax - 1.0) <= 0.05 + 1e-12

    @pytest.mark.parametrize("n1,n2", [(1, 2), (1, 3), (1.5, 2.5)])
    def test_argmax_fine(self, n1, n2):
        sc = scan_gamma(n1, n2, 1.0, parse_range("0.01:0.01:1.99"))
        assert abs(sc.argmax - 1.0) <= 0.01 + 1e-12
        assert np.all(sc.ratio[sc.valid] > 0)

    def test_gamma_one_closed_form(self):
        sc = scan_gamma(1.0, 2.0, 1.0, [1.0])
        assert sc.ratio[0] == pytest.approx(3 * math.asin(1 / 3) / (3 * math.pi / 4), abs=1e-8)

    def test_invalid_flagged(self):
        sc = scan_gamma(1.0, 2.0, 1.0, [0.5, 1.6])
        assert list(sc.valid) == [True, False]
        assert math.isnan(sc.ratio[1])

    def test_width_argmax_off_bragg(self):
        # the raw gap width is maximized away from the quarter-wave structure
        sc = scan_gamma(1.0, 2.0, 1.0, parse_range("0.01:0.01:1.49"))
        assert sc.argmax_width != 1.0

    def test_order_independent_of_workers(self):
        g = parse_range("0.1:0.1:1.4")
        a, b = scan_gamma(1, 2, 1, g, workers=1), scan_gamma(1, 2, 1, g, workers=4)
        assert np.array_equal(a.ratio, b.ratio)

    @pytest.mark.parametrize("text", ["1:0:2", "2:0.1:1", "a:b:c", "1:2"])
    def test_bad_range(self, text):
        with pytest.raises(DomainError):
            parse_range(text)

    def test_range_endpoint(self):
        g = parse_range("0.05:0.05:1.95")
        assert len(g) == 39 and g[-1] == 1.95


class TestCompare:
    def bragg_stack(self, w):
        dp, dm, _, _ = quarter_wave_widths(w, 2.0, 1.0)
        c = 1.0 - 4 * dp - 4 * dm
        widths = [dp, dm, dp, dm, c, dm, dp, dm, dp]
        edges = np.concatenate([[0.0], np.cumsum(widths)])
        edges[-1] = 1.0
        return Structure(edges, np.array([2.0, 1, 2, 1, 2, 1, 2, 1, 2]))

    def test_exact_stack(self):
        w = 20.0
        tr = extract_transitions(self.bragg_stack(w), 1.0, 2.0)
        rep = compare_to_bragg(tr, complex(w, -0.01), 2.0, 1.0)
        assert len(rep.intervals) == 8
        assert rep.max_deviation < 1e-12
        assert rep.center_width == pytest.approx(1.0 - 4 * math.pi / (4 * w) - 4 * math.pi / (2 * w))

    def test_center_flag(self):
        w = 20.0
        tr = extract_transitions(self.bragg_stack(w), 1.0, 2.0)
        rep = compare_to_bragg(tr, complex(w, -0.01), 2.0, 1.0)
        assert rep.center_ok == (rep.center_width < 2 * rep.d_plus)

    def test_imaginary(self):
        tr = extract_transitions(Structure.slab(2.0), 1.0, 2.0)
        with pytest.raises(InapplicableError):
            compare_to_bragg(tr, -0.5j, 2.0, 1.0)
