"""Incomplete gamma/beta kernels against closed forms and scipy."""

import numpy as np
import pytest
import scipy.special as sp

from tweedierank.special import reg_incomplete_beta, reg_lower_incomplete_gamma
from tweedierank.tweedie import _term_window


class TestRegLowerIncompleteGamma:
    def test_closed_form_shape_one(self):
        # P(1, x) = 1 - exp(-x)
        assert reg_lower_incomplete_gamma(1.0, 1.0) == pytest.approx(
            1.0 - np.exp(-1.0), rel=1e-12
        )

    def test_zero_argument(self):
        assert reg_lower_incomplete_gamma(2.5, 0.0) == 0.0

    def test_saturation(self):
        assert reg_lower_incomplete_gamma(0.5, 50.0) == pytest.approx(1.0, abs=1e-12)

    def test_against_scipy(self):
        gen = np.random.default_rng(42)
        a = np.exp(gen.uniform(np.log(0.05), np.log(400.0), 400))
        x = a * np.exp(gen.uniform(-2.0, 2.0, 400))
        mine = reg_lower_incomplete_gamma(a, x)
        ref = sp.gammainc(a, x)
        mask = ref > 1e-280
        rel = np.abs(mine[mask] - ref[mask]) / ref[mask]
        assert rel.max() < 1e-10

    def test_monotone_in_x(self):
        x = np.linspace(0.0, 40.0, 500)
        for a in (0.1, 1.0, 3.7, 25.0):
            vals = reg_lower_incomplete_gamma(a, x)
            assert np.all(np.diff(vals) >= -1e-14)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            reg_lower_incomplete_gamma(0.0, 1.0)
        with pytest.raises(ValueError):
            reg_lower_incomplete_gamma(-1.0, 1.0)
        with pytest.raises(ValueError):
            reg_lower_incomplete_gamma(1.0, -0.5)

    def test_term_window_bounds(self):
        # The window used by the CDF engine must be conservative: the term is
        # 0 below lo and 1 above hi within 1e-14.
        for a in (0.05, 0.3, 1.0, 5.0, 40.0, 400.0):
            lo, hi = _term_window(a)
            if lo > 0:
                assert sp.gammainc(a, lo) < 1e-14
            assert sp.gammainc(a, hi) > 1.0 - 1e-14


class TestRegIncompleteBeta:
    def test_uniform_case(self):
        for x in (0.0, 0.25, 0.5, 0.9, 1.0):
            assert reg_incomplete_beta(1.0, 1.0, x) == pytest.approx(x, abs=1e-13)

    def test_endpoints(self):
        assert reg_incomplete_beta(2.3, 4.5, 0.0) == 0.0
        assert reg_incomplete_beta(2.3, 4.5, 1.0) == 1.0

    def test_symmetry_point(self):
        assert reg_incomplete_beta(2.0, 2.0, 0.5) == pytest.approx(0.5, rel=1e-12)

    def test_against_scipy(self):
        gen = np.random.default_rng(7)
        a = np.exp(gen.uniform(np.log(0.1), np.log(200.0), 300))
        b = np.exp(gen.uniform(np.log(0.1), np.log(200.0), 300))
        x = gen.uniform(0.0, 1.0, 300)
        mine = reg_incomplete_beta(a, b, x)
        ref = sp.betainc(a, b, x)
        mask = ref > 1e-280
        rel = np.abs(mine[mask] - ref[mask]) / ref[mask]
        assert rel.max() < 1e-10

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            reg_incomplete_beta(0.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            reg_incomplete_beta(1.0, -1.0, 0.5)
        with pytest.raises(ValueError):
            reg_incomplete_beta(1.0, 1.0, 1.5)
