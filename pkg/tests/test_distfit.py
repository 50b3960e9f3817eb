"""Normalization, KS statistic and grid search."""

import numpy as np
import pytest
from sklearn.base import clone

from tweedierank.distfit import (GridSpec, TweedieKSGridSearch,
                                 WatchTimeNormalizer, _KSEvaluator,
                                 grid_search, ks_statistic, normalize,
                                 read_sample, write_grid_table)
from tweedierank.tweedie import TweedieParams, cdf, sample

REF = TweedieParams(0.2, 1.5, 1.5)


class TestNormalizer:
    def test_zero_variance(self):
        with pytest.raises(ValueError):
            normalize([3.0, 3.0, 3.0])

    def test_scale_only_example(self):
        out = normalize([0.0, 0.0, 0.0, 4.0], method="scale", upper_bound=10.0)
        np.testing.assert_allclose(out, [0.0, 0.0, 0.0, 4.0 / np.sqrt(3.0)])

    def test_large_cap_is_noop(self):
        raw = np.array([0.0, 1.0, 2.0, 50.0])
        capped = normalize(raw, method="scale", upper_bound=1e12)
        uncapped = raw / raw.std()
        np.testing.assert_allclose(capped, uncapped)

    def test_zscore_shifted_support_and_atom(self):
        raw = np.array([0.0, 0.0, 0.0, 10.0, 20.0, 30.0])
        out = normalize(raw, method="zscore_shifted", upper_bound=100.0)
        assert out.min() == 0.0
        assert (out == 0.0).sum() == 3  # zeros stay a point mass at the minimum
        sd = raw.std()
        np.testing.assert_allclose(out, (raw - raw.min()) / sd)

    def test_cap_applies(self):
        out = normalize([0.0, 1.0, 100.0], method="scale", upper_bound=1.5)
        assert out.max() == 1.5

    def test_transformer_api(self):
        norm = WatchTimeNormalizer(method="scale", upper_bound=5.0)
        fitted = norm.fit([0.0, 2.0, 4.0])
        out = fitted.transform([2.0])
        assert out[0] == pytest.approx(2.0 / np.array([0.0, 2.0, 4.0]).std())
        assert clone(norm).get_params() == norm.get_params()

    def test_errors(self):
        with pytest.raises(ValueError):
            normalize([], method="scale")
        with pytest.raises(ValueError):
            normalize([-1.0, 2.0])
        with pytest.raises(ValueError):
            normalize([1.0, 2.0], method="bogus")
        with pytest.raises(ValueError):
            normalize([1.0, 2.0], upper_bound=0.0)


class TestKsStatistic:
    def test_all_zeros_sample(self):
        d = ks_statistic(np.zeros(100), REF)
        assert d == pytest.approx(1.0 - 0.5508543766286688, rel=1e-10)

    def test_self_sample_small(self):
        draws = sample(REF, 10**5, seed=123)
        assert ks_statistic(draws, REF) < 0.01

    def test_permutation_invariance(self):
        draws = sample(REF, 2000, seed=5)
        gen = np.random.default_rng(1)
        assert ks_statistic(gen.permutation(draws), REF) == ks_statistic(draws, REF)

    def test_bounds(self):
        for seed in range(5):
            draws = sample(TweedieParams(1.0, 1.0, 1.5), 500, seed=seed)
            d = ks_statistic(draws, REF)
            assert 0.0 <= d <= 1.0

    def test_matches_pointwise_reference(self):
        # direct evaluation of the sup over candidate points
        draws = sample(REF, 500, seed=8)
        n = draws.size
        zero_frac = (draws == 0.0).mean()
        vals, counts = np.unique(draws[draws > 0], return_counts=True)
        hi = zero_frac + np.cumsum(counts) / n
        lo = hi - counts / n
        f = cdf(REF, vals)
        ref = max(abs(zero_frac - cdf(REF, 0.0)),
                  np.max(hi - f), np.max(f - lo))
        assert ks_statistic(draws, REF) == pytest.approx(ref, abs=1e-14)

    def test_rejects_bad_samples(self):
        with pytest.raises(ValueError):
            ks_statistic([], REF)
        with pytest.raises(ValueError):
            ks_statistic([-0.5, 1.0], REF)

    def test_adaptive_equals_exact(self):
        draws = sample(REF, 10**5, seed=42)
        ev = _KSEvaluator(draws)
        gen = np.random.default_rng(0)
        for _ in range(30):
            params = TweedieParams(mu=float(gen.uniform(0.05, 0.5)),
                                   phi=float(gen.uniform(0.5, 2.5)),
                                   p=float(gen.uniform(1.05, 1.95)))
            assert ev.adaptive(params) == pytest.approx(ev.exact(params),
                                                        abs=1e-14)


class TestGridSpec:
    def test_axis_values_inclusive(self):
        spec = GridSpec(mu_grid=(0.1, 0.3, 0.1), p_grid=(1.2, 1.8, 0.3),
                        phi_grid=(1.0, 1.0, 0.5))
        np.testing.assert_allclose(spec.mu_values(), [0.1, 0.2, 0.3])
        np.testing.assert_allclose(spec.p_values(), [1.2, 1.5, 1.8])
        np.testing.assert_allclose(spec.phi_values(), [1.0])
        assert len(spec.points()) == 9

    def test_default_grid_size(self):
        spec = GridSpec()
        assert len(spec.mu_values()) == 10
        assert len(spec.p_values()) == 19
        assert len(spec.phi_values()) == 41

    def test_validation(self):
        with pytest.raises(ValueError):
            GridSpec(p_grid=(0.9, 1.5, 0.1)).p_values()
        with pytest.raises(ValueError):
            GridSpec(p_grid=(1.5, 2.0, 0.1)).p_values()
        with pytest.raises(ValueError):
            GridSpec(mu_grid=(0.1, 0.5, 0.0)).mu_values()
        with pytest.raises(ValueError):
            GridSpec(phi_grid=(2.0, 1.0, 0.1)).phi_values()


class TestGridSearch:
    def test_single_point(self):
        draws = sample(REF, 2000, seed=3)
        spec = GridSpec(mu_grid=(0.2, 0.2, 0.1), p_grid=(1.5, 1.5, 0.1),
                        phi_grid=(1.5, 1.5, 0.1))
        best, ks, table = grid_search(draws, spec)
        assert best == REF
        assert ks == pytest.approx(ks_statistic(draws, REF), abs=1e-14)
        assert table.shape == (1, 4)

    def test_widening_never_hurts(self):
        draws = sample(REF, 5000, seed=4)
        narrow = GridSpec(mu_grid=(0.15, 0.25, 0.05), p_grid=(1.4, 1.6, 0.1),
                          phi_grid=(1.0, 2.0, 0.5))
        wide = GridSpec(mu_grid=(0.1, 0.3, 0.05), p_grid=(1.3, 1.7, 0.1),
                        phi_grid=(0.5, 2.5, 0.5))
        _, ks_narrow, _ = grid_search(draws, narrow)
        _, ks_wide, _ = grid_search(draws, wide)
        assert ks_wide <= ks_narrow + 1e-14

    def test_parallel_matches_serial(self):
        draws = sample(REF, 5000, seed=6)
        spec = GridSpec(mu_grid=(0.1, 0.3, 0.1), p_grid=(1.3, 1.7, 0.2),
                        phi_grid=(1.0, 2.0, 0.5))
        best1, ks1, table1 = grid_search(draws, spec, n_jobs=1)
        best2, ks2, table2 = grid_search(draws, spec, n_jobs=2)
        assert best1 == best2 and ks1 == ks2
        np.testing.assert_array_equal(table1, table2)

    def test_deterministic_table(self):
        draws = sample(REF, 3000, seed=9)
        spec = GridSpec(mu_grid=(0.1, 0.3, 0.1), p_grid=(1.4, 1.6, 0.1),
                        phi_grid=(1.0, 2.0, 1.0))
        _, _, a = grid_search(draws, spec)
        _, _, b = grid_search(draws, spec)
        np.testing.assert_array_equal(a, b)

    def test_tie_break_smallest_p_mu_phi(self, monkeypatch):
        draws = sample(REF, 200, seed=1)
        monkeypatch.setattr(_KSEvaluator, "adaptive", lambda self, params: 0.25)
        spec = GridSpec(mu_grid=(0.1, 0.3, 0.1), p_grid=(1.2, 1.8, 0.2),
                        phi_grid=(0.5, 1.5, 0.5))
        best, ks, table = grid_search(draws, spec)
        assert ks == 0.25
        assert (best.p, best.mu, best.phi) == (1.2, 0.1, 0.5)

    def test_small_self_consistency(self):
        draws = sample(REF, 20000, seed=77)
        spec = GridSpec(mu_grid=(0.1, 0.3, 0.05), p_grid=(1.25, 1.75, 0.05),
                        phi_grid=(1.0, 2.0, 0.25))
        best, ks, _ = grid_search(draws, spec, n_jobs=2)
        assert abs(best.p - 1.5) <= 0.1
        assert ks < 0.05


class TestEstimatorFacade:
    def test_fit_sets_attributes(self):
        draws = sample(REF, 3000, seed=10)
        est = TweedieKSGridSearch(mu_grid=(0.15, 0.25, 0.05),
                                  p_grid=(1.4, 1.6, 0.1),
                                  phi_grid=(1.0, 2.0, 0.5))
        est.fit(draws)
        assert isinstance(est.best_params_, TweedieParams)
        assert 0.0 <= est.best_ks_ <= 1.0
        assert est.results_.shape == (3 * 3 * 3, 4)
        assert clone(est).get_params() == est.get_params()


class TestSampleIO:
    def test_read_sample(self, tmp_path):
        path = tmp_path / "sample.txt"
        path.write_text("# comment\n1.5\n0.0\n2.25\n")
        np.testing.assert_allclose(read_sample(path), [1.5, 0.0, 2.25])

    def test_negative_value_names_line(self, tmp_path):
        path = tmp_path / "sample.txt"
        path.write_text("1.0\n-2.0\n")
        with pytest.raises(ValueError, match="line 2"):
            read_sample(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("")
        with pytest.raises(ValueError, match="empty"):
            read_sample(path)

    def test_grid_table_output(self, tmp_path):
        draws = sample(REF, 1000, seed=2)
        spec = GridSpec(mu_grid=(0.2, 0.2, 0.1), p_grid=(1.5, 1.5, 0.1),
                        phi_grid=(1.0, 2.0, 1.0))
        best, ks, table = grid_search(draws, spec)
        path = tmp_path / "grid.csv"
        write_grid_table(path, best, ks, table, master_seed=2)
        lines = path.read_text().splitlines()
        assert lines[0] == "# master_seed=2"
        assert lines[3] == "mu,p,phi,ks"
        assert len(lines) == 4 + len(table)
