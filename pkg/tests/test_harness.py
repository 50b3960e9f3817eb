"""Protocol execution, replication, lifts, significance, report emission."""

import json

import numpy as np
import pytest

from tweedierank.harness import (ExperimentReport, ProtocolConfig,
                                 emit_report, run_many, run_protocol)
from tweedierank.losses import LOGLOSS, LossKind, TWEEDIE
from tweedierank.ranker import TrainConfig
from tweedierank.simulate import World, WorldConfig

SMALL_WORLD = WorldConfig(n_users=120, n_titles=40, master_seed=21)
FAST_TRAIN = TrainConfig(epochs=4)


def small_config(**kwargs):
    base = dict(world=SMALL_WORLD, train=FAST_TRAIN, kinds=(TWEEDIE, LOGLOSS),
                editorial_days=2, total_days=5, n_runs=2)
    base.update(kwargs)
    return ProtocolConfig(**base)


class TestProtocolConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            small_config(kinds=())
        with pytest.raises(ValueError):
            small_config(editorial_days=6, total_days=5)
        with pytest.raises(ValueError):
            small_config(editorial_days=0)
        with pytest.raises(ValueError):
            small_config(n_runs=1)

    def test_run_seed_derivation(self):
        cfg = small_config()
        assert cfg.run_seed(0) != cfg.run_seed(1)
        assert cfg.run_seed(0) == small_config().run_seed(0)

    def test_echo_serializable(self):
        echo = small_config().echo()
        json.dumps(echo)
        assert echo["kinds"] == ["tweedie(p=1.5)", "logloss"]


class TestRunProtocol:
    def test_pure_editorial_when_days_equal(self):
        cfg = small_config(editorial_days=5, total_days=5)
        daily, counts = run_protocol(cfg, TWEEDIE, run_seed=1)
        other, _ = run_protocol(cfg, LOGLOSS, run_seed=1)
        np.testing.assert_array_equal(daily, other)  # no model is ever trained
        assert daily.shape == (5,)

    def test_deterministic(self):
        cfg = small_config()
        a, _ = run_protocol(cfg, TWEEDIE, run_seed=3)
        b, _ = run_protocol(cfg, TWEEDIE, run_seed=3)
        np.testing.assert_array_equal(a, b)

    def test_editorial_days_identical_across_kinds(self):
        cfg = small_config()
        a, _ = run_protocol(cfg, TWEEDIE, run_seed=5)
        b, _ = run_protocol(cfg, LOGLOSS, run_seed=5)
        np.testing.assert_array_equal(a[:2], b[:2])
        assert not np.array_equal(a[2:], b[2:])

    def test_reward_accounting(self):
        cfg = small_config()
        sink = []
        daily, counts = run_protocol(cfg, TWEEDIE, run_seed=9, events_sink=sink)
        assert len(sink) == 5
        for day_index, log in enumerate(sink):
            assert daily[day_index] == log.watch_seconds.sum()
            assert counts[day_index] == len(log)

    def test_shuffle_seed_isolation(self):
        cfg_a = small_config()
        cfg_b = small_config(train=TrainConfig(epochs=4, shuffle_seed=99))
        sink_a, sink_b = [], []
        a, _ = run_protocol(cfg_a, TWEEDIE, run_seed=2, events_sink=sink_a)
        b, _ = run_protocol(cfg_b, TWEEDIE, run_seed=2, events_sink=sink_b)
        np.testing.assert_array_equal(a[:2], b[:2])  # editorial days unchanged
        assert not np.array_equal(a[2:], b[2:])  # trajectories changed

    def test_planted_optimum_wins_for_every_kind(self):
        config = WorldConfig(n_users=150, n_titles=25, master_seed=4)
        click = np.full(25, 0.001)
        intent = np.full(25, 0.5)
        duration = np.full(25, 6000.0)
        click[7] = 0.999
        intent[7] = 0.999  # watch ~ duration through the intender law
        world = World(config=config, click_prob=click,
                      completion_intention_prob=intent,
                      duration_seconds=duration)
        cfg = ProtocolConfig(world=config, train=TrainConfig(epochs=10),
                             kinds=(TWEEDIE,), editorial_days=2, total_days=6,
                             n_runs=2)
        for kind in [LossKind(n) for n in ("tweedie", "mse", "weighted", "logloss")]:
            sink = []
            run_protocol(cfg, kind, run_seed=11, events_sink=sink,
                         world_override=world)
            from tweedierank.harness import _train_ranker
            model = _train_ranker(cfg, kind, 11, 7, sink)
            assert model.rank()[0] == 7, kind.label


class TestRunMany:
    def test_report_shapes_and_accounting(self):
        cfg = small_config()
        report = run_many(cfg)
        assert report.kind_labels == ["tweedie(p=1.5)", "logloss"]
        for label in report.kind_labels:
            assert len(report.per_run_totals[label]) == 2
            assert len(report.daily_means[label]) == 5
            for run_totals, total in zip(report.daily_totals[label],
                                         report.per_run_totals[label]):
                assert total == pytest.approx(sum(run_totals[2:]), rel=1e-9)

    def test_duplicate_kind_lift_zero(self):
        cfg = small_config(kinds=(TWEEDIE, TWEEDIE))
        report = run_many(cfg)
        assert report.kind_labels == ["tweedie(p=1.5)", "tweedie(p=1.5)#2"]
        label = "tweedie(p=1.5)#2"
        assert report.lifts[label] == pytest.approx(0.0, abs=1e-12)
        assert report.p_values[label] == pytest.approx(1.0)

    def test_treatment_is_first_tweedie(self):
        cfg = small_config(kinds=(LOGLOSS, TWEEDIE))
        report = run_many(cfg)
        assert report.treatment == "tweedie(p=1.5)"
        assert set(report.lifts) == {"logloss"}

    def test_parallel_matches_serial(self):
        cfg = small_config()
        a = run_many(cfg, n_jobs=1)
        b = run_many(cfg, n_jobs=2)
        assert a.per_run_totals == b.per_run_totals
        assert a.lifts == b.lifts
        assert a.p_values == b.p_values

    def test_collect_events(self):
        cfg = small_config()
        report = run_many(cfg, collect_events=True)
        assert set(report.events_run0) == set(report.kind_labels)
        log = report.events_run0["logloss"]
        assert set(log.day.tolist()) == {1, 2, 3, 4, 5}


class TestEmitReport:
    def test_files_and_shapes(self, tmp_path):
        cfg = small_config()
        report = run_many(cfg)
        rp, pp = emit_report(report, tmp_path / "report.json",
                             tmp_path / "plot_data.csv")
        payload = json.loads((tmp_path / "report.json").read_text())
        assert set(payload) == {"config_echo", "per_run_totals", "daily_means",
                                "daily_totals", "treatment", "lifts", "p_values"}
        lines = (tmp_path / "plot_data.csv").read_text().splitlines()
        assert lines[1] == "kind,day,mean_watch_seconds"
        assert len(lines) == 2 + 5 * 2  # header rows + days x kinds

    def test_reemit_byte_identical(self, tmp_path):
        report = run_many(small_config())
        emit_report(report, tmp_path / "a.json", tmp_path / "a.csv")
        emit_report(report, tmp_path / "b.json", tmp_path / "b.csv")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_rerun_byte_identical(self, tmp_path):
        emit_report(run_many(small_config()), tmp_path / "a.json", tmp_path / "a.csv")
        emit_report(run_many(small_config()), tmp_path / "b.json", tmp_path / "b.csv")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_empty_kinds_rejected_before_writing(self, tmp_path):
        report = ExperimentReport(
            config_echo={}, kind_labels=[], n_users=1, editorial_days=1,
            daily_totals={}, per_run_totals={}, daily_means={},
            treatment="x", lifts={}, p_values={},
        )
        target = tmp_path / "never.json"
        with pytest.raises(ValueError):
            emit_report(report, target, tmp_path / "never.csv")
        assert not target.exists()
