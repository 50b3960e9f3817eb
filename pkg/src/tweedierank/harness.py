"""Multi-day ranking protocol, replication, lifts and significance.

A run simulates ``total_days`` days for one loss kind: the first
``editorial_days`` serve a seeded pseudo-random editorial ranking, every later
day retrains a fresh ranker on all accumulated session events and serves its
ranking. Runs are replicated with derived seeds; per-kind runs share world,
editorial and session streams at equal run index, so within a run index the
loss is the only varying factor, while significance is still computed
unpaired.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from joblib import Parallel, delayed

from . import rng
from .losses import LossKind, training_targets
from .ranker import TitleRanker, TrainConfig
from .simulate import EventLog, WorldConfig, editorial_ranking, generate_world, simulate_day
from .stats import welch_t_test

DEFAULT_KINDS = (LossKind("tweedie"), LossKind("mse"), LossKind("weighted"),
                 LossKind("logloss"))


@dataclass(frozen=True)
class ProtocolConfig:
    world: WorldConfig = field(default_factory=WorldConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    kinds: tuple = DEFAULT_KINDS
    editorial_days: int = 3
    total_days: int = 13
    n_runs: int = 10

    def __post_init__(self):
        if not self.kinds:
            raise ValueError("kinds must be nonempty")
        # editorial_days == total_days is the degenerate pure-editorial case.
        if not (0 < self.editorial_days <= self.total_days):
            raise ValueError("need 0 < editorial_days <= total_days")
        if self.n_runs < 2:
            raise ValueError("n_runs must be >= 2 for significance")

    @property
    def master_seed(self):
        return self.world.master_seed

    def run_seed(self, run_index):
        return rng.derive_seed(self.master_seed, rng.RUN, run_index)

    def echo(self):
        d = asdict(self)
        d["kinds"] = [k.label for k in self.kinds]
        return d


@dataclass
class RunResult:
    """Per-day metrics of one (kind, run) protocol execution."""

    kind: LossKind
    run_index: int
    daily_total_watch: np.ndarray
    daily_events: np.ndarray
    events: EventLog = None

    def total_after(self, editorial_days):
        return float(self.daily_total_watch[editorial_days:].sum())


@dataclass
class ExperimentReport:
    """Aggregated totals, per-day means, lifts and Welch p-values.

    Lifts compare the treatment kind (the first tweedie kind listed, else the
    first kind) against every other kind on per-run total watch seconds over
    the post-editorial days.
    """

    config_echo: dict
    kind_labels: list
    n_users: int
    editorial_days: int
    daily_totals: dict
    per_run_totals: dict
    daily_means: dict
    treatment: str
    lifts: dict
    p_values: dict
    events_run0: dict = None


def run_protocol(config, kind, run_seed, events_sink=None, world_override=None):
    """One protocol execution; returns per-day total watch seconds.

    Editorial days use the seeded editorial permutation; each later day
    trains a freshly initialized ranker on all accumulated events (targets
    and weights per the loss kind, watch normalized by the world's scale)
    and serves its ranking for the day. Deterministic in
    (config, kind, run_seed). ``world_override`` substitutes a hand-built
    catalog for planted-scenario studies.
    """
    world = generate_world(config.world, seed=run_seed) if world_override is None \
        else world_override
    n_days = config.total_days
    daily_total = np.zeros(n_days)
    daily_events = np.zeros(n_days, dtype=np.int64)
    accumulated = []
    for day in range(1, n_days + 1):
        if day <= config.editorial_days:
            ranking = editorial_ranking(config.world.n_titles, day, run_seed)
        else:
            ranking = _train_ranker(config, kind, run_seed, day, accumulated).rank()
        log = simulate_day(ranking, world, day, seed=run_seed)
        accumulated.append(log)
        daily_total[day - 1] = float(log.watch_seconds.sum())
        daily_events[day - 1] = len(log)
        if events_sink is not None:
            events_sink.append(log)
    return daily_total, daily_events


def _train_ranker(config, kind, run_seed, day, accumulated):
    log = EventLog.concatenate(accumulated)
    target, weight = training_targets(kind, log.clicked, log.watch_seconds,
                                      watch_scale=config.world.watch_scale)
    # shuffle_seed only reaches the model, never the world or editorial days.
    run_kind = rng.derive_seed(run_seed, rng.TRAIN, kind.code)
    model_seed = rng.derive_seed(config.train.shuffle_seed, rng.TRAIN, run_kind, day)
    model = TitleRanker(
        n_titles=config.world.n_titles,
        loss=kind,
        learning_rate=config.train.learning_rate,
        epochs=config.train.epochs,
        batch_size=config.train.batch_size,
        random_state=model_seed,
    )
    return model.fit(log.title_id, target, sample_weight=weight)


def _run_job(config, kind, run_index, collect=False):
    sink = [] if collect else None
    daily_total, daily_events = run_protocol(config, kind, config.run_seed(run_index),
                                             events_sink=sink)
    events = EventLog.concatenate(sink) if collect else None
    return RunResult(kind=kind, run_index=run_index,
                     daily_total_watch=daily_total, daily_events=daily_events,
                     events=events)


def _kind_labels(kinds):
    """Unique display labels; duplicates of a kind get a #i suffix."""
    labels, seen = [], {}
    for kind in kinds:
        base = kind.label
        seen[base] = seen.get(base, 0) + 1
        labels.append(base if seen[base] == 1 else f"{base}#{seen[base]}")
    return labels


def run_many(config, n_jobs=None, collect_events=False):
    """Replicate the protocol for every kind and aggregate an ExperimentReport.

    With ``collect_events`` the report carries the full event log of run 0
    for each kind under ``events_run0``.
    """
    labels = _kind_labels(config.kinds)
    jobs = [(ki, r) for ki in range(len(config.kinds)) for r in range(config.n_runs)]
    if n_jobs in (None, 1):
        results = [_run_job(config, config.kinds[ki], r, collect_events and r == 0)
                   for ki, r in jobs]
    else:
        results = Parallel(n_jobs=n_jobs)(
            delayed(_run_job)(config, config.kinds[ki], r, collect_events and r == 0)
            for ki, r in jobs
        )
    by_kind = {label: [] for label in labels}
    for (ki, _), res in zip(jobs, results):
        by_kind[labels[ki]].append(res)

    ed = config.editorial_days
    n_users = config.world.n_users
    daily_totals = {
        label: [list(map(float, r.daily_total_watch)) for r in by_kind[label]]
        for label in labels
    }
    per_run_totals = {
        label: [r.total_after(ed) for r in by_kind[label]] for label in labels
    }
    daily_means = {
        label: [float(x) for x in np.mean(
            [r.daily_total_watch / n_users for r in by_kind[label]], axis=0
        )]
        for label in labels
    }

    treatment = next(
        (label for kind, label in zip(config.kinds, labels) if kind.name == "tweedie"),
        labels[0],
    )
    lifts, p_values = {}, {}
    treat_totals = per_run_totals[treatment]
    for label in labels:
        if label == treatment:
            continue
        base_totals = per_run_totals[label]
        base_mean = float(np.mean(base_totals))
        lifts[label] = float(100.0 * (np.mean(treat_totals) - base_mean) / base_mean)
        try:
            p_values[label] = welch_t_test(treat_totals, base_totals).p
        except ValueError:
            # Zero variance on both sides: no evidence of a difference.
            p_values[label] = 1.0
    events_run0 = None
    if collect_events:
        events_run0 = {
            label: next(r.events for r in by_kind[label] if r.run_index == 0)
            for label in labels
        }
    return ExperimentReport(
        config_echo=config.echo(),
        kind_labels=labels,
        n_users=n_users,
        editorial_days=ed,
        daily_totals=daily_totals,
        per_run_totals=per_run_totals,
        daily_means=daily_means,
        treatment=treatment,
        lifts=lifts,
        p_values=p_values,
        events_run0=events_run0,
    )


def emit_report(report, report_path, plot_path):
    """Write the structured report (JSON) and the per-day plot data (CSV).

    Both files are byte-deterministic for a given report; the plot data has
    one (kind, day, mean_watch_seconds) row per kind and day.
    """
    if not report.kind_labels:
        raise ValueError("report has no kinds")
    payload = {
        "config_echo": report.config_echo,
        "per_run_totals": report.per_run_totals,
        "daily_means": report.daily_means,
        "daily_totals": report.daily_totals,
        "treatment": report.treatment,
        "lifts": report.lifts,
        "p_values": report.p_values,
    }
    with open(report_path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    master_seed = report.config_echo.get("world", {}).get("master_seed")
    with open(plot_path, "w") as fh:
        fh.write(f"# master_seed={master_seed}\n")
        fh.write("kind,day,mean_watch_seconds\n")
        for label in report.kind_labels:
            for day, value in enumerate(report.daily_means[label], start=1):
                fh.write(f"{label},{day},{float(value)!r}\n")
    return report_path, plot_path
