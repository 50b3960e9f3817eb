"""Synthetic user-title world: catalog generation and session simulation.

Each title carries a static click probability, a completion-intention
probability, and a duration, all drawn from clipped normal laws. A session
walks a ranked list from the top: at each examined title the user clicks with
the title's click probability; a click draws a latent completion intention,
then a watch fraction from the intender or non-intender law, and ends the
session. An unclicked examination abandons the session with the stop
probability. Users are featureless and memoryless across days.
"""

import math
from dataclasses import dataclass, field, fields

import numpy as np

from . import rng

PROB_CLIP = (0.001, 0.999)
FRACTION_CLIP = (0.01, 1.0)
MIN_DURATION = 600.0


@dataclass(frozen=True)
class TitleProfile:
    """Per-title behavioral parameters."""

    title_id: int
    click_prob: float
    completion_intention_prob: float
    duration_seconds: float

    def __post_init__(self):
        for name in ("click_prob", "completion_intention_prob"):
            v = getattr(self, name)
            if not (PROB_CLIP[0] <= v <= PROB_CLIP[1]):
                raise ValueError(f"{name} must lie in {PROB_CLIP}, got {v}")
        if self.duration_seconds < MIN_DURATION:
            raise ValueError(f"duration_seconds must be >= {MIN_DURATION}")


@dataclass(frozen=True)
class WorldConfig:
    """Generator hyperparameters of the synthetic world.

    The numeric law parameters are implementation defaults chosen for
    plausible VOD scale and clear inter-title variance; all are configurable.
    """

    n_users: int = 10000
    n_titles: int = 1000
    click_prob_mean: float = 0.05
    click_prob_sd: float = 0.02
    intention_mean: float = 0.5
    intention_sd: float = 0.15
    intender_fraction_mean: float = 0.9
    intender_fraction_sd: float = 0.05
    non_intender_fraction_mean: float = 0.2
    non_intender_fraction_sd: float = 0.1
    duration_mean: float = 6000.0
    duration_sd: float = 1800.0
    stop_prob: float = 0.1
    watch_scale: float = 3600.0
    master_seed: int = 0

    def __post_init__(self):
        if self.n_users < 1 or self.n_titles < 1:
            raise ValueError("n_users and n_titles must be >= 1")
        if not (0.0 < self.stop_prob <= 1.0):
            raise ValueError(f"stop_prob must lie in (0, 1], got {self.stop_prob}")
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise ValueError(f"{f.name} must be finite")
        for name in ("click_prob_sd", "intention_sd", "intender_fraction_sd",
                     "non_intender_fraction_sd", "duration_sd"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.watch_scale <= 0:
            raise ValueError("watch_scale must be positive")


@dataclass(frozen=True)
class SessionEvent:
    """One examined user-title impression."""

    user_id: int
    day: int
    position: int
    title_id: int
    clicked: int
    watch_seconds: float

    def __post_init__(self):
        if self.clicked not in (0, 1):
            raise ValueError("clicked must be 0 or 1")
        if self.clicked == 0 and self.watch_seconds != 0:
            raise ValueError("unclicked events must have watch_seconds == 0")
        if self.watch_seconds < 0:
            raise ValueError("watch_seconds must be nonnegative")


@dataclass
class World:
    """Generated catalog held as parallel arrays, plus its config."""

    config: WorldConfig
    click_prob: np.ndarray
    completion_intention_prob: np.ndarray
    duration_seconds: np.ndarray

    @property
    def n_titles(self):
        return self.config.n_titles

    def profile(self, title_id):
        return TitleProfile(
            title_id=int(title_id),
            click_prob=float(self.click_prob[title_id]),
            completion_intention_prob=float(self.completion_intention_prob[title_id]),
            duration_seconds=float(self.duration_seconds[title_id]),
        )

    @property
    def profiles(self):
        return [self.profile(i) for i in range(self.n_titles)]


@dataclass
class EventLog:
    """Column-oriented store for session events."""

    day: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    user_id: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    position: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    title_id: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    clicked: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    watch_seconds: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=float))

    COLUMNS = ("day", "user_id", "position", "title_id", "clicked", "watch_seconds")

    def __len__(self):
        return self.day.size

    @classmethod
    def concatenate(cls, logs):
        logs = list(logs)
        if not logs:
            return cls()
        return cls(**{
            c: np.concatenate([getattr(log, c) for log in logs]) for c in cls.COLUMNS
        })

    def events(self):
        """Materialize SessionEvent records (test/inspection convenience)."""
        return [
            SessionEvent(int(u), int(d), int(p), int(t), int(c), float(w))
            for d, u, p, t, c, w in zip(
                self.day, self.user_id, self.position,
                self.title_id, self.clicked, self.watch_seconds,
            )
        ]


def generate_world(config, seed=None):
    """Draw one catalog from the config's laws, deterministic in the seed.

    ``seed`` defaults to ``config.master_seed``; probabilities are clipped
    into [0.001, 0.999] and durations floored at 600 s.
    """
    seed = config.master_seed if seed is None else seed
    gen = rng.stream(seed, rng.WORLD)
    n = config.n_titles
    click = np.clip(gen.normal(config.click_prob_mean, config.click_prob_sd, n), *PROB_CLIP)
    intent = np.clip(gen.normal(config.intention_mean, config.intention_sd, n), *PROB_CLIP)
    duration = np.maximum(gen.normal(config.duration_mean, config.duration_sd, n), MIN_DURATION)
    return World(config=config, click_prob=click,
                 completion_intention_prob=intent, duration_seconds=duration)


def _session_draws(gen, ranking, world):
    """Core session walk; returns (positions, titles, clicked, watch) lists."""
    cfg = world.config
    titles, clicks, watches = [], [], []
    for position, title in enumerate(ranking):
        title = int(title)
        titles.append(title)
        if gen.random() < world.click_prob[title]:
            clicks.append(1)
            intends = gen.random() < world.completion_intention_prob[title]
            if intends:
                frac = gen.normal(cfg.intender_fraction_mean, cfg.intender_fraction_sd)
            else:
                frac = gen.normal(cfg.non_intender_fraction_mean, cfg.non_intender_fraction_sd)
            frac = min(max(frac, FRACTION_CLIP[0]), FRACTION_CLIP[1])
            watches.append(frac * world.duration_seconds[title])
            break
        clicks.append(0)
        watches.append(0.0)
        if gen.random() < cfg.stop_prob:
            break
    return titles, clicks, watches


def _check_ranking(ranking, n_titles):
    ranking = np.asarray(ranking, dtype=np.int64)
    if ranking.size != n_titles or np.any(np.sort(ranking) != np.arange(n_titles)):
        raise ValueError("ranking must be a permutation of all title ids")
    return ranking


def simulate_session(user_id, day, ranking, world, stream):
    """Run one user session against a ranked list; one event per examined title.

    The session walks positions 0, 1, 2, ...; a click ends it (at most one
    clicked event, always last), an unclicked examination abandons with the
    stop probability, so position 0 is always examined.
    """
    ranking = _check_ranking(ranking, world.n_titles)
    titles, clicks, watches = _session_draws(stream, ranking, world)
    return [
        SessionEvent(user_id=user_id, day=day, position=pos, title_id=t,
                     clicked=c, watch_seconds=w)
        for pos, (t, c, w) in enumerate(zip(titles, clicks, watches))
    ]


def _resolve_ranking(ranking_source, world, day):
    if hasattr(ranking_source, "rank"):
        return _check_ranking(ranking_source.rank(), world.n_titles)
    return _check_ranking(ranking_source, world.n_titles)


def simulate_day(ranking_source, world, day, seed=None):
    """Simulate one session per user for a day; returns an EventLog.

    ``ranking_source`` is either an explicit permutation or a fitted model
    with a ``rank()`` method. Each user's stream is derived from
    (seed, session label, day, user id), so the result is independent of the
    order users are processed in.
    """
    seed = world.config.master_seed if seed is None else seed
    ranking = _resolve_ranking(ranking_source, world, day)
    days, users, positions, titles, clicks, watches = [], [], [], [], [], []
    for user_id in range(world.config.n_users):
        gen = rng.stream(seed, rng.SESSION, day, user_id)
        t, c, w = _session_draws(gen, ranking, world)
        k = len(t)
        days.extend([day] * k)
        users.extend([user_id] * k)
        positions.extend(range(k))
        titles.extend(t)
        clicks.extend(c)
        watches.extend(w)
    return EventLog(
        day=np.asarray(days, dtype=np.int64),
        user_id=np.asarray(users, dtype=np.int64),
        position=np.asarray(positions, dtype=np.int64),
        title_id=np.asarray(titles, dtype=np.int64),
        clicked=np.asarray(clicks, dtype=np.int64),
        watch_seconds=np.asarray(watches, dtype=float),
    )


def editorial_ranking(n_titles, day, seed):
    """Fixed pseudo-random permutation, deterministic in (seed, day)."""
    return rng.stream(seed, rng.EDITORIAL, day).permutation(n_titles)


def write_event_log(log, path, master_seed=None):
    """Write a delimiter-separated event log with a header row."""
    with open(path, "w") as fh:
        if master_seed is not None:
            fh.write(f"# master_seed={master_seed}\n")
        fh.write(",".join(EventLog.COLUMNS) + "\n")
        for d, u, p, t, c, w in zip(log.day, log.user_id, log.position,
                                    log.title_id, log.clicked, log.watch_seconds):
            fh.write(f"{d},{u},{p},{t},{c},{float(w)!r}\n")


def read_event_log(path):
    days, users, positions, titles, clicks, watches = [], [], [], [], [], []
    with open(path) as fh:
        header_seen = False
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                if line != ",".join(EventLog.COLUMNS):
                    raise ValueError(f"unexpected event log header: {line!r}")
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise ValueError(f"malformed event log row: {line!r}")
            days.append(int(parts[0]))
            users.append(int(parts[1]))
            positions.append(int(parts[2]))
            titles.append(int(parts[3]))
            clicks.append(int(parts[4]))
            watches.append(float(parts[5]))
    return EventLog(
        day=np.asarray(days, dtype=np.int64),
        user_id=np.asarray(users, dtype=np.int64),
        position=np.asarray(positions, dtype=np.int64),
        title_id=np.asarray(titles, dtype=np.int64),
        clicked=np.asarray(clicks, dtype=np.int64),
        watch_seconds=np.asarray(watches, dtype=float),
    )
