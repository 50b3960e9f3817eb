"""The four training objectives and their analytic gradients in the prediction.

All losses are per-sample. The compound Poisson-gamma regression loss is the
negative log-likelihood up to the normalizing constant,

    L(pred, target) = -target * pred**(1-p) / (1-p) + pred**(2-p) / (2-p),

which for target > 0 has its unique minimum at pred = target and for
target = 0 is strictly increasing in pred.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import rng

# Probability-type predictions are clipped into [EPSILON_PRED, 1-EPSILON_PRED]
# before taking logs; far below any meaningful normalized watch value.
EPSILON_PRED = 1e-6

# Regression targets are watch seconds divided by this scale, keeping them
# O(1); configurable wherever samples are built.
DEFAULT_WATCH_SCALE = 3600.0

_KIND_NAMES = ("tweedie", "logloss", "weighted", "mse")
_LINKS = {"tweedie": "exp", "logloss": "sigmoid", "weighted": "sigmoid", "mse": "identity"}


@dataclass(frozen=True)
class LossKind:
    """Tagged choice of training objective plus its output link.

    ``power`` is only meaningful for the ``tweedie`` kind and must lie in
    (1, 2). The link function maps the ranker's raw score into the loss
    domain: exponential for tweedie, sigmoid for the classification kinds,
    identity for mean-squared error.
    """

    name: str
    power: float = 1.5

    def __post_init__(self):
        if self.name not in _KIND_NAMES:
            raise ValueError(f"unknown loss kind {self.name!r}; expected one of {_KIND_NAMES}")
        if self.name == "tweedie" and not (1.0 < self.power < 2.0):
            raise ValueError(f"tweedie power must lie in (1, 2), got {self.power}")

    @property
    def link(self):
        return _LINKS[self.name]

    @property
    def is_classification(self):
        return self.name in ("logloss", "weighted")

    @property
    def code(self):
        return rng.kind_code(self.name)

    @property
    def label(self):
        if self.name == "tweedie":
            return f"tweedie(p={self.power:g})"
        return self.name

    @classmethod
    def parse(cls, text, power=1.5):
        return cls(text.strip().lower(), power=power)


TWEEDIE = LossKind("tweedie")
LOGLOSS = LossKind("logloss")
WEIGHTED = LossKind("weighted")
MSE = LossKind("mse")


@dataclass(frozen=True)
class Sample:
    """One impression: title, click flag, normalized watch, sample weight."""

    title_id: int
    click_label: int
    watch: float
    weight: float = 1.0

    def __post_init__(self):
        if self.click_label not in (0, 1):
            raise ValueError(f"click_label must be 0 or 1, got {self.click_label}")
        if self.watch < 0:
            raise ValueError(f"watch must be nonnegative, got {self.watch}")
        if self.click_label == 0 and self.watch != 0:
            raise ValueError("unclicked samples must have watch == 0")
        if self.weight < 0:
            raise ValueError(f"weight must be nonnegative, got {self.weight}")


def _check_positive_pred(pred):
    if not np.all(np.asarray(pred) > 0):
        raise ValueError("prediction must be strictly positive for the tweedie loss")


def tweedie_loss(pred, target, p=1.5):
    """Per-sample compound Poisson-gamma deviance term (up to constants)."""
    _check_positive_pred(pred)
    if np.any(np.asarray(target) < 0):
        raise ValueError("target must be nonnegative")
    return -target * pred ** (1.0 - p) / (1.0 - p) + pred ** (2.0 - p) / (2.0 - p)


def tweedie_grad(pred, target, p=1.5):
    """d/dpred of :func:`tweedie_loss`: -target * pred**(-p) + pred**(1-p)."""
    _check_positive_pred(pred)
    return -target * pred ** (-p) + pred ** (1.0 - p)


def _check_prob(pred):
    arr = np.asarray(pred)
    if np.any(arr < EPSILON_PRED) or np.any(arr > 1.0 - EPSILON_PRED):
        raise ValueError(
            f"probability prediction must lie in [{EPSILON_PRED}, {1 - EPSILON_PRED}]"
        )


def logloss(pred, click_label):
    """Binary cross-entropy -[y ln pred + (1 - y) ln(1 - pred)]."""
    _check_prob(pred)
    y = click_label
    return -(y * np.log(pred) + (1.0 - y) * np.log1p(-pred))


def logloss_grad(pred, click_label):
    _check_prob(pred)
    y = click_label
    return -y / pred + (1.0 - y) / (1.0 - pred)


def weighted_logloss(pred, click_label, weight):
    """Cross-entropy scaled by the sample weight.

    In training data the weight is the normalized watch time for clicked
    samples and 1 for non-clicked ones, so negatives are kept rather than
    erased.
    """
    if np.any(np.asarray(weight) < 0):
        raise ValueError("weight must be nonnegative")
    if np.all(np.asarray(weight) == 0):
        return np.asarray(weight) * 0.0 if not np.isscalar(weight) else 0.0
    return weight * logloss(pred, click_label)


def mse_loss(pred, target):
    """Squared error (pred - target)**2."""
    return (pred - target) ** 2


def mse_grad(pred, target):
    return 2.0 * (pred - target)


def loss_and_grad(kind, pred, sample):
    """Dispatch to the matching (loss, d loss / d pred) pair for one sample.

    Regression kinds use ``sample.watch`` as the target; classification kinds
    use ``sample.click_label``, with the weighted kind scaled by
    ``sample.weight``.
    """
    if kind.name == "tweedie":
        p = kind.power
        return (tweedie_loss(pred, sample.watch, p), tweedie_grad(pred, sample.watch, p))
    if kind.name == "logloss":
        return (logloss(pred, sample.click_label), logloss_grad(pred, sample.click_label))
    if kind.name == "weighted":
        w = sample.weight
        if w == 0:
            return 0.0, 0.0
        return (
            w * logloss(pred, sample.click_label),
            w * logloss_grad(pred, sample.click_label),
        )
    return (mse_loss(pred, sample.watch), mse_grad(pred, sample.watch))


def loss_and_zgrad_arrays(kind, z, target, weight):
    """Vectorized (per-sample loss, d loss / d raw score) through the link.

    ``z`` is the ranker's raw score; the link per kind is exp (clamped to
    |z| <= 30), sigmoid, or identity. Used by the trainer; pointwise
    consistency with :func:`loss_and_grad` composed through the link is
    covered by the gradient tests.
    """
    if kind.name == "tweedie":
        zc = np.clip(z, -30.0, 30.0)
        pred = np.exp(zc)
        p = kind.power
        lossv = -target * pred ** (1.0 - p) / (1.0 - p) + pred ** (2.0 - p) / (2.0 - p)
        # d pred / d z = pred inside the clamp, 0 where clamped.
        inside = (z > -30.0) & (z < 30.0)
        dldz = (-target * pred ** (1.0 - p) + pred ** (2.0 - p)) * inside
        return lossv, dldz
    if kind.name in ("logloss", "weighted"):
        pred = 1.0 / (1.0 + np.exp(-z))
        clipped = np.clip(pred, EPSILON_PRED, 1.0 - EPSILON_PRED)
        lossv = -(target * np.log(clipped) + (1.0 - target) * np.log1p(-clipped))
        dldz = pred - target
        if kind.name == "weighted":
            lossv = weight * lossv
            dldz = weight * dldz
        return lossv, dldz
    lossv = (z - target) ** 2
    return lossv, 2.0 * (z - target)


def apply_link(kind, z):
    """Map raw scores into the loss domain of ``kind``."""
    z = np.asarray(z, dtype=float)
    if kind.link == "exp":
        return np.exp(np.clip(z, -30.0, 30.0))
    if kind.link == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    return z


def samples_from_arrays(title_ids, clicked, watch_seconds, watch_scale=DEFAULT_WATCH_SCALE):
    """Build Sample records from raw event arrays.

    Watch is normalized by ``watch_scale``; the weight is the normalized
    watch time for clicked samples and 1 otherwise.
    """
    out = []
    for tid, c, w in zip(title_ids, clicked, watch_seconds):
        c = int(c)
        out.append(
            Sample(
                title_id=int(tid),
                click_label=c,
                watch=float(w) / watch_scale if c else 0.0,
                weight=float(w) / watch_scale if c else 1.0,
            )
        )
    return out


def training_targets(kind, clicked, watch_seconds, watch_scale=DEFAULT_WATCH_SCALE):
    """Per-kind (target, weight) arrays for raw click/watch event columns."""
    clicked = np.asarray(clicked, dtype=float)
    watch_seconds = np.asarray(watch_seconds, dtype=float)
    if kind.is_classification:
        target = clicked
        if kind.name == "weighted":
            weight = np.where(clicked > 0, watch_seconds / watch_scale, 1.0)
        else:
            weight = np.ones_like(clicked)
    else:
        target = watch_seconds / watch_scale
        weight = np.ones_like(clicked)
    return target, weight
