"""Bernoulli RBM for binary like/dislike ratings with missing-entry masking.

Visible units are jokes, hidden units are latent tastes.  A visible entry of
-1 is "missing": it contributes nothing to the hidden pre-activation and is
left out of both phases of the contrastive-divergence statistics.

Weights are stored as ``W[j, i]`` (hidden j, visible i) so that::

    P(h_j = 1 | v) = sigmoid(b_j + sum_i W[j, i] v_i)      (observed i only)
    P(v_i = 1 | h) = sigmoid(a_i + sum_j W[j, i] h_j)
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ConfigurationError, EvaluationError, FormatError, NumericOverflowError, ShapeError
from .ratings_io import MISSING, BinaryRatingMatrix

RBM_FORMAT = "prefcluster-rbm-v1"


@dataclass(frozen=True)
class RbmParams:
    W: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        W = np.array(self.W, dtype=np.float64)
        a = np.array(self.a, dtype=np.float64).reshape(-1)
        b = np.array(self.b, dtype=np.float64).reshape(-1)
        if W.ndim != 2 or W.shape != (b.size, a.size):
            raise ShapeError(f"inconsistent RBM shapes: W {W.shape}, a {a.shape}, b {b.shape}")
        if W.size == 0:
            raise ShapeError("RBM needs at least one visible and one hidden unit")
        if not (np.isfinite(W).all() and np.isfinite(a).all() and np.isfinite(b).all()):
            raise NumericOverflowError("RBM parameters contain NaN or infinity")
        for arr in (W, a, b):
            arr.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n_visible(self):
        return self.a.size

    @property
    def n_hidden(self):
        return self.b.size


@dataclass(frozen=True)
class TrainConfig:
    n_hidden: int = 100
    cd_k: int = 10
    learning_rate: float = 0.05
    epochs: int = 10
    batch_size: int = 100
    seed: int = 0

    def __post_init__(self):
        for name in ("n_hidden", "cd_k", "epochs", "batch_size"):
            if int(getattr(self, name)) < 1:
                raise ConfigurationError(f"{name} must be a positive integer")
        if not self.learning_rate > 0:
            raise ConfigurationError("learning_rate must be positive")


@dataclass
class TrainHistory:
    reconstruction_error: list = field(default_factory=list)


@dataclass(frozen=True)
class ImputedDatasets:
    d1: BinaryRatingMatrix
    d2: BinaryRatingMatrix


def _as_visible(v, n_visible, mask=None):
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != n_visible or v.ndim not in (1, 2):
        raise ShapeError(f"visible input has shape {v.shape}, expected (..., {n_visible})")
    if mask is None:
        mask = v != MISSING
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != v.shape:
            raise ShapeError(f"mask shape {mask.shape} does not match input {v.shape}")
    return np.where(mask, v, 0.0), mask


def init_rbm(n_visible, n_hidden, seed=0):
    if n_visible < 1 or n_hidden < 1:
        raise ShapeError(f"RBM dimensions must be >= 1, got visible={n_visible}, hidden={n_hidden}")
    rng = np.random.default_rng(seed)
    W = rng.normal(0.0, 0.01, size=(n_hidden, n_visible))
    return RbmParams(W, np.zeros(n_visible), np.zeros(n_hidden))


def hidden_probs(params, v, mask=None):
    """P(h = 1 | v) for a visible vector (or a batch of rows).

    Entries equal to -1, or False in an explicit ``mask``, are ignored.
    """
    v0, _ = _as_visible(v, params.n_visible, mask)
    return expit(params.b + v0 @ params.W.T)


def visible_probs(params, h):
    h = np.asarray(h, dtype=np.float64)
    if h.shape[-1] != params.n_hidden or h.ndim not in (1, 2):
        raise ShapeError(f"hidden input has shape {h.shape}, expected (..., {params.n_hidden})")
    return expit(params.a + h @ params.W)


def sufficient_stats(v0, mask, ph):
    """Batch-summed (dW, da, db) statistics for masked visibles ``v0`` and hidden probs ``ph``."""
    v0 = v0 * mask
    return ph.T @ v0, v0.sum(axis=0), ph.sum(axis=0)


def cd_update(params, batch, k, lr, rng):
    """One CD-k step on a mini-batch; returns new parameters.

    Missing visibles are clamped to "absent" at every Gibbs step, so they
    never enter the positive or negative statistics.
    """
    v0, mask = _as_visible(batch, params.n_visible)
    if v0.ndim == 1:
        v0, mask = v0[None, :], mask[None, :]
    if v0.shape[0] == 0:
        raise ShapeError("empty batch")
    if k < 1:
        raise ConfigurationError("cd_k must be >= 1")

    ph0 = expit(params.b + v0 @ params.W.T)
    pos = sufficient_stats(v0, mask, ph0)

    phk = ph0
    vk = v0
    for _ in range(k):
        h = (rng.random(phk.shape) < phk).astype(np.float64)
        pv = expit(params.a + h @ params.W)
        vk = (rng.random(pv.shape) < pv) & mask
        vk = vk.astype(np.float64)
        phk = expit(params.b + vk @ params.W.T)
    neg = sufficient_stats(vk, mask, phk)

    scale = lr / v0.shape[0]
    with np.errstate(over="ignore", invalid="ignore"):
        W = params.W + scale * (pos[0] - neg[0])
        a = params.a + scale * (pos[1] - neg[1])
        b = params.b + scale * (pos[2] - neg[2])
    if not (np.isfinite(W).all() and np.isfinite(a).all() and np.isfinite(b).all()):
        raise NumericOverflowError("CD update produced non-finite parameters; lower the learning rate")
    return RbmParams(W, a, b)


def reconstruction_error(params, data):
    v = np.asarray(data)
    mask = v != MISSING
    if not mask.any():
        raise EvaluationError("no observed entries")
    probs, _ = predict(params, v)
    return float(np.abs(probs - v)[mask].mean())


def train(config, train_data):
    """Fit an RBM with shuffled mini-batch CD-k.  Deterministic for a given seed."""
    data = np.asarray(train_data)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ShapeError("training data must be a non-empty matrix")
    n = data.shape[0]
    if config.batch_size > n:
        raise ConfigurationError(f"batch_size {config.batch_size} exceeds {n} training users")
    params = init_rbm(data.shape[1], config.n_hidden, config.seed)
    rng = np.random.default_rng([config.seed, 1])
    history = TrainHistory()
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = data[order[start:start + config.batch_size]]
            params = cd_update(params, batch, config.cd_k, config.learning_rate, rng)
        history.reconstruction_error.append(reconstruction_error(params, data))
    return params, history


def predict(params, v):
    """Deterministic mean-field reconstruction: returns (probs, binary), ties at 0.5 -> 1."""
    probs = visible_probs(params, hidden_probs(params, v))
    return probs, (probs >= 0.5).astype(np.int8)


def evaluate_mae(params, test_data):
    """Mean absolute error of binary predictions over observed test cells."""
    v = np.asarray(test_data)
    mask = v != MISSING
    if v.size == 0 or not mask.any():
        raise EvaluationError("test data has no observed ratings")
    _, binary = predict(params, v)
    return float(np.abs(binary[mask].astype(np.int64) - v[mask]).mean())


def build_d1_d2(params, full_data):
    """D1 = model prediction for every cell; D2 = observed cells kept, missing ones from D1."""
    v = np.asarray(full_data)
    if v.ndim != 2 or v.shape[1] != params.n_visible:
        raise ShapeError(f"data has shape {v.shape}, model expects {params.n_visible} columns")
    _, d1 = predict(params, v)
    d2 = np.where(v != MISSING, v, d1).astype(np.int8)
    return ImputedDatasets(BinaryRatingMatrix(d1), BinaryRatingMatrix(d2))


def save_rbm(path, params, config=None, extra=None):
    doc = {
        "format": RBM_FORMAT,
        "n_visible": params.n_visible,
        "n_hidden": params.n_hidden,
        "W": params.W.tolist(),
        "a": params.a.tolist(),
        "b": params.b.tolist(),
        "config": asdict(config) if config is not None else None,
    }
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_rbm(path):
    """Read parameters (and the training config, if recorded) from a JSON artifact."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != RBM_FORMAT:
        raise FormatError(RBM_FORMAT, doc.get("format"), path)
    params = RbmParams(doc["W"], doc["a"], doc["b"])
    if params.n_visible != doc["n_visible"] or params.n_hidden != doc["n_hidden"]:
        raise ShapeError(f"{path}: declared dimensions do not match the stored arrays")
    config = TrainConfig(**doc["config"]) if doc.get("config") else None
    return params, config
