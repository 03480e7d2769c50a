"""One-hidden-layer sigmoid network trained by online backpropagation with momentum."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import _backend
from .dataset import DEFAULT_OUTPUT_RANGE, Dataset, NormStats, fit_normalizer
from .errors import DataError, DimensionError, ExtrapolationError, TrainingDivergedError

GUARD_WIDTH = 10.0


@dataclass(frozen=True)
class MlfnConfig:
    """Network shape and training hyperparameters.

    The defaults (7 hidden nodes, learning rate 0.9, momentum 0.9, 200
    epochs) are the solar-collector configuration.
    """

    n_inputs: int
    n_hidden: int = 7
    learning_rate: float = 0.9
    momentum: float = 0.9
    epochs: int = 200
    seed: int = 0
    init_half_width: float = 0.5
    output_range: tuple[float, float] = DEFAULT_OUTPUT_RANGE

    def __post_init__(self):
        if int(self.n_inputs) != self.n_inputs or self.n_inputs < 1:
            raise DataError(f"n_inputs must be a positive integer, got {self.n_inputs!r}")
        if int(self.n_hidden) != self.n_hidden or self.n_hidden < 1:
            raise DataError(f"n_hidden must be a positive integer, got {self.n_hidden!r}")
        if not self.learning_rate > 0:
            raise DataError(f"learning_rate must be > 0, got {self.learning_rate!r}")
        if not 0 <= self.momentum < 1:
            raise DataError(f"momentum must lie in [0, 1), got {self.momentum!r}")
        if int(self.epochs) != self.epochs or self.epochs < 0:
            raise DataError(f"epochs must be a non-negative integer, got {self.epochs!r}")
        if not self.init_half_width >= 0:
            raise DataError(f"init_half_width must be >= 0, got {self.init_half_width!r}")
        object.__setattr__(self, "n_inputs", int(self.n_inputs))
        object.__setattr__(self, "n_hidden", int(self.n_hidden))
        object.__setattr__(self, "epochs", int(self.epochs))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "learning_rate", float(self.learning_rate))
        object.__setattr__(self, "momentum", float(self.momentum))
        object.__setattr__(self, "init_half_width", float(self.init_half_width))
        object.__setattr__(self, "output_range", tuple(float(v) for v in self.output_range))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["output_range"] = list(self.output_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MlfnConfig":
        d = dict(d)
        if "output_range" in d:
            d["output_range"] = tuple(d["output_range"])
        return cls(**d)


def _ro(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MlfnModel:
    hidden_weights: np.ndarray
    hidden_biases: np.ndarray
    output_weights: np.ndarray
    output_bias: float
    config: MlfnConfig
    norm: NormStats | None = None
    feature_names: tuple[str, ...] = ()
    target_name: str = "target"
    schema_tag: str | None = None
    kind: str = field(default="mlfn", init=False)

    def __post_init__(self):
        cfg = self.config
        W, b, v = _ro(self.hidden_weights), _ro(self.hidden_biases), _ro(self.output_weights)
        if W.shape != (cfg.n_hidden, cfg.n_inputs) or b.shape != (cfg.n_hidden,) or v.shape != (cfg.n_hidden,):
            raise DimensionError("parameter shapes do not match the configuration")
        c = float(self.output_bias)
        if not (np.isfinite(W).all() and np.isfinite(b).all() and np.isfinite(v).all() and np.isfinite(c)):
            raise DataError("model parameters must be finite")
        object.__setattr__(self, "hidden_weights", W)
        object.__setattr__(self, "hidden_biases", b)
        object.__setattr__(self, "output_weights", v)
        object.__setattr__(self, "output_bias", c)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def predict(self, x) -> float:
        return predict(self, x)

    def predict_batch(self, X) -> np.ndarray:
        return predict_batch(self, X)

    def guard_mask(self, X) -> np.ndarray:
        return _guard_mask(self.norm, X)

    def flat_params(self) -> np.ndarray:
        return np.concatenate(
            [self.hidden_weights.ravel(), self.hidden_biases, self.output_weights, [self.output_bias]]
        )


def init(config: MlfnConfig) -> MlfnModel:
    """Seeded uniform initialization on ``[-init_half_width, init_half_width]``."""
    model, _ = _init_with_rng(config)
    return model


def _init_with_rng(config: MlfnConfig):
    rng = np.random.default_rng(config.seed)
    h = config.init_half_width
    W = rng.uniform(-h, h, (config.n_hidden, config.n_inputs))
    b = rng.uniform(-h, h, config.n_hidden)
    v = rng.uniform(-h, h, config.n_hidden)
    c = rng.uniform(-h, h)
    return MlfnModel(W, b, v, c, config), rng


def _check_dim(model: MlfnModel, X: np.ndarray) -> None:
    if X.shape[-1] != model.config.n_inputs:
        raise DimensionError(
            f"expected {model.config.n_inputs} features, got {X.shape[-1]}"
        )


def forward_batch(model: MlfnModel, X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError("expected a 2-D array of normalized inputs")
    _check_dim(model, X)
    return _backend.kernels.mlfn_forward_batch(
        X, model.hidden_weights, model.hidden_biases, model.output_weights, model.output_bias
    )


def forward(model: MlfnModel, x) -> float:
    """Network output in (0, 1) for one normalized input vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionError("expected a 1-D input vector")
    return float(forward_batch(model, x[None, :])[0])


@dataclass(frozen=True)
class Gradient:
    hidden_weights: np.ndarray
    hidden_biases: np.ndarray
    output_weights: np.ndarray
    output_bias: float

    def flat(self) -> np.ndarray:
        return np.concatenate(
            [self.hidden_weights.ravel(), self.hidden_biases, self.output_weights, [self.output_bias]]
        )


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -35.0, 35.0)))


def gradient(model: MlfnModel, x, target: float) -> Gradient:
    """Gradient of ``0.5 * (y - target)**2`` for one normalized sample."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionError("expected a 1-D input vector")
    _check_dim(model, x)
    W, b, v = model.hidden_weights, model.hidden_biases, model.output_weights
    h = _sigmoid(W @ x + b)
    y = float(_sigmoid(v @ h + model.output_bias))
    d_out = (y - target) * y * (1.0 - y)
    d_hid = d_out * v * h * (1.0 - h)
    return Gradient(np.outer(d_hid, x), d_hid, d_out * h, d_out)


@dataclass(frozen=True, eq=False)
class TrainingTrace:
    """Mean squared error in normalized space after each epoch."""

    mse: np.ndarray

    def to_csv_text(self) -> str:
        lines = ["epoch,mse"]
        lines += [f"{e},{float(m)!r}" for e, m in enumerate(self.mse, start=1)]
        return "\n".join(lines) + "\n"


def train(ds: Dataset, config: MlfnConfig, kernels=None) -> tuple[MlfnModel, TrainingTrace]:
    """Fit a network to ``ds`` with per-sample updates.

    Sample order is reshuffled every epoch from the same seeded generator that
    drew the initial weights, so the result is a pure function of
    ``(ds, config)``.
    """
    if ds.n_features != config.n_inputs:
        raise DimensionError(
            f"dataset has {ds.n_features} features, config expects {config.n_inputs}"
        )
    norm = fit_normalizer(ds, config.output_range)
    norm.require_features_nondegenerate()
    X = np.ascontiguousarray(norm.normalize_features(ds.features))
    t = np.ascontiguousarray(norm.normalize_target(ds.targets), dtype=float)

    start, rng = _init_with_rng(config)
    W = start.hidden_weights.copy()
    b = start.hidden_biases.copy()
    v = start.output_weights.copy()
    c = np.array([start.output_bias])
    orders = np.empty((config.epochs, ds.n_rows), dtype=np.intp)
    for e in range(config.epochs):
        orders[e] = rng.permutation(ds.n_rows)

    k = kernels or _backend.kernels
    # divergence is reported through the fail indices, not warnings
    with np.errstate(over="ignore", invalid="ignore"):
        trace, fail_epoch, fail_sample = k.mlfn_train(
            X, t, W, b, v, c, config.learning_rate, config.momentum, orders
        )
    if fail_epoch >= 0:
        raise TrainingDivergedError(fail_epoch + 1, fail_sample + 1)
    model = MlfnModel(
        W, b, v, float(c[0]), config, norm, ds.feature_names, ds.target_name, ds.schema_tag
    )
    return model, TrainingTrace(_ro(trace))


def _guard_mask(norm: NormStats | None, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if norm is None:
        return np.ones(X.shape[0], dtype=bool)
    low, high = norm.guard_bounds(GUARD_WIDTH)
    return ((X >= low) & (X <= high)).all(axis=1)


def check_guard(norm: NormStats, X, names=()) -> None:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    low, high = norm.guard_bounds(GUARD_WIDTH)
    bad = (X < low) | (X > high)
    if bad.any():
        r, j = np.argwhere(bad)[0]
        name = names[j] if j < len(names) else f"#{j}"
        raise ExtrapolationError(name, float(X[r, j]), float(low[j]), float(high[j]))


def predict_batch(model: MlfnModel, X, check: bool = True) -> np.ndarray:
    """Predictions in target units for raw feature rows."""
    if model.norm is None:
        raise DataError("model carries no normalization statistics; train it first")
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError("expected a 2-D array of feature rows")
    _check_dim(model, X)
    if check:
        check_guard(model.norm, X, model.feature_names)
    y = forward_batch(model, model.norm.normalize_features(X))
    return model.norm.denormalize_target(y)


def predict(model: MlfnModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionError("expected a 1-D feature vector")
    return float(predict_batch(model, x[None, :])[0])
