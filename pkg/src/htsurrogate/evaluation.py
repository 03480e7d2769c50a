"""Metrics, k-fold cross-validation and hyperparameter searches."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from . import grnn, mlfn
from .dataset import Dataset, kfold
from .errors import DataError

Config = mlfn.MlfnConfig | grnn.GrnnConfig


@dataclass(frozen=True)
class ToleranceSpec:
    """Relative error band; targets equal to zero use an absolute band instead."""

    fraction: float = 0.30
    zero_target_epsilon: float = 0.0

    def __post_init__(self):
        if not self.fraction > 0:
            raise DataError(f"tolerance fraction must be > 0, got {self.fraction!r}")
        if not self.zero_target_epsilon >= 0:
            raise DataError("zero_target_epsilon must be >= 0")


def _pair(predictions, targets):
    p = np.asarray(predictions, dtype=float).ravel()
    t = np.asarray(targets, dtype=float).ravel()
    if p.shape != t.shape:
        raise DataError(f"length mismatch: {p.size} predictions vs {t.size} targets")
    if p.size == 0:
        raise DataError("need at least one prediction")
    return p, t


def within_tolerance(predictions, targets, spec: ToleranceSpec = ToleranceSpec()) -> np.ndarray:
    p, t = _pair(predictions, targets)
    band = np.where(t == 0.0, spec.zero_target_epsilon, spec.fraction * np.abs(t))
    return np.abs(p - t) <= band


def tolerance_accuracy(predictions, targets, spec: ToleranceSpec = ToleranceSpec()) -> float:
    """Fraction of predictions within the closed band ``|p - t| <= fraction * |t|``."""
    hits = within_tolerance(predictions, targets, spec)
    return int(hits.sum()) / hits.size


def rmse(predictions, targets) -> float:
    p, t = _pair(predictions, targets)
    d = p - t
    return math.sqrt(float(np.mean(d * d)))


def fit_surrogate(ds: Dataset, config: Config):
    if isinstance(config, mlfn.MlfnConfig):
        if config.n_inputs != ds.n_features:
            config = replace(config, n_inputs=ds.n_features)
        return mlfn.train(ds, config)[0]
    if isinstance(config, grnn.GrnnConfig):
        return grnn.fit(ds, config)
    raise DataError(f"unsupported model configuration {config!r}")


def config_kind(config: Config) -> str:
    return "mlfn" if isinstance(config, mlfn.MlfnConfig) else "grnn"


def _std(values) -> float:
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


@dataclass(frozen=True, eq=False)
class CvReport:
    fold_accuracy: tuple[float, ...]
    fold_rmse: tuple[float, ...]
    fold_sizes: tuple[int, ...]
    predictions: np.ndarray
    k: int
    seed: int
    kind: str
    config: dict

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracy))

    @property
    def std_accuracy(self) -> float:
        return _std(self.fold_accuracy)

    @property
    def mean_rmse(self) -> float:
        return float(np.mean(self.fold_rmse))

    @property
    def std_rmse(self) -> float:
        return _std(self.fold_rmse)

    def to_csv_text(self) -> str:
        lines = ["fold,n_test,accuracy,rmse"]
        for f, (n, a, r) in enumerate(zip(self.fold_sizes, self.fold_accuracy, self.fold_rmse), start=1):
            lines.append(f"{f},{n},{a!r},{r!r}")
        return "\n".join(lines) + "\n"

    def summary(self) -> str:
        return (
            f"{self.k}-fold cross-validation (seed {self.seed}, {self.kind})\n"
            f"mean accuracy {self.mean_accuracy:.6f} (std {self.std_accuracy:.6f})\n"
            f"mean rmse {self.mean_rmse:.6g} (std {self.std_rmse:.6g})\n"
        )


def _run_parallel(fn, items, workers: int):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def cross_validate(
    ds: Dataset,
    config: Config,
    k: int = 5,
    seed: int = 0,
    spec: ToleranceSpec = ToleranceSpec(),
    workers: int = 1,
) -> CvReport:
    """Train on each fold's complement and score the held-out fold.

    Normalization is refit on every training part. Folds may run on worker
    threads; results are collected in fold order.
    """
    plan = kfold(ds, k, seed)

    def run_fold(f):
        test_idx = plan.fold_indices(f)
        model = fit_surrogate(ds.subset(plan.train_indices(f)), config)
        preds = model.predict_batch(ds.features[test_idx])
        return test_idx, preds

    results = _run_parallel(run_fold, range(plan.k), workers)
    oof = np.full(ds.n_rows, np.nan)
    acc, err, sizes = [], [], []
    for test_idx, preds in results:
        oof[test_idx] = preds
        acc.append(tolerance_accuracy(preds, ds.targets[test_idx], spec))
        err.append(rmse(preds, ds.targets[test_idx]))
        sizes.append(len(test_idx))
    oof.setflags(write=False)
    return CvReport(
        tuple(acc), tuple(err), tuple(sizes), oof, plan.k, plan.seed,
        config_kind(config), config.to_dict(),
    )


@dataclass(frozen=True)
class SweepReport:
    axis: str
    values: tuple
    mean_accuracy: tuple[float, ...]
    std_accuracy: tuple[float, ...]
    mean_rmse: tuple[float, ...]

    @property
    def best_value(self):
        best = min(range(len(self.values)), key=lambda i: (-self.mean_accuracy[i], self.values[i]))
        return self.values[best]

    def to_csv_text(self) -> str:
        lines = [f"{self.axis},mean_accuracy,std_accuracy,mean_rmse"]
        for row in zip(self.values, self.mean_accuracy, self.std_accuracy, self.mean_rmse):
            lines.append(",".join(repr(v) for v in row))
        return "\n".join(lines) + "\n"


def sweep_hidden_nodes(
    ds: Dataset,
    base: mlfn.MlfnConfig,
    node_values: Sequence[int],
    k: int = 5,
    seed: int = 0,
    spec: ToleranceSpec = ToleranceSpec(),
    workers: int = 1,
) -> SweepReport:
    values = [int(v) for v in node_values]
    if not values or min(values) < 1:
        raise DataError(f"node values must be a non-empty list of positive integers, got {node_values!r}")
    reports = [
        cross_validate(ds, replace(base, n_inputs=ds.n_features, n_hidden=v), k, seed, spec, workers)
        for v in values
    ]
    return SweepReport(
        "hidden_nodes",
        tuple(values),
        tuple(r.mean_accuracy for r in reports),
        tuple(r.std_accuracy for r in reports),
        tuple(r.mean_rmse for r in reports),
    )


AXIS_FIELDS = {
    "learning_rate": "learning_rate",
    "lr": "learning_rate",
    "hidden_nodes": "n_hidden",
    "n_hidden": "n_hidden",
    "hidden": "n_hidden",
    "epochs": "epochs",
    "momentum": "momentum",
    "init_half_width": "init_half_width",
    "sigma": "sigma",
}
INTEGER_FIELDS = {"n_hidden", "epochs"}
DEFAULT_MLFN_AXES = (
    ("learning_rate", (0.1, 0.3, 0.5, 0.7, 0.9)),
    ("hidden_nodes", (3, 5, 7, 9, 11)),
    ("epochs", (50, 100, 200, 400)),
    ("momentum", (0.0, 0.5, 0.9)),
)
DEFAULT_GRNN_AXES = (("sigma", (0.01, 0.02, 0.05, 0.1, 0.2, 0.5)),)


@dataclass(frozen=True)
class SearchStep:
    axis: str
    value: float
    score: float
    chosen: bool


@dataclass(frozen=True)
class SearchResult:
    best: object
    best_score: float
    trace: tuple[SearchStep, ...]

    def trace_csv_text(self) -> str:
        lines = ["axis,value,mean_accuracy,chosen"]
        for s in self.trace:
            lines.append(f"{s.axis},{s.value!r},{s.score!r},{int(s.chosen)}")
        return "\n".join(lines) + "\n"


def coordinate_search(start: dict, axes, score: Callable[[dict], float]) -> SearchResult:
    """One ordered pass of one-at-a-time search.

    For each axis the other coordinates stay fixed, every listed value is
    scored, and the best is kept before moving on. Ties go to the value
    closest to the starting coordinate, then to the smaller value.
    """
    axes = [(name, list(values)) for name, values in axes]
    if not axes or any(not values for _, values in axes):
        raise DataError("search needs at least one axis and every axis needs values")
    cache: dict = {}

    def cached(point):
        key = tuple(sorted(point.items()))
        if key not in cache:
            cache[key] = float(score(dict(point)))
        return cache[key]

    point = dict(start)
    trace = []
    best_score = None
    for name, values in axes:
        scored = []
        for v in values:
            candidate = {**point, name: v}
            scored.append((v, cached(candidate)))
        origin = start[name]
        best_v, best_score = min(scored, key=lambda vs: (-vs[1], abs(vs[0] - origin), vs[0]))
        trace += [SearchStep(name, v, s, v == best_v) for v, s in scored]
        point[name] = best_v
    return SearchResult(point, best_score, tuple(trace))


def resolve_axes(config: Config, axes) -> list[tuple[str, list]]:
    out = []
    for name, values in axes:
        field_name = AXIS_FIELDS.get(name)
        if field_name is None or not hasattr(config, field_name):
            raise DataError(f"unknown search axis {name!r} for {config_kind(config)} models")
        cast = int if field_name in INTEGER_FIELDS else float
        out.append((field_name, [cast(v) for v in values]))
    return out


def control_variable_search(
    ds: Dataset,
    axes,
    start: Config,
    k: int = 5,
    seed: int = 0,
    spec: ToleranceSpec = ToleranceSpec(),
    workers: int = 1,
) -> SearchResult:
    """Coordinate search over configuration fields scored by mean CV accuracy.

    Returns a ``SearchResult`` whose ``best`` is a configuration object.
    """
    if isinstance(start, mlfn.MlfnConfig) and start.n_inputs != ds.n_features:
        start = replace(start, n_inputs=ds.n_features)
    field_axes = resolve_axes(start, axes)
    origin = {name: getattr(start, name) for name, _ in field_axes}

    def score(point):
        return cross_validate(ds, replace(start, **point), k, seed, spec, workers).mean_accuracy

    result = coordinate_search(origin, field_axes, score)
    return SearchResult(replace(start, **result.best), result.best_score, result.trace)
