"""General regression neural network (Gaussian Nadaraya-Watson smoother)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .dataset import DEFAULT_OUTPUT_RANGE, Dataset, NormStats, fit_normalizer
from .errors import DataError, DimensionError
from .mlfn import _guard_mask, check_guard


@dataclass(frozen=True)
class GrnnConfig:
    sigma: float = 0.1
    output_range: tuple[float, float] = DEFAULT_OUTPUT_RANGE

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise DataError(f"sigma must be a finite positive number, got {self.sigma!r}")
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "output_range", tuple(float(v) for v in self.output_range))

    def to_dict(self) -> dict:
        return {"sigma": self.sigma, "output_range": list(self.output_range)}

    @classmethod
    def from_dict(cls, d: dict) -> "GrnnConfig":
        d = dict(d)
        if "output_range" in d:
            d["output_range"] = tuple(d["output_range"])
        return cls(**d)


@dataclass(frozen=True, eq=False)
class GrnnModel:
    """Stored exemplars in normalized space and the kernel width ``sigma``."""

    features: np.ndarray
    targets: np.ndarray
    sigma: float
    norm: NormStats
    feature_names: tuple[str, ...] = ()
    target_name: str = "target"
    schema_tag: str | None = None
    kind: str = field(default="grnn", init=False)

    def __post_init__(self):
        E = np.ascontiguousarray(self.features, dtype=float)
        T = np.ascontiguousarray(self.targets, dtype=float)
        if E.ndim != 2 or T.shape != (E.shape[0],) or E.shape[0] < 1:
            raise DataError("GRNN needs at least one exemplar with matching targets")
        if not (np.isfinite(E).all() and np.isfinite(T).all()):
            raise DataError("exemplars must be finite")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise DataError(f"sigma must be a finite positive number, got {self.sigma!r}")
        E.setflags(write=False)
        T.setflags(write=False)
        object.__setattr__(self, "features", E)
        object.__setattr__(self, "targets", T)
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def config(self) -> GrnnConfig:
        return GrnnConfig(self.sigma, self.norm.output_range)

    @property
    def n_inputs(self) -> int:
        return self.features.shape[1]

    def predict(self, x) -> float:
        return predict(self, x)

    def predict_batch(self, X) -> np.ndarray:
        return predict_batch(self, X)

    def guard_mask(self, X) -> np.ndarray:
        return _guard_mask(self.norm, X)


def fit(ds: Dataset, sigma: float | GrnnConfig) -> GrnnModel:
    cfg = sigma if isinstance(sigma, GrnnConfig) else GrnnConfig(sigma)
    norm = fit_normalizer(ds, cfg.output_range)
    norm.require_features_nondegenerate()
    return GrnnModel(
        norm.normalize_features(ds.features),
        norm.normalize_target(ds.targets),
        cfg.sigma,
        norm,
        ds.feature_names,
        ds.target_name,
        ds.schema_tag,
    )


def predict_normalized(model: GrnnModel, Q) -> np.ndarray:
    """Kernel-weighted mean of normalized targets for normalized queries ``Q``."""
    Q = np.ascontiguousarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[1] != model.n_inputs:
        raise DimensionError(f"expected rows of {model.n_inputs} features")
    return _backend.kernels.grnn_predict_batch(Q, model.features, model.targets, model.sigma)


def predict_batch(model: GrnnModel, X, check: bool = True) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_inputs:
        raise DimensionError(f"expected rows of {model.n_inputs} features")
    if check:
        check_guard(model.norm, X, model.feature_names)
    y = predict_normalized(model, model.norm.normalize_features(X))
    return model.norm.denormalize_target(y)


def predict(model: GrnnModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionError("expected a 1-D feature vector")
    return float(predict_batch(model, x[None, :])[0])


@dataclass(frozen=True)
class SigmaSelection:
    best_sigma: float
    sigmas: tuple[float, ...]
    scores: tuple[float, ...]


def select_sigma(ds: Dataset, sigma_grid, k: int = 5, seed: int = 0, tolerance=None, workers: int = 1) -> SigmaSelection:
    """Pick the grid sigma with the best mean k-fold tolerance accuracy.

    Ties go to the smaller sigma.
    """
    from .evaluation import ToleranceSpec, cross_validate

    grid = [float(s) for s in sigma_grid]
    if not grid or any(not (np.isfinite(s) and s > 0) for s in grid):
        raise DataError(f"sigma grid must be non-empty and positive, got {sigma_grid!r}")
    tol = tolerance or ToleranceSpec()
    scores = [cross_validate(ds, GrnnConfig(s), k, seed, tol, workers).mean_accuracy for s in grid]
    best = min(range(len(grid)), key=lambda i: (-scores[i], grid[i]))
    return SigmaSelection(grid[best], tuple(grid), tuple(scores))
