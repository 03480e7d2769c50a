"""Tabular datasets: CSV ingestion, min-max normalization, splits and folds."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import CsvFormatError, DataError, DegenerateColumnError

DEFAULT_OUTPUT_RANGE = (0.1, 0.9)


@dataclass(frozen=True)
class Schema:
    name: str
    feature_names: tuple[str, ...]
    target_name: str
    units: str = ""


SCHEMAS = {
    "iaq": Schema(
        "iaq",
        ("pm25_in", "pm25_out", "pm10_in", "pm10_out", "temp", "rh", "co2"),
        "fungi",
        "CFU/m3",
    ),
    "collector": Schema(
        "collector",
        (
            "tube_length",
            "tube_number",
            "tube_center_distance",
            "tank_volume",
            "collector_area",
            "tilt_angle",
        ),
        "hcr",
    ),
}


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Named feature columns plus one real-valued target column.

    ``features`` has shape ``(n_rows, n_features)``; ``targets`` has shape
    ``(n_rows,)``. Both arrays are read-only.
    """

    feature_names: tuple[str, ...]
    target_name: str
    features: np.ndarray
    targets: np.ndarray
    schema_tag: str | None = None

    def __post_init__(self):
        names = tuple(str(n) for n in self.feature_names)
        object.__setattr__(self, "feature_names", names)
        X = _frozen(self.features)
        t = _frozen(self.targets)
        if X.ndim != 2 or t.ndim != 1:
            raise DataError("features must be 2-D and targets 1-D")
        if X.shape[1] != len(names):
            raise DataError(
                f"feature vectors have length {X.shape[1]}, expected {len(names)}"
            )
        if X.shape[0] != t.shape[0]:
            raise DataError("features and targets have different row counts")
        if X.shape[0] < 1:
            raise DataError("dataset has no rows")
        if any(not n for n in names) or not self.target_name:
            raise DataError("column names must be non-empty")
        all_names = names + (self.target_name,)
        if len(set(all_names)) != len(all_names):
            raise DataError(f"duplicate column names in {all_names}")
        if not (np.isfinite(X).all() and np.isfinite(t).all()):
            raise DataError("dataset contains non-finite values")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", t)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def columns(self) -> tuple[str, ...]:
        return self.feature_names + (self.target_name,)

    @property
    def units(self) -> str:
        schema = SCHEMAS.get(self.schema_tag or "")
        return schema.units if schema else ""

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(
            self.feature_names,
            self.target_name,
            self.features[idx],
            self.targets[idx],
            self.schema_tag,
        )

    def to_csv_text(self) -> str:
        lines = [",".join(self.columns)]
        for row, t in zip(self.features, self.targets):
            lines.append(",".join(repr(float(v)) for v in row) + "," + repr(float(t)))
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_csv_text().encode()).hexdigest()


def write_csv(ds: Dataset, path) -> None:
    Path(path).write_text(ds.to_csv_text(), encoding="utf-8")


def _match_schema(names: Sequence[str]) -> str | None:
    for schema in SCHEMAS.values():
        if tuple(names) == schema.feature_names + (schema.target_name,):
            return schema.name
    return None


def load_csv(path, schema: str | Schema | None = None, target: str | None = None) -> Dataset:
    """Read a numeric CSV file with a header row.

    The last column is the target unless ``target`` names another one. When
    ``schema`` is given the header must list exactly that schema's columns.
    Line and column numbers in errors are 1-based and count the header as
    line 1.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise CsvFormatError(path, 1, None, "empty file")
    header = [h.strip() for h in lines[0].split(",")]
    if any(not h for h in header):
        raise CsvFormatError(path, 1, None, "empty column name in header")
    seen = set()
    for col, h in enumerate(header, start=1):
        if h in seen:
            raise CsvFormatError(path, 1, col, f"duplicate column name {h!r}")
        seen.add(h)
    if len(header) < 2:
        raise CsvFormatError(path, 1, None, "need at least one feature and one target column")
    if len(lines) < 2:
        raise CsvFormatError(path, 2, None, "no data rows")

    values = np.empty((len(lines) - 1, len(header)))
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise CsvFormatError(
                path, lineno, None, f"expected {len(header)} fields, found {len(cells)}"
            )
        for col, cell in enumerate(cells, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise CsvFormatError(path, lineno, col, f"non-numeric value {cell.strip()!r}") from None
            if not math.isfinite(v):
                raise CsvFormatError(path, lineno, col, f"non-finite value {cell.strip()!r}")
            values[lineno - 2, col - 1] = v

    target_col = len(header) - 1
    if target is not None:
        if target not in header:
            raise DataError(f"{path}: target column {target!r} not in header")
        target_col = header.index(target)
    feature_cols = [i for i in range(len(header)) if i != target_col]
    feature_names = tuple(header[i] for i in feature_cols)
    target_name = header[target_col]

    tag = None
    if schema is not None:
        sch = SCHEMAS[schema] if isinstance(schema, str) else schema
        if feature_names != sch.feature_names or target_name != sch.target_name:
            raise DataError(
                f"{path}: header {header} does not match schema {sch.name!r} "
                f"({list(sch.feature_names) + [sch.target_name]})"
            )
        tag = sch.name
    else:
        tag = _match_schema(feature_names + (target_name,))

    return Dataset(feature_names, target_name, values[:, feature_cols], values[:, target_col], tag)


@dataclass(frozen=True, eq=False)
class NormStats:
    """Per-column extrema for the features followed by the target."""

    mins: np.ndarray
    maxs: np.ndarray
    output_range: tuple[float, float] = DEFAULT_OUTPUT_RANGE
    names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        lo, hi = (float(v) for v in self.output_range)
        if not lo < hi:
            raise DataError(f"output range must satisfy lo < hi, got {self.output_range}")
        mins, maxs = _frozen(self.mins), _frozen(self.maxs)
        if mins.shape != maxs.shape or mins.ndim != 1:
            raise DataError("mins and maxs must be equal-length vectors")
        if (maxs < mins).any():
            raise DataError("column max is below column min")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)
        object.__setattr__(self, "output_range", (lo, hi))
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def degenerate(self) -> np.ndarray:
        return self.maxs == self.mins

    @property
    def n_features(self) -> int:
        return len(self.mins) - 1

    def column_name(self, j: int) -> str:
        return self.names[j] if j < len(self.names) else f"#{j}"

    def require_features_nondegenerate(self) -> None:
        bad = np.flatnonzero(self.degenerate[:-1])
        if bad.size:
            raise DegenerateColumnError(self.column_name(int(bad[0])))

    def normalize_features(self, X) -> np.ndarray:
        self.require_features_nondegenerate()
        lo, hi = self.output_range
        mn, mx = self.mins[:-1], self.maxs[:-1]
        return lo + (np.asarray(X, dtype=float) - mn) * ((hi - lo) / (mx - mn))

    def normalize_target(self, t):
        # a constant target maps onto the centre of the output range with unit span
        lo, hi = self.output_range
        mn, mx = self.mins[-1], self.maxs[-1]
        if mx == mn:
            return 0.5 * (lo + hi) + (np.asarray(t, dtype=float) - mn) * (hi - lo)
        return lo + (np.asarray(t, dtype=float) - mn) * ((hi - lo) / (mx - mn))

    def denormalize_target(self, y):
        lo, hi = self.output_range
        mn, mx = self.mins[-1], self.maxs[-1]
        if mx == mn:
            return mn + (np.asarray(y, dtype=float) - 0.5 * (lo + hi)) / (hi - lo)
        return mn + (np.asarray(y, dtype=float) - lo) * ((mx - mn) / (hi - lo))

    def guard_bounds(self, width: float = 10.0) -> tuple[np.ndarray, np.ndarray]:
        span = self.maxs[:-1] - self.mins[:-1]
        return self.mins[:-1] - width * span, self.maxs[:-1] + width * span

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "mins": [float(v) for v in self.mins],
            "maxs": [float(v) for v in self.maxs],
            "output_range": list(self.output_range),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(
            np.array(d["mins"], dtype=float),
            np.array(d["maxs"], dtype=float),
            tuple(d["output_range"]),
            tuple(d.get("names", ())),
        )


def fit_normalizer(ds: Dataset, output_range=DEFAULT_OUTPUT_RANGE) -> NormStats:
    data = np.column_stack([ds.features, ds.targets])
    return NormStats(data.min(axis=0), data.max(axis=0), tuple(output_range), ds.columns)


def normalize(value, col_min: float, col_max: float, output_range=DEFAULT_OUTPUT_RANGE):
    """Affine map of ``[col_min, col_max]`` onto ``output_range``."""
    if col_max == col_min:
        raise DegenerateColumnError(f"[{col_min}, {col_max}]")
    lo, hi = output_range
    return lo + (value - col_min) * ((hi - lo) / (col_max - col_min))


def denormalize(value, col_min: float, col_max: float, output_range=DEFAULT_OUTPUT_RANGE):
    if col_max == col_min:
        raise DegenerateColumnError(f"[{col_min}, {col_max}]")
    lo, hi = output_range
    return col_min + (value - lo) * ((col_max - col_min) / (hi - lo))


@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "assignments", _frozen(self.assignments, dtype=np.intp))

    def fold_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    @property
    def sizes(self) -> list[int]:
        return np.bincount(self.assignments, minlength=self.k).tolist()


def kfold(ds_or_n, k: int, seed: int = 0) -> FoldPlan:
    """Seeded shuffle, then contiguous assignment.

    The first ``n % k`` folds receive one extra row.
    """
    n = ds_or_n if isinstance(ds_or_n, (int, np.integer)) else ds_or_n.n_rows
    if not isinstance(k, (int, np.integer)) or not 2 <= k <= n:
        raise DataError(f"k must be an integer in [2, {n}], got {k!r}")
    perm = np.random.default_rng(seed).permutation(n)
    base, extra = divmod(n, k)
    sizes = [base + (1 if f < extra else 0) for f in range(k)]
    assignments = np.empty(n, dtype=np.intp)
    assignments[perm] = np.repeat(np.arange(k), sizes)
    return FoldPlan(int(k), assignments, int(seed))


def split(ds: Dataset, test_fraction: float = 0.2, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Random train/test split; the test size is ``test_fraction * n`` rounded half up."""
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test_fraction must lie in (0, 1), got {test_fraction!r}")
    n = ds.n_rows
    n_test = math.floor(test_fraction * n + 0.5)
    if n_test < 1 or n_test > n - 1:
        raise DataError(
            f"test_fraction {test_fraction} on {n} rows leaves an empty train or test part"
        )
    perm = np.random.default_rng(seed).permutation(n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    return ds.subset(train_idx), ds.subset(test_idx)
