"""Exhaustive screening of a discretized design space through a surrogate.

Candidates are numbered in lexicographic order with the last variable varying
fastest, so a candidate index is a mixed-radix number whose digits select one
value per variable. The index range is cut into fixed-size chunks; each chunk
yields a local top-k and the local lists are merged by ``(key, index)``. Chunk
boundaries do not depend on the worker count, which keeps reports
byte-identical for any degree of parallelism.
"""

from __future__ import annotations

import hashlib
import heapq
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from . import persistence
from .errors import CandidateOverflowError, DataError, DimensionError

MAX_CANDIDATES = 2**63 - 1
DEFAULT_CHUNK = 1 << 14


@dataclass(frozen=True, eq=False)
class DesignSpace:
    names: tuple[str, ...]
    values: tuple[np.ndarray, ...]

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        if not names or len(names) != len(self.values):
            raise DataError("design space needs one value list per variable")
        if len(set(names)) != len(names):
            raise DataError(f"duplicate variable names in {names}")
        vals = []
        for name, v in zip(names, self.values):
            a = np.array(v, dtype=float).ravel()
            if a.size == 0:
                raise DataError(f"variable {name!r} has no values")
            if not np.isfinite(a).all():
                raise DataError(f"variable {name!r} has non-finite values")
            if (np.diff(a) <= 0).any():
                raise DataError(f"values of {name!r} must be strictly ascending")
            a.setflags(write=False)
            vals.append(a)
        size = 1
        for a in vals:
            size *= a.size
        if size > MAX_CANDIDATES:
            raise CandidateOverflowError(
                f"design space has {size} candidates, more than the 64-bit limit {MAX_CANDIDATES}"
            )
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", tuple(vals))

    @classmethod
    def from_pairs(cls, pairs) -> "DesignSpace":
        pairs = list(pairs)
        return cls(tuple(n for n, _ in pairs), tuple(v for _, v in pairs))

    @classmethod
    def from_config(cls, variables) -> "DesignSpace":
        """Build from ``[{"name", "values"} | {"name", "min", "step", "max"}, ...]``."""
        pairs = []
        for spec in variables:
            try:
                name = spec["name"]
                if "values" in spec:
                    vals = [float(v) for v in spec["values"]]
                else:
                    lo, step, hi = float(spec["min"]), float(spec["step"]), float(spec["max"])
                    if not step > 0 or hi < lo:
                        raise DataError(f"variable {name!r}: need step > 0 and max >= min")
                    count = math.floor((hi - lo) / step + 1e-9) + 1
                    vals = [lo + i * step for i in range(count)]
            except (KeyError, TypeError) as exc:
                raise DataError(f"malformed design variable {spec!r}: {exc}") from None
            pairs.append((name, vals))
        return cls.from_pairs(pairs)

    @property
    def radices(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.values)

    @property
    def size(self) -> int:
        return math.prod(self.radices)

    def to_config(self) -> list[dict]:
        return [{"name": n, "values": a.tolist()} for n, a in zip(self.names, self.values)]

    def digest(self) -> str:
        text = json.dumps(self.to_config(), separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def digits(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.size:
            raise DataError(f"candidate index {index} out of range [0, {self.size})")
        out = []
        for r in reversed(self.radices):
            index, d = divmod(index, r)
            out.append(d)
        return tuple(reversed(out))

    def candidate(self, index: int) -> tuple[float, ...]:
        return tuple(float(a[d]) for a, d in zip(self.values, self.digits(index)))

    def decode(self, indices) -> np.ndarray:
        """Feature matrix for an array of candidate indices."""
        rem = np.array(indices, dtype=np.int64)
        X = np.empty((rem.size, len(self.names)))
        for j in range(len(self.names) - 1, -1, -1):
            r = self.values[j].size
            X[:, j] = self.values[j][rem % r]
            rem //= r
        return X


def enumerate_candidates(space: DesignSpace) -> Iterator[tuple[int, tuple[float, ...]]]:
    """Stream ``(index, candidate)`` pairs without materializing the grid."""
    return enumerate(itertools.product(*(a.tolist() for a in space.values)))


def parse_direction(direction: str) -> str:
    d = str(direction).strip().lower()
    if d in ("max", "maximize", "maximise"):
        return "maximize"
    if d in ("min", "minimize", "minimise"):
        return "minimize"
    raise DataError(f"direction must be 'max' or 'min', got {direction!r}")


class FunctionSurrogate:
    """Wrap a vectorized function of the feature matrix as a surrogate."""

    kind = "function"

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], feature_names, name: str = "function"):
        self.fn = fn
        self.feature_names = tuple(feature_names)
        self.name = name

    def predict_batch(self, X) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(X, dtype=float)), dtype=float).reshape(-1)

    def predict(self, x) -> float:
        return float(self.predict_batch(np.asarray(x, dtype=float)[None, :])[0])


def describe_surrogate(model) -> tuple[str, dict]:
    if getattr(model, "kind", None) in ("mlfn", "grnn"):
        return persistence.digest(model), {"kind": model.kind, **model.config.to_dict()}
    return f"unhashed:{getattr(model, 'name', type(model).__name__)}", {"kind": getattr(model, "kind", "custom")}


@dataclass(frozen=True)
class RankedCandidate:
    rank: int
    index: int
    values: tuple[float, ...]
    predicted: float


@dataclass(frozen=True)
class ScreeningReport:
    names: tuple[str, ...]
    target_name: str
    candidates: tuple[RankedCandidate, ...]
    direction: str
    k: int
    total: int
    evaluated: int
    excluded: int
    model_digest: str
    model_config: dict
    space_digest: str

    def to_csv_text(self) -> str:
        lines = ["rank,index," + ",".join(self.names) + f",predicted_{self.target_name}"]
        for c in self.candidates:
            vals = ",".join(repr(v) for v in c.values)
            lines.append(f"{c.rank},{c.index},{vals},{c.predicted!r}")
        return "\n".join(lines) + "\n"

    def summary(self) -> str:
        cfg = json.dumps(self.model_config, sort_keys=True)
        lines = [
            f"direction: {self.direction}",
            f"requested top: {self.k}",
            f"candidates in space: {self.total}",
            f"evaluated: {self.evaluated}",
            f"excluded (outside extrapolation guard): {self.excluded}",
            f"model sha256: {self.model_digest}",
            f"model config: {cfg}",
            f"design space sha256: {self.space_digest}",
        ]
        for c in self.candidates:
            desc = ", ".join(f"{n}={v!r}" for n, v in zip(self.names, c.values))
            lines.append(f"#{c.rank} (index {c.index}): {self.target_name} = {c.predicted!r}; {desc}")
        return "\n".join(lines) + "\n"


def _check_names(model, space: DesignSpace) -> None:
    names = tuple(getattr(model, "feature_names", ()))
    if names != space.names:
        raise DimensionError(
            f"design variables {list(space.names)} do not match model features {list(names)}"
        )


def _screen_chunk(model, space: DesignSpace, start: int, stop: int, k: int, sign: float):
    idx = np.arange(start, stop, dtype=np.int64)
    X = space.decode(idx)
    guard = getattr(model, "guard_mask", None)
    if guard is not None:
        mask = guard(X)
        excluded = int((~mask).sum())
        if excluded:
            idx, X = idx[mask], X[mask]
    else:
        excluded = 0
    if idx.size == 0:
        return [], 0, excluded
    preds = np.asarray(model.predict_batch(X), dtype=float)
    keys = sign * preds
    if idx.size > k:
        kth = np.partition(keys, k - 1)[k - 1]
        keep = np.flatnonzero(keys <= kth)
        order = keep[np.lexsort((idx[keep], keys[keep]))][:k]
    else:
        order = np.lexsort((idx, keys))
    best = [(float(keys[i]), int(idx[i]), float(preds[i])) for i in order]
    return best, int(idx.size), excluded


def screen(
    model,
    space: DesignSpace,
    direction: str = "maximize",
    k: int = 2,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK,
) -> ScreeningReport:
    """Predict every candidate in ``space`` and keep the best ``k``.

    Candidates outside the model's extrapolation guard are skipped and
    counted in ``excluded``. Ties in the prediction are broken by ascending
    candidate index.
    """
    direction = parse_direction(direction)
    if int(k) != k or k < 1:
        raise DataError(f"k must be a positive integer, got {k!r}")
    if workers < 1 or chunk_size < 1:
        raise DataError("workers and chunk_size must be positive")
    _check_names(model, space)
    sign = -1.0 if direction == "maximize" else 1.0
    total = space.size
    starts = range(0, total, chunk_size)

    def job(start):
        return _screen_chunk(model, space, start, min(start + chunk_size, total), k, sign)

    top: list = []
    evaluated = excluded = 0

    def absorb(results):
        nonlocal top, evaluated, excluded
        for best, n_eval, n_excl in results:
            evaluated += n_eval
            excluded += n_excl
            top = heapq.nsmallest(k, itertools.chain(top, best), key=lambda e: (e[0], e[1]))

    if workers == 1:
        for s in starts:
            absorb([job(s)])
    else:
        wave = workers * 4
        with ThreadPoolExecutor(max_workers=workers) as pool:
            it = iter(starts)
            while True:
                batch = list(itertools.islice(it, wave))
                if not batch:
                    break
                absorb(pool.map(job, batch))

    digest, cfg = describe_surrogate(model)
    ranked = tuple(
        RankedCandidate(r, i, space.candidate(i), p) for r, (_, i, p) in enumerate(top, start=1)
    )
    return ScreeningReport(
        space.names,
        getattr(model, "target_name", "target"),
        ranked,
        direction,
        int(k),
        total,
        evaluated,
        excluded,
        digest,
        cfg,
        space.digest(),
    )


@dataclass(frozen=True)
class OracleSummary:
    true_ranks: tuple[int, ...]
    true_values: tuple[float, ...]
    best_true_value: float
    regret: float
    total: int

    @property
    def best_rank_fraction(self) -> float:
        """True rank of the reported best candidate divided by the grid size."""
        return self.true_ranks[0] / self.total


def verify_against_oracle(
    space: DesignSpace,
    oracle: Callable[[np.ndarray], np.ndarray],
    report: ScreeningReport,
    chunk_size: int = 1 << 16,
) -> OracleSummary:
    """Score a screening report against the true function over the full grid.

    ``oracle`` maps a feature matrix to one value per row. A candidate's true
    rank is one plus the number of candidates with a strictly better true
    value, or an equal value and a smaller index.
    """
    if not report.candidates:
        raise DataError("report has no candidates to verify")
    sign = -1.0 if report.direction == "maximize" else 1.0
    chosen_idx = np.array([c.index for c in report.candidates], dtype=np.int64)
    chosen_keys = sign * np.asarray(oracle(space.decode(chosen_idx)), dtype=float).reshape(-1)
    better = np.zeros(chosen_idx.size, dtype=np.int64)
    best_key = math.inf
    total = space.size
    for start in range(0, total, chunk_size):
        idx = np.arange(start, min(start + chunk_size, total), dtype=np.int64)
        keys = sign * np.asarray(oracle(space.decode(idx)), dtype=float).reshape(-1)
        best_key = min(best_key, float(keys.min()))
        for j, (ck, ci) in enumerate(zip(chosen_keys, chosen_idx)):
            better[j] += int(((keys < ck) | ((keys == ck) & (idx < ci))).sum())
    true_values = tuple(float(sign * k) for k in chosen_keys)
    return OracleSummary(
        tuple(int(b) + 1 for b in better),
        true_values,
        float(sign * best_key),
        float(chosen_keys[0] - best_key),
        total,
    )


def load_screen_config(path) -> dict:
    """Read a screening config file.

    Keys: ``variables`` (required), and optionally ``model`` (path, relative
    to the config file), ``direction``, ``top`` and ``workers``.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such screening config")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or "variables" not in doc:
        raise DataError(f"{path}: screening config needs a 'variables' list")
    out = dict(doc)
    out["space"] = DesignSpace.from_config(doc["variables"])
    if doc.get("model"):
        out["model"] = str((path.parent / doc["model"]).resolve())
    return out
