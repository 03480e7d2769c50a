"""Synthetic datasets with known ground truth.

The measured fungi and solar-collector datasets are not available, so these
generators produce stand-ins on the same column schemas. Each schema has a
smooth, positive ground-truth function and per-feature sampling ranges;
observations carry multiplicative Gaussian noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dataset import SCHEMAS, Dataset
from .errors import DataError


def collector_hcr(X) -> np.ndarray:
    """Heat collection rate of an evacuated-tube collector, arbitrary units.

    Columns follow ``SCHEMAS["collector"]``. Absorber size saturates, tank
    storage saturates, and both the tube spacing and the tilt angle have an
    interior optimum.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    length, number, spacing, volume, area, tilt = X.T
    absorber = 1.0 - np.exp(-(length * number) / 30.0)
    aperture = area**0.6
    spacing_eff = 1.0 - 0.5 * ((spacing - 76.0) / 30.0) ** 2
    storage = 0.6 + 0.4 * (1.0 - np.exp(-volume / 150.0))
    incidence = np.cos(np.radians(tilt - 43.0)) ** 2
    return 100.0 * absorber * aperture * spacing_eff * storage * incidence


def iaq_fungi(X) -> np.ndarray:
    """Indoor culturable fungi concentration, CFU/m3; columns per ``SCHEMAS["iaq"]``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    pm25_in, pm25_out, pm10_in, pm10_out, temp, rh, co2 = X.T
    particles = 0.6 * pm10_in + 0.25 * pm10_out + 0.3 * pm25_in + 0.1 * pm25_out
    humidity = np.exp((rh - 55.0) / 25.0)
    warmth = np.exp(-(((temp - 24.0) / 6.0) ** 2))
    occupancy = 1.0 + 0.3 * np.log(co2 / 400.0)
    return 150.0 + 2.5 * particles * humidity * warmth * occupancy


@dataclass(frozen=True)
class Generator:
    schema: str
    truth: Callable[[np.ndarray], np.ndarray]
    ranges: tuple[tuple[float, float], ...]
    integer: tuple[bool, ...]


GENERATORS = {
    "collector": Generator(
        "collector",
        collector_hcr,
        ((1.5, 2.1), (10, 30), (60.0, 90.0), (80.0, 300.0), (1.0, 4.0), (20.0, 60.0)),
        (False, True, False, False, False, False),
    ),
    "iaq": Generator(
        "iaq",
        iaq_fungi,
        ((10.0, 150.0), (10.0, 300.0), (20.0, 250.0), (20.0, 400.0), (15.0, 30.0), (20.0, 90.0), (400.0, 2000.0)),
        (False,) * 7,
    ),
}


def get_generator(schema: str) -> Generator:
    try:
        return GENERATORS[schema]
    except KeyError:
        raise DataError(f"unknown schema {schema!r}; choose from {sorted(GENERATORS)}") from None


def generate(schema: str, n_rows: int, noise: float = 0.02, seed: int = 0) -> Dataset:
    """Draw ``n_rows`` uniform samples over the schema ranges.

    Targets are ``truth(x) * (1 + noise * N(0, 1))``.
    """
    gen = get_generator(schema)
    if n_rows < 1:
        raise DataError("n_rows must be positive")
    if noise < 0:
        raise DataError("noise must be non-negative")
    rng = np.random.default_rng(seed)
    cols = []
    for (lo, hi), is_int in zip(gen.ranges, gen.integer):
        if is_int:
            cols.append(rng.integers(int(lo), int(hi), endpoint=True, size=n_rows).astype(float))
        else:
            cols.append(rng.uniform(lo, hi, n_rows))
    X = np.column_stack(cols)
    y = gen.truth(X) * (1.0 + noise * rng.standard_normal(n_rows))
    sch = SCHEMAS[schema]
    return Dataset(sch.feature_names, sch.target_name, X, y, schema)


def default_space_config(schema: str, levels: int = 7) -> dict:
    """Evenly spaced grid over the schema ranges, as a screening config dict."""
    gen = get_generator(schema)
    if levels < 1:
        raise DataError("levels must be positive")
    variables = []
    for name, (lo, hi), is_int in zip(SCHEMAS[schema].feature_names, gen.ranges, gen.integer):
        vals = np.linspace(lo, hi, levels) if levels > 1 else np.array([lo])
        if is_int:
            vals = np.unique(np.round(vals))
        variables.append({"name": name, "values": [float(v) for v in vals]})
    return {"variables": variables}
