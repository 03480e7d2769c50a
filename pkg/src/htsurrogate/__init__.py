"""Neural-network surrogates and exhaustive design-space screening.

Train a one-hidden-layer sigmoid network (``mlfn``) or a general regression
network (``grnn``) on tabular measurements, then rank every combination of
discretized design variables through the trained model (``hts``).
"""

from ._backend import NAME as KERNEL_BACKEND
from .dataset import Dataset, NormStats, fit_normalizer, kfold, load_csv, split, write_csv
from .evaluation import (
    ToleranceSpec,
    control_variable_search,
    cross_validate,
    rmse,
    sweep_hidden_nodes,
    tolerance_accuracy,
)
from .grnn import GrnnConfig, GrnnModel
from .hts import DesignSpace, FunctionSurrogate, screen, verify_against_oracle
from .mlfn import MlfnConfig, MlfnModel
from .persistence import load as load_model
from .persistence import save as save_model

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "Dataset",
    "DesignSpace",
    "FunctionSurrogate",
    "GrnnConfig",
    "GrnnModel",
    "MlfnConfig",
    "MlfnModel",
    "NormStats",
    "ToleranceSpec",
    "control_variable_search",
    "cross_validate",
    "fit_normalizer",
    "kfold",
    "load_csv",
    "load_model",
    "rmse",
    "save_model",
    "screen",
    "split",
    "sweep_hidden_nodes",
    "tolerance_accuracy",
    "verify_against_oracle",
    "write_csv",
]
