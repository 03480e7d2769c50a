"""Kernel backend selection.

The compiled ``_ckernels`` module is used when it imports; otherwise the numpy
fallback. Set ``HTSURROGATE_BACKEND=python`` to force the fallback.
"""

import importlib
import os

from . import _pykernels

AVAILABLE = {"python": _pykernels}
try:
    AVAILABLE["cython"] = importlib.import_module("htsurrogate._ckernels")
except ImportError:  # extension not built
    pass


def load(name: str):
    try:
        return AVAILABLE[name]
    except KeyError:
        raise ImportError(f"kernel backend {name!r} is not available") from None


_requested = os.environ.get("HTSURROGATE_BACKEND", "").strip().lower()
if _requested:
    NAME = _requested
    kernels = load(_requested)
else:
    NAME = "cython" if "cython" in AVAILABLE else "python"
    kernels = AVAILABLE[NAME]
