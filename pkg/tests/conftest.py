import numpy as np
import pytest

from htsurrogate import _backend
from htsurrogate.dataset import Dataset
from htsurrogate.synthetic import generate

ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        name, ok, detail = ACCEPTANCE_RESULTS[num]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num:>2}. {name}: {detail}")


@pytest.fixture(params=sorted(_backend.AVAILABLE))
def kernels(request):
    return _backend.load(request.param)


@pytest.fixture(scope="session")
def collector_ds():
    return generate("collector", 915, noise=0.02, seed=0)


@pytest.fixture(scope="session")
def small_ds():
    rng = np.random.default_rng(7)
    X = rng.uniform(0, 1, (60, 3))
    y = 1.0 + X[:, 0] + np.sin(3 * X[:, 1]) + 0.5 * X[:, 2] ** 2
    return Dataset(("a", "b", "c"), "y", X, y)


@pytest.fixture
def xor_ds():
    return Dataset(("a", "b"), "y", [[0, 0], [0, 1], [1, 0], [1, 1]], [0, 1, 1, 0])
