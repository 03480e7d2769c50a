import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from htsurrogate import evaluation
from htsurrogate.dataset import Dataset
from htsurrogate.errors import DataError
from htsurrogate.evaluation import (
    SweepReport,
    ToleranceSpec,
    control_variable_search,
    coordinate_search,
    cross_validate,
    rmse,
    sweep_hidden_nodes,
    tolerance_accuracy,
)
from htsurrogate.grnn import GrnnConfig
from htsurrogate.mlfn import MlfnConfig
from htsurrogate.synthetic import generate


def ten_of_twelve():
    targets = np.array([100.0, 50.0, 20.0, 8.0, 300.0, 75.0, 10.0, 40.0, 60.0, 90.0, 5.0, 250.0])
    preds = targets * np.array([1.0, 1.1, 0.9, 1.29, 0.71, 1.2, 0.8, 1.05, 0.95, 1.0, 1.5, 0.5])
    return preds, targets


def test_tolerance_accuracy_perfect():
    t = [1.0, -2.0, 3.0]
    assert tolerance_accuracy(t, t) == 1.0


def test_tolerance_accuracy_ten_of_twelve():
    preds, targets = ten_of_twelve()
    inside = sum(abs(p - t) <= 0.3 * abs(t) for p, t in zip(preds, targets))
    assert inside == 10
    assert tolerance_accuracy(preds, targets) == pytest.approx(10 / 12, abs=1e-12)


def test_tolerance_band_is_closed():
    assert tolerance_accuracy([130.0], [100.0]) == 1.0
    assert tolerance_accuracy([70.0], [100.0]) == 1.0
    assert tolerance_accuracy([130.0001], [100.0]) == 0.0


def test_zero_target_uses_absolute_band():
    assert tolerance_accuracy([0.0, 0.01], [0.0, 0.0]) == 0.5
    assert tolerance_accuracy([0.0, 0.01], [0.0, 0.0], ToleranceSpec(0.3, 0.01)) == 1.0


@pytest.mark.parametrize("p, t", [([1.0], [1.0, 2.0]), ([], [])])
def test_metric_input_errors(p, t):
    with pytest.raises(DataError):
        tolerance_accuracy(p, t)
    with pytest.raises(DataError):
        rmse(p, t)


def test_tolerance_spec_validation():
    with pytest.raises(DataError):
        ToleranceSpec(0.0)


@given(
    st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=1, max_size=30),
    st.floats(0.01, 2.0),
    st.floats(0.0, 1.0),
)
def test_accuracy_bounded_and_monotone_in_fraction(pairs, frac, shrink):
    p, t = zip(*pairs)
    wide = tolerance_accuracy(p, t, ToleranceSpec(frac))
    narrow = tolerance_accuracy(p, t, ToleranceSpec(frac * max(shrink, 1e-3)))
    assert 0.0 <= narrow <= wide <= 1.0


def test_rmse_values():
    assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(5 / math.sqrt(2), abs=1e-12)
    assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(3.5355, abs=1e-4)


def test_rmse_permutation_invariant():
    rng = np.random.default_rng(0)
    p, t = rng.normal(size=20), rng.normal(size=20)
    perm = rng.permutation(20)
    assert rmse(p[perm], t[perm]) == pytest.approx(rmse(p, t), rel=1e-15)


@pytest.fixture(scope="module")
def iaq_ds():
    return generate("iaq", 249, noise=0.05, seed=1)


def test_cross_validate_five_folds(iaq_ds):
    report = cross_validate(iaq_ds, MlfnConfig(7, 10, epochs=50), k=5, seed=0)
    assert len(report.fold_accuracy) == 5
    assert sorted(report.fold_sizes) == [49, 50, 50, 50, 50]
    assert report.mean_accuracy == pytest.approx(sum(report.fold_accuracy) / 5, rel=1e-15)
    assert min(report.fold_accuracy) <= report.mean_accuracy <= max(report.fold_accuracy)
    assert all(0 <= a <= 1 for a in report.fold_accuracy)
    # every row held out exactly once
    assert np.isfinite(report.predictions).all()
    assert sum(report.fold_sizes) == iaq_ds.n_rows
    assert report.to_csv_text().count("\n") == 6


def test_cross_validate_recomputes_from_oof_predictions(iaq_ds):
    from htsurrogate.dataset import kfold

    report = cross_validate(iaq_ds, GrnnConfig(0.1), k=5, seed=3)
    plan = kfold(iaq_ds, 5, 3)
    for f in range(5):
        idx = plan.fold_indices(f)
        assert report.fold_accuracy[f] == tolerance_accuracy(report.predictions[idx], iaq_ds.targets[idx])


def test_cross_validate_constant_target_with_grnn():
    rng = np.random.default_rng(2)
    ds = Dataset(("a", "b"), "y", rng.uniform(0, 1, (40, 2)), np.full(40, 12.5))
    report = cross_validate(ds, GrnnConfig(0.2), k=5)
    assert report.fold_accuracy == (1.0,) * 5


def test_cross_validate_deterministic_and_worker_independent(iaq_ds):
    cfg = MlfnConfig(7, 4, epochs=20)
    a = cross_validate(iaq_ds, cfg, k=4, seed=5)
    b = cross_validate(iaq_ds, cfg, k=4, seed=5, workers=3)
    assert a.fold_accuracy == b.fold_accuracy and a.fold_rmse == b.fold_rmse
    np.testing.assert_array_equal(a.predictions, b.predictions)


def test_sweep_singleton(small_ds):
    report = sweep_hidden_nodes(small_ds, MlfnConfig(3, epochs=10), [10], k=3)
    assert report.best_value == 10


def test_sweep_argmax_attains_listed_max(iaq_ds):
    report = sweep_hidden_nodes(iaq_ds, MlfnConfig(7, epochs=30), range(1, 13), k=5, spec=ToleranceSpec(0.1))
    assert report.values == tuple(range(1, 13))
    best = report.mean_accuracy[report.values.index(report.best_value)]
    assert best == max(report.mean_accuracy)
    assert report.to_csv_text().count("\n") == 13


def test_sweep_tie_goes_to_smaller():
    report = SweepReport("hidden_nodes", (8, 3, 5), (0.7, 0.9, 0.9), (0, 0, 0), (1, 1, 1))
    assert report.best_value == 3


def test_sweep_rejects_bad_values(small_ds):
    with pytest.raises(DataError):
        sweep_hidden_nodes(small_ds, MlfnConfig(3), [])
    with pytest.raises(DataError):
        sweep_hidden_nodes(small_ds, MlfnConfig(3), [0, 2])


def test_search_one_axis_one_value(small_ds):
    start = MlfnConfig(3, 4, epochs=10)
    result = control_variable_search(small_ds, [("hidden_nodes", [6])], start, k=3)
    assert result.best == MlfnConfig(3, 6, epochs=10)


def test_search_over_the_four_hyperparameters(small_ds):
    start = MlfnConfig(3, 3, learning_rate=0.5, momentum=0.5, epochs=20)
    axes = [
        ("learning_rate", [0.2, 0.5, 0.9]),
        ("hidden_nodes", [2, 3, 5]),
        ("epochs", [10, 20]),
        ("momentum", [0.0, 0.5, 0.9]),
    ]
    spec = ToleranceSpec(0.05)
    result = control_variable_search(small_ds, axes, start, k=3, seed=1, spec=spec)
    assert [s.axis for s in result.trace] == ["learning_rate"] * 3 + ["n_hidden"] * 3 + ["epochs"] * 2 + ["momentum"] * 3
    assert sum(s.chosen for s in result.trace) == 4
    start_score = cross_validate(small_ds, start, 3, 1, spec).mean_accuracy
    assert result.best_score >= start_score
    assert cross_validate(small_ds, result.best, 3, 1, spec).mean_accuracy == result.best_score


def test_search_unknown_axis(small_ds):
    with pytest.raises(DataError, match="axis"):
        control_variable_search(small_ds, [("sigma", [0.1])], MlfnConfig(3), k=3)


@pytest.mark.parametrize("seed", range(20))
def test_coordinate_search_matches_brute_force_on_separable_scores(seed):
    rng = np.random.default_rng(seed)
    values = [sorted(rng.choice(np.arange(10), 3, replace=False).tolist()) for _ in range(3)]
    tables = [dict(zip(v, rng.normal(size=3))) for v in values]
    names = ["a", "b", "c"]

    def score(point):
        return sum(tables[i][point[n]] for i, n in enumerate(names))

    start = {n: v[int(rng.integers(3))] for n, v in zip(names, values)}
    result = coordinate_search(start, list(zip(names, values)), score)
    brute = max(itertools.product(*values), key=lambda combo: score(dict(zip(names, combo))))
    assert tuple(result.best[n] for n in names) == brute
    assert result.best_score == pytest.approx(score(dict(zip(names, brute))))


def test_coordinate_search_tie_prefers_start_then_smaller():
    result = coordinate_search({"a": 5}, [("a", [1, 3, 5, 7])], lambda p: 1.0)
    assert result.best == {"a": 5}
    result = coordinate_search({"a": 4}, [("a", [1, 3, 5, 7])], lambda p: 1.0)
    assert result.best == {"a": 3}


def test_fit_surrogate_dispatch(small_ds):
    assert evaluation.fit_surrogate(small_ds, GrnnConfig(0.1)).kind == "grnn"
    assert evaluation.fit_surrogate(small_ds, MlfnConfig(99, epochs=1)).config.n_inputs == 3
    with pytest.raises(DataError):
        evaluation.fit_surrogate(small_ds, object())
