import numpy as np
import pytest

from htsurrogate import grnn, persistence
from htsurrogate.dataset import Dataset, split
from htsurrogate.errors import DataError, DegenerateColumnError, DimensionError
from htsurrogate.evaluation import ToleranceSpec, tolerance_accuracy


def test_fit_stores_every_row_in_order(small_ds):
    model = grnn.fit(small_ds, 0.1)
    assert model.features.shape[0] == small_ds.n_rows
    np.testing.assert_array_equal(model.features, model.norm.normalize_features(small_ds.features))
    again = grnn.fit(small_ds, 0.1)
    np.testing.assert_array_equal(model.targets, again.targets)


@pytest.mark.parametrize("sigma", [0.0, -1.0, float("nan"), float("inf")])
def test_fit_rejects_bad_sigma(small_ds, sigma):
    with pytest.raises(DataError):
        grnn.fit(small_ds, sigma)


def test_fit_rejects_degenerate_feature():
    ds = Dataset(("a", "b"), "y", [[1, 0], [1, 1]], [1, 2])
    with pytest.raises(DegenerateColumnError):
        grnn.fit(ds, 0.1)


def test_single_exemplar_returns_its_target():
    ds = Dataset(("a",), "y", [[0.0], [1.0]], [4.0, 4.0])
    model = grnn.fit(ds, 0.2)
    # one stored exemplar
    single = grnn.GrnnModel(model.features[:1], model.targets[:1], 0.2, model.norm)
    for q in (-3.0, 0.0, 0.4, 7.0):
        assert single.predict([q]) == pytest.approx(4.0, abs=1e-12)


def test_equidistant_exemplars_average():
    ds = Dataset(("a",), "y", [[0.0], [2.0]], [2.0, 4.0])
    model = grnn.fit(ds, 0.3)
    assert model.predict([1.0]) == pytest.approx(3.0, abs=1e-12)


def test_flat_kernel_limit_is_global_mean(small_ds):
    model = grnn.fit(small_ds, 1e6)
    rng = np.random.default_rng(0)
    Q = model.norm.normalize_features(rng.uniform(0, 1, (50, 3)))
    out = grnn.predict_normalized(model, Q)
    assert np.max(np.abs(out - model.targets.mean())) < 1e-6


def test_predictions_lie_in_target_hull(small_ds):
    rng = np.random.default_rng(1)
    for sigma in (1e-3, 0.05, 0.5):
        model = grnn.fit(small_ds, sigma)
        preds = model.predict_batch(rng.uniform(-0.5, 1.5, (1000, 3)))
        assert preds.min() >= small_ds.targets.min() - 1e-12
        assert preds.max() <= small_ds.targets.max() + 1e-12


def test_tiny_sigma_is_nearest_neighbour(small_ds):
    model = grnn.fit(small_ds, 1e-6)
    rng = np.random.default_rng(2)
    Q = rng.uniform(0, 1, (200, 3))
    Qn = model.norm.normalize_features(Q)
    for q, qn in zip(Q, Qn):
        d2 = ((model.features - qn) ** 2).sum(axis=1)
        order = np.argsort(d2)
        assert d2[order[0]] < d2[order[1]]
        expected = small_ds.targets[order[0]]
        assert model.predict(q) == pytest.approx(expected, rel=1e-12)


def test_dimension_mismatch(small_ds):
    with pytest.raises(DimensionError):
        grnn.fit(small_ds, 0.1).predict([1.0])


def test_save_load_roundtrip_915_rows(collector_ds, tmp_path):
    model = grnn.fit(collector_ds, 0.05)
    persistence.save(model, tmp_path / "g.json")
    back = persistence.load(tmp_path / "g.json")
    X = collector_ds.features[::7]
    np.testing.assert_array_equal(back.predict_batch(X), model.predict_batch(X))


def test_select_sigma_singleton(small_ds):
    assert grnn.select_sigma(small_ds, [0.3], k=3).best_sigma == 0.3


def test_select_sigma_deterministic(small_ds):
    a = grnn.select_sigma(small_ds, [0.01, 0.1, 1.0], k=4, seed=3)
    b = grnn.select_sigma(small_ds, [0.01, 0.1, 1.0], k=4, seed=3)
    assert a == b


def test_select_sigma_tie_goes_to_smaller():
    # constant target: every sigma scores 1.0
    rng = np.random.default_rng(4)
    ds = Dataset(("a",), "y", rng.uniform(0, 1, (20, 1)), np.full(20, 3.0))
    assert grnn.select_sigma(ds, [0.5, 0.05, 0.2], k=4).best_sigma == 0.05


def test_select_sigma_rejects_bad_grid(small_ds):
    with pytest.raises(DataError):
        grnn.select_sigma(small_ds, [])
    with pytest.raises(DataError):
        grnn.select_sigma(small_ds, [0.1, -1])


def test_selected_sigma_beats_grid_endpoints():
    rng = np.random.default_rng(5)
    X = rng.uniform(0, 1, (400, 2))
    y = 2.0 + np.sin(6 * X[:, 0]) + np.cos(5 * X[:, 1])
    y = y * (1 + 0.02 * rng.standard_normal(400))
    ds = Dataset(("a", "b"), "y", X, y)
    train, test = split(ds, 0.25, seed=1)
    grid = [1e-4, 0.01, 0.03, 0.1, 0.3, 3.0]
    tight = ToleranceSpec(0.05)
    sel = grnn.select_sigma(train, grid, k=5, seed=0, tolerance=tight)
    assert sel.best_sigma not in (grid[0], grid[-1])

    def held_out(sigma):
        preds = grnn.fit(train, sigma).predict_batch(test.features)
        return tolerance_accuracy(preds, test.targets, tight)

    assert held_out(sel.best_sigma) > held_out(grid[0])
    assert held_out(sel.best_sigma) > held_out(grid[-1])
