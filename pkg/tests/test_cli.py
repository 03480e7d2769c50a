import json
import subprocess
import sys

import numpy as np
import pytest

from htsurrogate import cli, persistence
from htsurrogate.dataset import load_csv
from htsurrogate.mlfn import MlfnConfig


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def workdir(tmp_path):
    assert run("gen", "--schema", "collector", "--rows", 80, "--levels", 3, "--out-dir", tmp_path) == 0
    return tmp_path


def train_small(d, *extra):
    assert run("train", "--data", d / "collector.csv", "--epochs", 20, "--out-dir", d, *extra) == 0
    return d / "model.json"


def test_train_defaults_resolve_to_documented_values():
    args = cli.build_parser().parse_args(["train", "--data", "x.csv"])
    assert cli.resolve_config(args, 6) == MlfnConfig(6, 7, learning_rate=0.9, momentum=0.9, epochs=200)
    ev = cli.build_parser().parse_args(["evaluate", "--data", "x.csv", "--model-file", "m", "--cv"])
    assert ev.tolerance == 0.30 and ev.cv == 5
    assert cli.build_parser().parse_args(["evaluate", "--data", "x", "--model-file", "m"]).cv is None
    assert cli.build_parser().parse_args(["screen", "--space", "s"]).top is None
    assert cli.DEFAULT_TOP == 2


def test_flags_override_config_file(tmp_path):
    persistence.save_config(MlfnConfig(6, 3, learning_rate=0.2, epochs=9), tmp_path / "c.json")
    args = cli.build_parser().parse_args(["train", "--data", "x", "--config", str(tmp_path / "c.json"), "--hidden", "4"])
    assert cli.resolve_config(args, 6) == MlfnConfig(6, 4, learning_rate=0.2, epochs=9)


def test_gen_writes_dataset_and_space(workdir):
    ds = load_csv(workdir / "collector.csv")
    assert ds.n_rows == 80 and ds.schema_tag == "collector"
    space = json.loads((workdir / "collector_space.json").read_text())
    assert len(space["variables"]) == 6


def test_train_outputs(workdir):
    model_path = train_small(workdir)
    model = persistence.load(model_path)
    assert model.config.epochs == 20
    trace = (workdir / "train_trace.csv").read_text().splitlines()
    assert trace[0] == "epoch,mse" and len(trace) == 21
    manifest = json.loads((workdir / "train.manifest.json").read_text())
    assert set(manifest["outputs"]) == {"model.json", "train_trace.csv", "train_summary.txt"}


def test_zero_epochs_equals_initialisation(workdir):
    model = persistence.load(train_small(workdir, "--epochs", 0))
    from htsurrogate import mlfn

    init = mlfn.init(model.config)
    np.testing.assert_array_equal(model.flat_params(), init.flat_params())


def test_identical_runs_give_identical_model_bytes(workdir, tmp_path_factory):
    other = tmp_path_factory.mktemp("again")
    a = train_small(workdir).read_bytes()
    run("train", "--data", workdir / "collector.csv", "--epochs", 20, "--out-dir", other)
    assert (other / "model.json").read_bytes() == a


def test_evaluate_with_cv_writes_five_folds(workdir):
    model = train_small(workdir)
    assert run("evaluate", "--data", workdir / "collector.csv", "--model-file", model, "--cv", "--out-dir", workdir) == 0
    folds = (workdir / "evaluate_folds.csv").read_text().splitlines()
    assert folds[0] == "fold,n_test,accuracy,rmse" and len(folds) == 6
    metrics = dict(line.split(",") for line in (workdir / "evaluate_metrics.csv").read_text().splitlines()[1:])
    assert float(metrics["tolerance"]) == 0.3


def test_sweep_and_search(workdir):
    data = workdir / "collector.csv"
    assert run("sweep", "--data", data, "--nodes", "2,4", "--epochs", 10, "--cv", 3, "--out-dir", workdir) == 0
    assert (workdir / "sweep.csv").read_text().count("\n") == 3
    assert run("search", "--data", data, "--epochs", 10, "--cv", 3,
               "--axis", "hidden_nodes=2,3", "--axis", "lr=0.5,0.9", "--out-dir", workdir) == 0
    best = json.loads((workdir / "search_best.json").read_text())
    config, doc = persistence.load_config(workdir / "search_best.json")
    # reloading the saved winner reproduces its recorded score
    from htsurrogate.evaluation import ToleranceSpec, cross_validate

    again = cross_validate(load_csv(data), config, 3, 0, ToleranceSpec(0.3)).mean_accuracy
    assert again == doc["cv"]["mean_accuracy"] == best["cv"]["mean_accuracy"]


def test_grnn_train_and_predict_match_library(workdir):
    data = workdir / "collector.csv"
    assert run("train", "--data", data, "--model", "grnn", "--sigma", 0.2, "--out-dir", workdir) == 0
    model = persistence.load(workdir / "model.json")
    x = load_csv(data).features[3]
    assert run("predict", "--model-file", workdir / "model.json",
               "--values", ",".join(repr(float(v)) for v in x), "--out-dir", workdir) == 0
    line = (workdir / "predict.txt").read_text().strip()
    assert line == f"hcr = {model.predict(x)!r}"


def test_screen_default_top_and_worker_bytes(workdir):
    model = train_small(workdir)
    space = workdir / "collector_space.json"
    cfg = json.loads(space.read_text())
    del cfg["top"]
    space.write_text(json.dumps(cfg))
    reports = []
    for w in (1, 8):
        out = workdir / f"w{w}"
        assert run("screen", "--space", space, "--model-file", model, "--workers", w, "--out-dir", out) == 0
        reports.append((out / "screen_report.csv").read_bytes())
    assert reports[0] == reports[1]
    assert reports[0].decode().count("\n") == 3


def test_one_point_grid(workdir):
    model = train_small(workdir)
    ds = load_csv(workdir / "collector.csv")
    variables = [{"name": n, "values": [float(ds.features[0, j])]} for j, n in enumerate(ds.feature_names)]
    (workdir / "one.json").write_text(json.dumps({"variables": variables}))
    assert run("screen", "--space", workdir / "one.json", "--model-file", model, "--out-dir", workdir) == 0
    assert (workdir / "screen_report.csv").read_text().count("\n") == 2


def test_replay_reproduces_and_detects_changes(workdir, tmp_path_factory):
    model = train_small(workdir)
    assert run("replay", "--manifest", workdir / "train.manifest.json", "--out-dir", tmp_path_factory.mktemp("r")) == 0
    run("screen", "--space", workdir / "collector_space.json", "--model-file", model, "--out-dir", workdir)
    assert run("replay", "--manifest", workdir / "screen.manifest.json") == 0
    # tampering with a recorded output is reported as a mismatch
    manifest = json.loads((workdir / "screen.manifest.json").read_text())
    manifest["outputs"]["screen_report.csv"] = "0" * 64
    (workdir / "bad.json").write_text(json.dumps(manifest))
    assert run("replay", "--manifest", workdir / "bad.json") == 3
    # a changed input refuses to replay
    with open(workdir / "collector_space.json", "a") as fh:
        fh.write(" ")
    assert run("replay", "--manifest", workdir / "screen.manifest.json") == 2


def test_input_errors_exit_2(workdir, capsys):
    assert run("train", "--data", workdir / "missing.csv") == 2
    (workdir / "bad.csv").write_text("a,b\n1,x\n")
    assert run("train", "--data", workdir / "bad.csv") == 2
    assert "bad.csv:2:2" in capsys.readouterr().err
    model = train_small(workdir)
    assert run("predict", "--model-file", model, "--values", "1,2") == 2


def test_schema_mismatch_exit_2(workdir):
    model = train_small(workdir)
    run("gen", "--schema", "iaq", "--rows", 30, "--out-dir", workdir)
    assert run("evaluate", "--data", workdir / "iaq.csv", "--model-file", model, "--out-dir", workdir) == 2


def test_divergence_exit_3(workdir, capsys):
    assert run("train", "--data", workdir / "collector.csv", "--lr", "1e308", "--epochs", 2, "--out-dir", workdir) == 3
    assert "epoch 1" in capsys.readouterr().err


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "htsurrogate.cli", "gen", "--schema", "iaq", "--rows", "10", "--out-dir", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "gen.manifest.json").is_file()


def test_predict_input_picks_columns_by_header(workdir):
    model = train_small(workdir)
    data = workdir / "collector.csv"
    assert run("predict", "--model-file", model, "--input", data, "--out-dir", workdir) == 0
    ds = load_csv(data)
    expected = persistence.load(model).predict(ds.features[-1])
    assert (workdir / "predict.txt").read_text().strip() == f"hcr = {expected!r}"


@pytest.mark.parametrize("kind", ["grnn", "mlfn"])
def test_evaluate_on_own_constant_data_is_perfect(tmp_path, kind):
    rng = np.random.default_rng(0)
    rows = "".join(f"{a!r},{b!r},42.0\n" for a, b in rng.uniform(0, 1, (30, 2)).tolist())
    (tmp_path / "flat.csv").write_text("a,b,y\n" + rows)
    data = tmp_path / "flat.csv"
    assert run("train", "--data", data, "--model", kind, "--out-dir", tmp_path) == 0
    assert run("evaluate", "--data", data, "--model-file", tmp_path / "model.json", "--out-dir", tmp_path) == 0
    metrics = dict(line.split(",") for line in (tmp_path / "evaluate_metrics.csv").read_text().splitlines()[1:])
    assert float(metrics["accuracy"]) == 1.0
