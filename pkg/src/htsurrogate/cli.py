"""Command-line front end: train neural surrogates and screen design grids.

Every subcommand writes its outputs under ``--out-dir`` together with a
``<subcommand>.manifest.json`` run manifest; ``replay`` re-executes a
manifest and checks that the outputs hash identically.

Exit codes: 0 success, 2 user/input error, 3 numerical failure or replay
mismatch.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, _backend, evaluation, hts, persistence, synthetic
from .dataset import SCHEMAS, load_csv
from .errors import DataError, NumericFailure
from .grnn import GrnnConfig
from .mlfn import MlfnConfig
from .mlfn import train as train_mlfn

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

# defaults for the solar-collector network
MLFN_DEFAULTS = {"learning_rate": 0.9, "n_hidden": 7, "epochs": 200, "momentum": 0.9}
DEFAULT_SIGMA = 0.1
DEFAULT_CV_FOLDS = 5
DEFAULT_TOLERANCE = 0.30
DEFAULT_TOP = 2

PATH_PARAMS = ("data", "model_file", "space", "config", "input")


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class Run:
    """Collects the inputs and outputs of one subcommand for its manifest."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.inputs: dict[str, str] = {}
        self.outputs: list[Path] = []

    def read(self, path) -> Path:
        p = Path(path)
        if p.is_file():
            self.inputs[str(p.resolve())] = sha256_file(p)
        return p

    def write_text(self, name, text: str) -> Path:
        p = Path(name) if Path(name).is_absolute() else self.out_dir / name
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text, encoding="utf-8")
        self.outputs.append(p)
        return p


def _parse_int_list(text: str) -> list[int]:
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if ".." in part:
            a, b = part.split("..", 1)
            a, b = int(a), int(b)
            if b < a:
                raise DataError(f"empty range {part!r}")
            out.extend(range(a, b + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise DataError(f"no values in {text!r}")
    return out


def _parse_values(text: str) -> list[float]:
    if ".." in text:
        return [float(v) for v in _parse_int_list(text)]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise DataError(f"cannot parse value list {text!r}") from None


def resolve_mlfn_config(args, n_inputs: int, base: MlfnConfig | None = None) -> MlfnConfig:
    """Explicit flags override a loaded config, which overrides the defaults."""
    cfg = base or MlfnConfig(n_inputs, **MLFN_DEFAULTS)
    overrides = {
        "learning_rate": args.lr,
        "n_hidden": args.hidden,
        "epochs": args.epochs,
        "momentum": args.momentum,
        "init_half_width": getattr(args, "init_half_width", None),
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, n_inputs=n_inputs, seed=args.seed, **overrides)


def resolve_config(args, n_inputs: int):
    base = None
    if getattr(args, "config", None):
        base, _ = persistence.load_config(args.config)
    kind = args.model or (base and ("mlfn" if isinstance(base, MlfnConfig) else "grnn")) or "mlfn"
    if kind == "mlfn":
        return resolve_mlfn_config(args, n_inputs, base if isinstance(base, MlfnConfig) else None)
    sigma = args.sigma if args.sigma is not None else (base.sigma if isinstance(base, GrnnConfig) else DEFAULT_SIGMA)
    return GrnnConfig(sigma)


def _load_data(run: Run, args):
    return load_csv(run.read(args.data), schema=getattr(args, "schema", None), target=getattr(args, "target", None))


def _check_schema(model, ds) -> None:
    if tuple(model.feature_names) != ds.feature_names:
        raise DataError(
            f"schema mismatch: model features {list(model.feature_names)} "
            f"vs data features {list(ds.feature_names)}"
        )


def cmd_gen(args, run: Run) -> None:
    rows = args.rows or (915 if args.schema == "collector" else 249)
    ds = synthetic.generate(args.schema, rows, args.noise, args.seed)
    run.write_text(f"{args.schema}.csv", ds.to_csv_text())
    if args.levels:
        cfg = synthetic.default_space_config(args.schema, args.levels)
        cfg.update({"direction": "max", "top": DEFAULT_TOP})
        run.write_text(f"{args.schema}_space.json", json.dumps(cfg, indent=1) + "\n")
    print(f"wrote {rows} synthetic {args.schema} rows to {run.outputs[0]}")


def cmd_train(args, run: Run) -> None:
    ds = _load_data(run, args)
    config = resolve_config(args, ds.n_features)
    lines = [f"data: {Path(args.data).name} ({ds.n_rows} rows, {ds.n_features} features)"]
    if isinstance(config, MlfnConfig):
        model, trace = train_mlfn(ds, config)
        run.write_text("train_trace.csv", trace.to_csv_text())
        lines.append(
            f"model: mlfn learning_rate={config.learning_rate} n_hidden={config.n_hidden} "
            f"epochs={config.epochs} momentum={config.momentum} seed={config.seed}"
        )
        if config.epochs:
            lines.append(f"final epoch mse (normalized): {float(trace.mse[-1])!r}")
    else:
        model = evaluation.fit_surrogate(ds, config)
        lines.append(f"model: grnn sigma={config.sigma}")
    preds = model.predict_batch(ds.features)
    acc = evaluation.tolerance_accuracy(preds, ds.targets)
    lines.append(f"training accuracy (+/-{DEFAULT_TOLERANCE:.0%}): {acc:.6f}")
    lines.append(f"training rmse: {evaluation.rmse(preds, ds.targets):.6g}")
    model_path = Path(args.model_file).resolve() if args.model_file else "model.json"
    run.write_text(model_path, persistence.dumps(model))
    run.write_text("train_summary.txt", "\n".join(lines) + "\n")
    print("\n".join(lines))


def cmd_evaluate(args, run: Run) -> None:
    model = persistence.load(run.read(args.model_file))
    ds = _load_data(run, args)
    _check_schema(model, ds)
    spec = evaluation.ToleranceSpec(args.tolerance)
    preds = model.predict_batch(ds.features)
    acc = evaluation.tolerance_accuracy(preds, ds.targets, spec)
    err = evaluation.rmse(preds, ds.targets)
    metrics = [("n_rows", ds.n_rows), ("tolerance", args.tolerance), ("accuracy", acc), ("rmse", err)]
    lines = [f"{name}: {value!r}" for name, value in metrics]
    if args.cv:
        report = evaluation.cross_validate(ds, model.config, args.cv, args.seed, spec, args.workers)
        run.write_text("evaluate_folds.csv", report.to_csv_text())
        metrics += [("cv_mean_accuracy", report.mean_accuracy), ("cv_mean_rmse", report.mean_rmse)]
        lines.append(report.summary().rstrip())
    run.write_text(
        "evaluate_metrics.csv", "metric,value\n" + "".join(f"{n},{v!r}\n" for n, v in metrics)
    )
    run.write_text("evaluate_summary.txt", "\n".join(lines) + "\n")
    print("\n".join(lines))


def cmd_sweep(args, run: Run) -> None:
    ds = _load_data(run, args)
    base = resolve_mlfn_config(args, ds.n_features)
    spec = evaluation.ToleranceSpec(args.tolerance)
    report = evaluation.sweep_hidden_nodes(
        ds, base, _parse_int_list(args.nodes), args.cv, args.seed, spec, args.workers
    )
    run.write_text("sweep.csv", report.to_csv_text())
    text = f"best hidden nodes: {report.best_value}\n"
    run.write_text("sweep_summary.txt", text)
    print(text, end="")


def _parse_axes(items, kind):
    if not items:
        return evaluation.DEFAULT_MLFN_AXES if kind == "mlfn" else evaluation.DEFAULT_GRNN_AXES
    axes = []
    for item in items:
        if "=" not in item:
            raise DataError(f"axis must look like name=v1,v2,... got {item!r}")
        name, values = item.split("=", 1)
        axes.append((name.strip(), _parse_values(values)))
    return axes


def cmd_search(args, run: Run) -> None:
    ds = _load_data(run, args)
    start = resolve_config(args, ds.n_features)
    kind = evaluation.config_kind(start)
    spec = evaluation.ToleranceSpec(args.tolerance)
    axes = _parse_axes(args.axis, kind)
    result = evaluation.control_variable_search(ds, axes, start, args.cv, args.seed, spec, args.workers)
    extra = {"cv": {"k": args.cv, "seed": args.seed, "tolerance": args.tolerance, "mean_accuracy": result.best_score}}
    run.write_text(
        "search_best.json",
        json.dumps(persistence.config_to_dict(result.best, extra), indent=1) + "\n",
    )
    run.write_text("search_trace.csv", result.trace_csv_text())
    text = (
        f"best {kind} config: {json.dumps(result.best.to_dict(), sort_keys=True)}\n"
        f"mean {args.cv}-fold accuracy: {result.best_score!r}\n"
    )
    run.write_text("search_summary.txt", text)
    print(text, end="")


def cmd_screen(args, run: Run) -> None:
    cfg = hts.load_screen_config(run.read(args.space))
    model_path = args.model_file or cfg.get("model")
    if not model_path:
        raise DataError("no model given: pass --model-file or set 'model' in the screening config")
    model = persistence.load(run.read(model_path))
    direction = args.direction or cfg.get("direction", "max")
    top = args.top if args.top is not None else int(cfg.get("top", DEFAULT_TOP))
    workers = args.workers if args.workers is not None else int(cfg.get("workers", 1))
    report = hts.screen(model, cfg["space"], direction, top, workers)
    summary = report.summary()
    if args.oracle:
        truth = synthetic.get_generator(args.oracle).truth
        check = hts.verify_against_oracle(cfg["space"], truth, report)
        summary += (
            f"oracle {args.oracle}: true ranks {list(check.true_ranks)} of {check.total}; "
            f"regret {check.regret!r}; best reported in top {check.best_rank_fraction:.4%}\n"
        )
    run.write_text("screen_report.csv", report.to_csv_text())
    run.write_text("screen_summary.txt", summary)
    print(summary, end="")


def cmd_predict(args, run: Run) -> None:
    model = persistence.load(run.read(args.model_file))
    if args.values is not None:
        text = args.values
    elif args.input:
        lines = [ln for ln in run.read(args.input).read_text(encoding="utf-8").splitlines() if ln.strip()]
        if not lines:
            raise DataError(f"{args.input}: empty input")
        text = lines[-1]
        header = [h.strip() for h in lines[0].split(",")]
        if len(lines) > 1 and set(model.feature_names) <= set(header):
            # a CSV with a header: pick the model's columns by name
            cells = [c.strip() for c in text.split(",")]
            if len(cells) != len(header):
                raise DataError(f"{args.input}: last row has {len(cells)} fields, header has {len(header)}")
            text = ",".join(cells[header.index(n)] for n in model.feature_names)
    else:
        raise DataError("pass --values or --input")
    try:
        x = [float(v) for v in text.split(",")]
    except ValueError:
        raise DataError(f"cannot parse feature values {text!r}") from None
    if len(x) != len(model.feature_names):
        raise DataError(f"expected {len(model.feature_names)} values ({', '.join(model.feature_names)}), got {len(x)}")
    y = model.predict(np.array(x))
    units = SCHEMAS[model.schema_tag].units if model.schema_tag in SCHEMAS else ""
    line = f"{model.target_name} = {y!r}" + (f" {units}" if units else "")
    run.write_text("predict.txt", line + "\n")
    print(line)


def _add_common(p, workers_default=1):
    p.add_argument("--seed", type=int, default=0, help="seed for every random choice (default 0)")
    p.add_argument("--out-dir", default=".", help="directory for outputs and the run manifest")
    if workers_default is not False:
        p.add_argument("--workers", type=int, default=workers_default)


def _add_hyper(p):
    p.add_argument("--lr", type=float, help="learning rate (default 0.9)")
    p.add_argument("--hidden", type=int, help="hidden nodes (default 7)")
    p.add_argument("--epochs", type=int, help="training epochs (default 200)")
    p.add_argument("--momentum", type=float, help="momentum (default 0.9)")
    p.add_argument("--init-half-width", type=float, help="initial weight half-width (default 0.5)")


def _add_data(p):
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--target", help="target column name (default: last column)")
    p.add_argument("--schema", choices=sorted(SCHEMAS), help="require a known column schema")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="htsurrogate", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic dataset (and optionally a screening grid)")
    p.add_argument("--schema", choices=sorted(synthetic.GENERATORS), default="collector")
    p.add_argument("--rows", type=int, help="rows (default 915 collector, 249 iaq)")
    p.add_argument("--noise", type=float, default=0.02, help="relative noise sd (default 0.02)")
    p.add_argument("--levels", type=int, help="also write a screening config with this many levels per variable")
    _add_common(p, workers_default=False)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a surrogate and write a model file")
    _add_data(p)
    p.add_argument("--model", choices=["mlfn", "grnn"], help="model kind (default mlfn)")
    p.add_argument("--config", help="configuration file, e.g. search_best.json")
    _add_hyper(p)
    p.add_argument("--sigma", type=float, help=f"GRNN kernel width (default {DEFAULT_SIGMA})")
    p.add_argument("--model-file", help="output model path (default <out-dir>/model.json)")
    _add_common(p, workers_default=False)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="tolerance accuracy, RMSE and optional k-fold CV")
    p.add_argument("--model-file", required=True)
    _add_data(p)
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    p.add_argument("--cv", type=int, nargs="?", const=DEFAULT_CV_FOLDS, default=None,
                   help=f"also cross-validate with K folds (bare --cv means {DEFAULT_CV_FOLDS})")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="cross-validated accuracy versus hidden-node count")
    _add_data(p)
    p.add_argument("--nodes", default="1..12", help="node counts, e.g. 1..12 or 2,4,8")
    _add_hyper(p)
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    p.add_argument("--cv", type=int, default=DEFAULT_CV_FOLDS)
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("search", help="control-variable (one-at-a-time) hyperparameter search")
    _add_data(p)
    p.add_argument("--model", choices=["mlfn", "grnn"])
    p.add_argument("--config", help="starting configuration file")
    _add_hyper(p)
    p.add_argument("--sigma", type=float)
    p.add_argument("--axis", action="append",
                   help="name=v1,v2,... (repeatable; default learning_rate, hidden_nodes, epochs, momentum)")
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    p.add_argument("--cv", type=int, default=DEFAULT_CV_FOLDS)
    _add_common(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("screen", help="rank every candidate of a design grid")
    p.add_argument("--space", required=True, help="screening config (JSON)")
    p.add_argument("--model-file", help="model file (overrides the config's 'model')")
    p.add_argument("--direction", choices=["max", "min", "maximize", "minimize"])
    p.add_argument("--top", type=int, help=f"number of candidates to keep (default {DEFAULT_TOP})")
    p.add_argument("--oracle", choices=sorted(synthetic.GENERATORS),
                   help="also score the report against a synthetic ground truth")
    _add_common(p, workers_default=None)
    p.set_defaults(func=cmd_screen)

    p = sub.add_parser("predict", help="predict the target for one feature vector")
    p.add_argument("--model-file", required=True)
    p.add_argument("--values", help="comma-separated feature values in model order")
    p.add_argument("--input", help="CSV file whose last line holds the feature values")
    _add_common(p, workers_default=False)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("replay", help="re-run a manifest and compare output hashes")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", help="write the replayed outputs here instead")
    p.set_defaults(func=None)
    return parser


def _params(args) -> dict:
    params = {k: v for k, v in vars(args).items() if k not in ("func",)}
    for key in PATH_PARAMS:
        if params.get(key):
            params[key] = str(Path(params[key]).resolve())
    params["out_dir"] = str(Path(args.out_dir).resolve())
    return params


def execute(args) -> Path:
    """Run one parsed subcommand and write its manifest; returns the manifest path."""
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    run = Run(out_dir)
    args.func(args, run)
    manifest = {
        "tool": "htsurrogate",
        "version": __version__,
        "kernel_backend": _backend.NAME,
        "subcommand": args.command,
        "seed": getattr(args, "seed", None),
        "params": _params(args),
        "inputs": run.inputs,
        "outputs": {_rel(p, out_dir): sha256_file(p) for p in run.outputs},
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    path = out_dir / f"{args.command}.manifest.json"
    path.write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")
    return path


def _rel(p: Path, root: Path) -> str:
    try:
        return str(p.resolve().relative_to(root.resolve()))
    except ValueError:
        return str(p.resolve())


def replay(manifest_path, out_dir=None) -> list[str]:
    """Re-execute a manifest; returns the output names whose hashes differ."""
    manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    for path, digest in manifest["inputs"].items():
        if not Path(path).is_file() or sha256_file(path) != digest:
            raise DataError(f"input {path} is missing or has changed since the recorded run")
    params = dict(manifest["params"])
    old_out = Path(params["out_dir"])
    new_out = Path(out_dir).resolve() if out_dir else old_out
    if manifest["subcommand"] == "train" and params.get("model_file"):
        mf = Path(params["model_file"])
        if mf.is_relative_to(old_out):
            params["model_file"] = str(new_out / mf.relative_to(old_out))
    params["out_dir"] = str(new_out)
    args = argparse.Namespace(**params)
    args.func = globals()[f"cmd_{manifest['subcommand']}"]
    new_manifest = json.loads(execute(args).read_text(encoding="utf-8"))
    expected = manifest["outputs"]
    got = {}
    for name in expected:
        p = Path(name) if Path(name).is_absolute() else new_out / name
        got[name] = sha256_file(p) if p.is_file() else None
    got.update({k: v for k, v in new_manifest["outputs"].items() if k not in got})
    return sorted(n for n in set(expected) | set(got) if expected.get(n) != got.get(n))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            bad = replay(args.manifest, args.out_dir)
            if bad:
                print(f"replay mismatch in: {', '.join(bad)}", file=sys.stderr)
                return EXIT_NUMERIC
            print("replay reproduced all outputs")
            return EXIT_OK
        execute(args)
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericFailure, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
