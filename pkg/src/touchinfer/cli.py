"""Command-line entry point: serve, synth, extract, train, eval, report.

A JSON config file supplies default paths, the server port, the seed and
the device profile; subcommand flags override it field by field. Every
subcommand is deterministic for fixed seeds (identical inputs give byte
identical outputs) and every report names the seeds it used.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import threading
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .ann import (
    AnnError,
    ScgConfig,
    SplitSpec,
    load_mlp,
    mlp_init,
    predict_batch,
    save_mlp,
    scg_train,
    split_indices,
)
from .evaluate import (
    EvalError,
    EvalReport,
    confusion_from_pairs,
    cross_validate,
    guess_curve,
    knn_classifier,
    render_report,
    report_from_records,
    two_stage_classifier,
    write_report,
)
from .features import extract, feature_layout, layout_digest
from .ingest import BindFailure, IngestError, TraceStore, serve
from .knn import KnnError, Metric, fit_two_stage, save_model
from .model import (
    SCROLL_ACTIONS,
    SCROLL_COLLAPSED,
    TouchAction,
    TraceError,
    decode_label_token,
    encode_label_token,
    label_order_key,
    trace_to_line,
)
from .synth import PROFILES, SynthError, action_spec, digit_spec, gen_dataset

CONFIG_ENV = "TOUCHINFER_CONFIG"

_PATH_FIELDS = ("dataset", "matrices", "models", "reports")


class CliError(Exception):
    """Subcommand failure: printed as a diagnostic, exit code 1."""


@dataclass(frozen=True)
class Config:
    """Shared defaults; any field can be overridden per subcommand."""

    dataset: Path = Path("data/traces.jsonl")
    matrices: Path = Path("data/matrices")
    models: Path = Path("data/models")
    reports: Path = Path("data/reports")
    port: int = 9321
    seed: int = 0
    profile: str = "nexus5"

    def __post_init__(self) -> None:
        if not 1 <= int(self.port) <= 65535:
            raise CliError(f"port must be in 1..65535, got {self.port}")
        if self.profile not in PROFILES:
            known = ", ".join(sorted(PROFILES))
            raise CliError(f"unknown device profile {self.profile!r} (known: {known})")


def load_config(path: Optional[str]) -> Config:
    """Explicit --config wins, then $TOUCHINFER_CONFIG, then defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV) or None
    if path is None:
        return Config()
    file = Path(path)
    try:
        record = json.loads(file.read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"cannot read config {file}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"config {file} is not valid JSON: {exc}") from None
    if not isinstance(record, dict):
        raise CliError(f"config {file} must hold a JSON object")
    known = {f.name for f in fields(Config)}
    unknown = sorted(set(record) - known)
    if unknown:
        raise CliError(f"unknown config keys in {file}: {', '.join(unknown)}")
    kwargs = {
        name: Path(value) if name in _PATH_FIELDS else value
        for name, value in record.items()
    }
    return Config(**kwargs)


# ------------------------------------------------------------ subcommands


def _cmd_serve(config: Config, args) -> int:
    port = config.port if args.port is None else args.port
    store = TraceStore(args.out or config.dataset)
    try:
        server = serve(store, host=args.host, port=port)
    except BindFailure as exc:
        raise CliError(str(exc)) from None
    with server:
        print(f"listening on {args.host}:{server.port}, "
              f"appending traces to {store.path}", flush=True)
        try:
            threading.Event().wait()
        except KeyboardInterrupt:
            pass
    stats = server.stats()
    shown = ", ".join(f"{k}={v}" for k, v in sorted(stats.items()) if v)
    print(f"stopped; {shown or 'no activity'}")
    return 0


def _cmd_synth(config: Config, args) -> int:
    out = Path(args.out or config.dataset)
    if out.exists() and not args.force:
        raise CliError(f"refusing to overwrite {out} (use --force)")
    profile = PROFILES[args.profile or config.profile]
    seed = config.seed if args.seed is None else args.seed
    make = action_spec if args.kind == "actions" else digit_spec
    spec = make(args.per_class, args.separation, seed, profile=profile)
    traces = gen_dataset(spec)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        for trace in traces:
            fh.write(trace_to_line(trace) + "\n")
    print(f"wrote {len(traces)} traces ({args.kind}, separation "
          f"{args.separation:g}, seed {seed}) to {out}")
    return 0


def _matrix_default(config: Config, phase: int) -> Path:
    return Path(config.matrices) / f"phase{phase}.json"


def _cmd_extract(config: Config, args) -> int:
    dataset = Path(getattr(args, "in") or config.dataset)
    if not dataset.exists():
        raise CliError(f"dataset not found: {dataset}")
    traces = TraceStore(dataset).load_all()
    if not traces:
        raise CliError(f"no traces in {dataset}")
    vectors = [extract(trace, args.phase) for trace in traces]
    record = {
        "kind": "feature-matrix",
        "phase": args.phase,
        "layout_digest": layout_digest(feature_layout(args.phase)),
        "labels": [encode_label_token(t.label) for t in traces],
        "values": [v.values.tolist() for v in vectors],
    }
    out = Path(args.out or _matrix_default(config, args.phase))
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(record, separators=(",", ":")) + "\n",
                   encoding="utf-8")
    print(f"extracted {len(vectors)} vectors "
          f"(phase {args.phase}, {len(vectors[0].values)} features) to {out}")
    return 0


def _load_matrix(path: Path) -> tuple[np.ndarray, list, str, int]:
    if not path.exists():
        raise CliError(f"matrix not found: {path}")
    record = json.loads(path.read_text(encoding="utf-8"))
    if record.get("kind") != "feature-matrix":
        raise CliError(f"{path} is not a feature matrix file")
    X = np.asarray(record["values"], dtype=np.float64)
    labels = [decode_label_token(t) for t in record["labels"]]
    return X, labels, str(record["layout_digest"]), int(record["phase"])


def _model_default(config: Config, kind: str) -> Path:
    return Path(config.models) / f"{kind}.json"


def _cmd_train(config: Config, args) -> int:
    seed = config.seed if args.seed is None else args.seed
    matrix = Path(getattr(args, "in") or
                  _matrix_default(config, 1 if args.model == "knn" else 2))
    X, labels, digest, _phase = _load_matrix(matrix)
    out = Path(args.out or _model_default(config, args.model))
    out.parent.mkdir(parents=True, exist_ok=True)

    if args.model == "knn":
        if not all(isinstance(label, TouchAction) for label in labels):
            raise CliError("two-stage knn expects touch-action labels; "
                           f"got others in {matrix}")
        model = fit_two_stage(X, labels, k=args.k)
        save_model(model, out, layout_digest=digest)
        print(f"trained two-stage 1-nn on {len(labels)} vectors -> {out}")
        return 0

    classes = tuple(sorted(set(labels), key=label_order_key))
    index = {c: i for i, c in enumerate(classes)}
    y = np.array([index[label] for label in labels], dtype=np.intp)
    train_idx, val_idx, _test_idx = split_indices(labels, SplitSpec(seed=seed))
    scg = ScgConfig(seed=seed, max_epochs=args.max_epochs)
    init = mlp_init(X.shape[1], args.hidden, len(classes), seed=seed,
                    classes=classes)
    trained, history = scg_train(init, X[train_idx], y[train_idx],
                                 X[val_idx], y[val_idx], config=scg)
    save_mlp(trained, out, layout_digest=digest, config=scg)
    print(f"trained mlp (hidden {args.hidden}, seed {seed}, "
          f"{len(history) - 1} epochs) on {len(train_idx)} vectors -> {out}")
    return 0


def _knn_eval_report(X: np.ndarray, labels: list, folds: int,
                     seed: int) -> EvalReport:
    if not all(isinstance(label, TouchAction) for label in labels):
        raise CliError("knn evaluation expects touch-action labels")
    result = cross_validate(X, labels, two_stage_classifier(k=1),
                            k=folds, seed=seed)
    # keep TouchAction members for the unmerged classes so the canonical
    # display order (click, hold, scroll, zooms) survives the collapse
    merge = lambda a: SCROLL_COLLAPSED if a in SCROLL_ACTIONS else a
    stage1 = confusion_from_pairs(
        [(merge(a), merge(p)) for a, p in result.pairs])
    combined = result.matrix

    scroll_rows = [i for i, label in enumerate(labels)
                   if label in SCROLL_ACTIONS]
    matrices = [(f"stage 1: action groups ({folds}-fold cv)", stage1)]
    if len({labels[i] for i in scroll_rows}) >= 2:
        direction = cross_validate(
            X[scroll_rows], [labels[i] for i in scroll_rows],
            knn_classifier(k=1, metric=Metric.CITY_BLOCK),
            k=folds, seed=seed)
        matrices.append(
            (f"stage 2: scroll direction ({folds}-fold cv over true scrolls)",
             direction.matrix))
    matrices.append((f"combined: all touch actions ({folds}-fold cv)",
                     combined))
    return EvalReport(
        title="touch action identification",
        method=f"two-stage 1-nn (euclidean, then city-block), "
               f"{folds}-fold cross-validation",
        seeds={"cv": seed},
        matrices=tuple(matrices),
    )


def _ann_eval_report(config: Config, X: np.ndarray, labels: list,
                     digest: str, args, seed: int) -> EvalReport:
    model_file = Path(args.model_file or _model_default(config, "ann"))
    if not model_file.exists():
        raise CliError(f"model not found: {model_file} (run train first)")
    model, saved_digest = load_mlp(model_file)
    if saved_digest and saved_digest != digest:
        raise CliError(f"model {model_file} was trained on a different "
                       f"feature layout than the matrix")
    seeds = {"split": seed}
    train_seed = json.loads(model_file.read_text()).get("train_config", {})
    if "seed" in train_seed:
        seeds["train"] = train_seed["seed"]

    _train_idx, _val_idx, test_idx = split_indices(labels, SplitSpec(seed=seed))
    X_test = X[test_idx]
    y_test = [labels[i] for i in test_idx]
    predicted = predict_batch(model, X_test)
    matrix = confusion_from_pairs(list(zip(y_test, predicted)))
    curve = guess_curve(model, X_test, y_test)

    digit_grid = None
    if all(isinstance(label, int) for label in y_test):
        profile = PROFILES[args.profile or config.profile]
        rates = {d: matrix.per_class_rate(d) * 100.0
                 for d in matrix.classes if d in set(y_test)}
        digit_grid = (profile.name, profile.keypad_grid, rates)
    return EvalReport(
        title="pin digit identification",
        method="one-hidden-layer mlp (scg), stratified 70/15/15 split, "
               "held-out test set",
        seeds=seeds,
        matrices=(("digits, held-out test set", matrix),),
        digit_grid=digit_grid,
        guess=curve,
    )


def _cmd_eval(config: Config, args) -> int:
    seed = config.seed if args.seed is None else args.seed
    matrix_path = Path(getattr(args, "in") or
                       _matrix_default(config, 1 if args.model == "knn" else 2))
    X, labels, digest, _phase = _load_matrix(matrix_path)
    if args.model == "knn":
        report = _knn_eval_report(X, labels, args.folds, seed)
        stem = Path(args.report or Path(config.reports) / "knn-eval")
    else:
        report = _ann_eval_report(config, X, labels, digest, args, seed)
        stem = Path(args.report or Path(config.reports) / "ann-eval")
    paths = write_report(report, stem)
    for kind in sorted(paths):
        print(f"{kind}: {paths[kind]}")
    print()
    print(render_report(report), end="")
    return 0


def _cmd_report(config: Config, args) -> int:
    records = Path(getattr(args, "in"))
    if not records.exists():
        raise CliError(f"records file not found: {records}")
    report = report_from_records(
        records.read_text(encoding="utf-8").splitlines())
    text = render_report(report)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
        print(f"wrote {out}")
    else:
        print(text, end="")
    return 0


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="touchinfer",
        description="Touch-interaction inference pipeline: collect browser "
                    "sensor streams, extract features, train and evaluate "
                    "classifiers.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", metavar="PATH",
                        help=f"config file (JSON); default ${CONFIG_ENV} "
                             "or built-in defaults")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="subcommand")

    p = sub.add_parser("serve", help="run the trace ingest server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, help="0 picks a free port")
    p.add_argument("--out", metavar="DATASET", help="trace store to append to")
    p.set_defaults(handler=_cmd_serve)

    p = sub.add_parser("synth", help="generate a synthetic labeled dataset")
    p.add_argument("--kind", choices=("actions", "digits"), required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--separation", type=float, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--profile", choices=sorted(PROFILES))
    p.add_argument("--out", metavar="DATASET")
    p.add_argument("--force", action="store_true",
                   help="overwrite an existing dataset file")
    p.set_defaults(handler=_cmd_synth)

    p = sub.add_parser("extract", help="extract feature vectors from traces")
    p.add_argument("--phase", type=int, choices=(1, 2), required=True)
    p.add_argument("--in", metavar="DATASET", dest="in")
    p.add_argument("--out", metavar="MATRIX")
    p.set_defaults(handler=_cmd_extract)

    p = sub.add_parser("train", help="fit a classifier on a feature matrix")
    p.add_argument("--model", choices=("knn", "ann"), required=True)
    p.add_argument("--in", metavar="MATRIX", dest="in")
    p.add_argument("--out", metavar="MODEL")
    p.add_argument("--k", type=int, default=1, help="neighbours (knn)")
    p.add_argument("--hidden", type=int, default=100,
                   help="hidden layer width (ann)")
    p.add_argument("--max-epochs", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("eval", help="evaluate and write a report")
    p.add_argument("--model", choices=("knn", "ann"), required=True)
    p.add_argument("--in", metavar="MATRIX", dest="in")
    p.add_argument("--folds", type=int, default=10, help="cv folds (knn)")
    p.add_argument("--seed", type=int)
    p.add_argument("--model-file", metavar="MODEL", help="trained model (ann)")
    p.add_argument("--profile", choices=sorted(PROFILES),
                   help="keypad layout for the digit grid (ann)")
    p.add_argument("--report", metavar="STEM",
                   help="output stem; writes STEM.txt and STEM.jsonl")
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("report", help="re-render a report records file")
    p.add_argument("--in", metavar="RECORDS", dest="in", required=True)
    p.add_argument("--out", metavar="TEXT", help="default: stdout")
    p.set_defaults(handler=_cmd_report)
    return parser


_MODULE_ERRORS = (IngestError, SynthError, KnnError, AnnError, EvalError,
                  TraceError, ValueError)


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 2 on usage error, 0 on --help
        code = exc.code
        return code if isinstance(code, int) else 2
    try:
        config = load_config(args.config)
        return args.handler(config, args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _MODULE_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
