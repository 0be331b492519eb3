"""Cross-validation, confusion matrices, guess-rank curves, and reports.

Confusion tables normalize per actual class and render with actual
classes as columns, so every column of the text table sums to 100%.
Guess curves give the cumulative chance that the true digit appears
within the top r ranked guesses, per class and averaged over the test
set. `write_report` emits three artifacts: an aligned-text report, a
newline-delimited record file, and (when a guess curve is present) a
per-rank plot-data file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Hashable, Optional, Sequence

import numpy as np

from .ann import MlpModel, forward_batch
from .knn import Metric, fit_two_stage, knn_fit, knn_predict_batch, two_stage_predict
from .model import decode_label_token, encode_label_token, label_order_key


class EvalError(ValueError):
    pass


class KTooLarge(EvalError):
    pass


class LengthMismatch(EvalError):
    pass


class UnknownClass(EvalError):
    pass


# A classifier spec is a fit function: (X_train, labels_train) -> predictor,
# where the predictor maps a (m, d) query block to m predicted labels.
FitFn = Callable[[np.ndarray, Sequence[Hashable]], Callable[[np.ndarray], Sequence[Hashable]]]


def knn_classifier(k: int = 1, metric: Metric = Metric.EUCLIDEAN) -> FitFn:
    def fit(X, labels):
        model = knn_fit(list(zip(X, labels)), k=k, metric=metric)
        return lambda queries: knn_predict_batch(model, queries)

    return fit


def two_stage_classifier(k: int = 1) -> FitFn:
    def fit(X, labels):
        model = fit_two_stage(X, labels, k=k)
        return lambda queries: [
            two_stage_predict(model, q)
            for q in np.asarray(queries, dtype=np.float64)
        ]

    return fit


# ------------------------------------------------------------- confusion


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """counts[actual][predicted] over a fixed class order."""

    classes: tuple
    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        n = len(self.classes)
        if counts.shape != (n, n):
            raise EvalError(f"counts shape {counts.shape} != ({n}, {n})")
        if (counts < 0).any():
            raise EvalError("negative confusion counts")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def overall_rate(self) -> float:
        return float(np.trace(self.counts)) / self.total

    @property
    def percentages(self) -> np.ndarray:
        """Per-actual-class percentages; rows with no samples stay zero."""
        row = self.counts.sum(axis=1, keepdims=True).astype(np.float64)
        safe = np.where(row == 0.0, 1.0, row)
        return np.asarray(self.counts, dtype=np.float64) / safe * 100.0

    def per_class_rate(self, label) -> float:
        i = self.classes.index(label)
        row = self.counts[i].sum()
        if row == 0:
            raise EvalError(f"no samples with actual class {label!r}")
        return float(self.counts[i, i]) / float(row)


def confusion_from_pairs(pairs, classes=None) -> ConfusionMatrix:
    """Build a matrix from (actual, predicted) pairs.

    Without an explicit class list, classes are the union of both sides
    in canonical label order.
    """
    pairs = list(pairs)
    if not pairs:
        raise EvalError("no prediction pairs")
    if classes is None:
        seen = {a for a, _ in pairs} | {p for _, p in pairs}
        classes = tuple(sorted(seen, key=label_order_key))
    else:
        classes = tuple(classes)
    index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for actual, predicted in pairs:
        if actual not in index or predicted not in index:
            raise UnknownClass(f"pair ({actual!r}, {predicted!r}) outside class list")
        counts[index[actual], index[predicted]] += 1
    return ConfusionMatrix(classes=classes, counts=counts)


# ------------------------------------------------------- cross-validation


def kfold_split(n: int, k: int, seed: int, labels) -> list[np.ndarray]:
    """Stratified k-fold index partition, deterministic in the seed.

    Classes are shuffled independently and dealt round-robin with one
    cursor shared across classes, so fold sizes differ by at most one
    both globally and within every class.
    """
    labels = list(labels)
    if len(labels) != n:
        raise LengthMismatch(f"{len(labels)} labels for n={n}")
    if not 1 <= k <= n:
        raise KTooLarge(f"need 1 <= k <= {n}, got {k}")
    rng = np.random.default_rng((seed, 0xF01D))
    by_class: dict = {}
    for i, lab in enumerate(labels):
        by_class.setdefault(lab, []).append(i)
    folds: list[list[int]] = [[] for _ in range(k)]
    cursor = 0
    for lab in sorted(by_class, key=label_order_key):
        idx = np.array(by_class[lab], dtype=np.intp)
        for i in idx[rng.permutation(idx.size)]:
            folds[cursor % k].append(int(i))
            cursor += 1
    return [np.array(sorted(f), dtype=np.intp) for f in folds]


@dataclass(frozen=True)
class CvResult:
    """Pooled out-of-fold predictions, one (actual, predicted) per sample."""

    pairs: tuple
    classes: tuple
    k: int
    seed: int

    @property
    def matrix(self) -> ConfusionMatrix:
        return confusion_from_pairs(self.pairs, classes=self.classes)

    @property
    def overall_rate(self) -> float:
        return self.matrix.overall_rate


def cross_validate(X, labels, fit: FitFn, k: int = 10, seed: int = 0) -> CvResult:
    """k-fold cross-validation pooling every held-out prediction."""
    X = np.asarray(X, dtype=np.float64)
    labels = list(labels)
    if X.ndim != 2 or X.shape[0] != len(labels):
        raise LengthMismatch(f"{X.shape} rows vs {len(labels)} labels")
    if len(set(labels)) < 2:
        raise EvalError("need at least 2 classes to cross-validate")
    if k < 2:
        raise KTooLarge("cross-validation needs k >= 2")
    folds = kfold_split(len(labels), k, seed, labels)
    predicted: dict[int, Hashable] = {}
    for fold in folds:
        mask = np.ones(len(labels), dtype=bool)
        mask[fold] = False
        train_labels = [labels[i] for i in np.flatnonzero(mask)]
        predict = fit(X[mask], train_labels)
        for i, p in zip(fold, predict(X[fold])):
            predicted[int(i)] = p
    pairs = tuple((labels[i], predicted[i]) for i in range(len(labels)))
    seen = {a for a, _ in pairs} | {p for _, p in pairs}
    classes = tuple(sorted(seen, key=label_order_key))
    return CvResult(pairs=pairs, classes=classes, k=k, seed=seed)


# ------------------------------------------------------------ guess curve


@dataclass(frozen=True, eq=False)
class GuessCurve:
    """Cumulative hit-rate (fraction) at ranks 1..len(classes)."""

    classes: tuple
    average: np.ndarray
    per_class: dict

    def __post_init__(self) -> None:
        avg = np.asarray(self.average, dtype=np.float64)
        avg.flags.writeable = False
        object.__setattr__(self, "average", avg)

    @property
    def ranks(self) -> range:
        return range(1, len(self.classes) + 1)


def guess_curve(model: MlpModel, X_test, y_test) -> GuessCurve:
    """Rank positions of the true class under the model's posterior order.

    Ties in posterior break toward the lower class position, matching
    predict_ranked.
    """
    X = np.asarray(X_test, dtype=np.float64)
    y = list(y_test)
    if X.ndim != 2 or not y or X.shape[0] != len(y):
        raise LengthMismatch(f"{X.shape} rows vs {len(y)} labels")
    index = {c: i for i, c in enumerate(model.classes)}
    try:
        truth = np.array([index[label] for label in y], dtype=np.intp)
    except KeyError as exc:
        raise UnknownClass(f"label {exc.args[0]!r} not among model classes") from None
    posteriors = forward_batch(model, X)
    order = np.argsort(-posteriors, axis=1, kind="stable")
    # rank (1-based) at which each sample's true class appears
    position = np.argmax(order == truth[:, None], axis=1) + 1
    n_ranks = len(model.classes)
    hits = position[:, None] <= np.arange(1, n_ranks + 1)[None, :]
    per_class = {}
    for c in model.classes:
        rows = truth == index[c]
        if rows.any():
            per_class[c] = hits[rows].mean(axis=0)
    return GuessCurve(
        classes=tuple(model.classes),
        average=hits.mean(axis=0),
        per_class=per_class,
    )


# ---------------------------------------------------------------- reports

_ORDINALS = (
    "First", "Second", "Third", "Fourth", "Fifth",
    "Sixth", "Seventh", "Eighth", "Ninth", "Tenth",
)
_GUESS_TABLE_RANKS = 7


@dataclass(frozen=True)
class EvalReport:
    title: str
    method: str
    seeds: dict
    matrices: tuple = ()
    digit_grid: Optional[tuple] = None  # (profile name, grid, {digit: top-1 %})
    guess: Optional[GuessCurve] = None


def _token(label) -> str:
    if isinstance(label, str):
        return label
    return encode_label_token(label)


def _name(label) -> str:
    return str(label)


def render_confusion(matrix: ConfusionMatrix, name: str = "confusion") -> str:
    """Aligned table, columns = actual class, rows = predicted class."""
    names = [_name(c) for c in matrix.classes]
    pct = matrix.percentages.T  # [predicted, actual]
    label_w = max(len("predicted \\ actual"), *(len(n) for n in names))
    col_w = [max(len(n), 7) for n in names]
    rows = [f"{name} (n={matrix.total}, overall rate {matrix.overall_rate * 100.0:.2f}%)"]
    head = "predicted \\ actual".ljust(label_w)
    rows.append("  ".join([head] + [n.rjust(w) for n, w in zip(names, col_w)]))
    for i, n in enumerate(names):
        cells = [f"{pct[i, j]:.2f}".rjust(w) for j, w in enumerate(col_w)]
        rows.append("  ".join([n.ljust(label_w)] + cells))
    totals = pct.sum(axis=0)
    cells = [f"{totals[j]:.2f}".rjust(w) for j, w in enumerate(col_w)]
    rows.append("  ".join(["Total".ljust(label_w)] + cells))
    return "\n".join(rows)


def render_digit_grid(profile_name: str, grid: dict, rates: dict) -> str:
    """Per-digit rates laid out like the keypad of the device profile."""
    n_rows = 1 + max(r for r, _ in grid.values())
    n_cols = 1 + max(c for _, c in grid.values())
    cells = [["" for _ in range(n_cols)] for _ in range(n_rows)]
    for digit, (r, c) in grid.items():
        rate = rates.get(digit)
        shown = "  --" if rate is None else f"{rate:5.1f}"
        cells[r][c] = f"{digit} {shown}"
    width = max(len(cell) for row in cells for cell in row)
    lines = [f"digit hit rate (%), keypad layout of {profile_name}"]
    for row in cells:
        lines.append("   ".join(cell.ljust(width) for cell in row).rstrip())
    return "\n".join(lines)


def render_guess_table(curve: GuessCurve) -> str:
    """Cumulative identification rates by guess count, one column per class."""
    names = [_name(c) for c in curve.classes]
    col_w = [max(len(n), 6) for n in names]
    lines = ["identification rate (%) by number of guesses"]
    head = "guess".ljust(8)
    lines.append("  ".join([head] + [n.rjust(w) for n, w in zip(names, col_w)] + ["average".rjust(7)]))
    shown = min(_GUESS_TABLE_RANKS, len(curve.classes))
    for r in range(shown):
        cells = []
        for c, w in zip(curve.classes, col_w):
            row = curve.per_class.get(c)
            cells.append(("--" if row is None else f"{row[r] * 100.0:.1f}").rjust(w))
        avg = f"{curve.average[r] * 100.0:.1f}".rjust(7)
        lines.append("  ".join([_ORDINALS[r].ljust(8)] + cells + [avg]))
    return "\n".join(lines)


def render_report(report: EvalReport) -> str:
    parts = [report.title, f"method: {report.method}"]
    if report.seeds:
        seeds = ", ".join(f"{k}={v}" for k, v in sorted(report.seeds.items()))
        parts.append(f"seeds: {seeds}")
    for name, matrix in report.matrices:
        parts.append("")
        parts.append(render_confusion(matrix, name=name))
    if report.digit_grid is not None:
        parts.append("")
        parts.append(render_digit_grid(*report.digit_grid))
    if report.guess is not None:
        parts.append("")
        parts.append(render_guess_table(report.guess))
    return "\n".join(parts) + "\n"


def _records(report: EvalReport):
    yield {
        "record": "eval-report",
        "title": report.title,
        "method": report.method,
        "seeds": dict(sorted(report.seeds.items())),
    }
    for name, matrix in report.matrices:
        yield {
            "record": "confusion",
            "name": name,
            "classes": [_token(c) for c in matrix.classes],
            "counts": matrix.counts.tolist(),
            "overall_rate": matrix.overall_rate,
        }
    if report.digit_grid is not None:
        profile_name, grid, rates = report.digit_grid
        yield {
            "record": "digit-grid",
            "profile": profile_name,
            "grid": {_token(d): list(grid[d]) for d in sorted(grid)},
            "rates": {_token(d): rate for d, rate in sorted(rates.items())},
        }
    if report.guess is not None:
        curve = report.guess
        yield {
            "record": "guess-curve",
            "classes": [_token(c) for c in curve.classes],
            "average": curve.average.tolist(),
            "per_class": {_token(c): row.tolist() for c, row in curve.per_class.items()},
        }


def report_from_records(lines) -> EvalReport:
    """Rebuild a report from its newline-delimited record form.

    Inverse of the records file written by write_report: rendering the
    returned report reproduces the original text byte for byte.
    """
    header = None
    matrices = []
    digit_grid = None
    guess = None
    for line in lines:
        if not line.strip():
            continue
        record = json.loads(line)
        kind = record.get("record")
        if kind == "eval-report":
            header = record
        elif kind == "confusion":
            classes = tuple(decode_label_token(c) for c in record["classes"])
            counts = np.asarray(record["counts"], dtype=np.int64)
            matrices.append((record["name"], ConfusionMatrix(classes, counts)))
        elif kind == "digit-grid":
            grid = {decode_label_token(d): tuple(rc)
                    for d, rc in record["grid"].items()}
            rates = {decode_label_token(d): rate
                     for d, rate in record["rates"].items()}
            digit_grid = (record["profile"], grid, rates)
        elif kind == "guess-curve":
            guess = GuessCurve(
                classes=tuple(decode_label_token(c) for c in record["classes"]),
                average=np.asarray(record["average"], dtype=np.float64),
                per_class={
                    decode_label_token(c): np.asarray(v, dtype=np.float64)
                    for c, v in record["per_class"].items()
                },
            )
        else:
            raise EvalError(f"unknown record kind {kind!r}")
    if header is None:
        raise EvalError("no eval-report record found")
    return EvalReport(title=header["title"], method=header["method"],
                      seeds=header["seeds"], matrices=tuple(matrices),
                      digit_grid=digit_grid, guess=guess)


def write_report(report: EvalReport, stem) -> dict[str, Path]:
    """Write text/records (and plot data when a curve is present)."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    paths = {
        "text": stem.with_suffix(".txt"),
        "records": stem.with_suffix(".jsonl"),
    }
    paths["text"].write_text(render_report(report), encoding="utf-8")
    with paths["records"].open("w", encoding="utf-8") as fh:
        for record in _records(report):
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")
    if report.guess is not None:
        curve = report.guess
        paths["plot"] = stem.with_suffix(".guess.jsonl")
        with paths["plot"].open("w", encoding="utf-8") as fh:
            for r in curve.ranks:
                row = {
                    "rank": r,
                    "average": float(curve.average[r - 1]),
                    "per_class": {
                        _token(c): float(vals[r - 1])
                        for c, vals in curve.per_class.items()
                    },
                }
                fh.write(json.dumps(row, separators=(",", ":")) + "\n")
    return paths
