"""k-nearest-neighbour classification with pluggable metric.

Touch actions are classified in two stages: a 1-NN Euclidean vote over
{click, hold, zoom_in, zoom_out, scroll} (all scroll directions
collapsed), then, when stage one says scroll, a 1-NN city-block vote
over the four directions, trained on the ground-truth scroll samples.

Prediction rules, exercised verbatim by the oracle tests: neighbours
are ordered by (distance, training index); the majority label among the
first k wins; a vote tie goes to the tied label whose earliest
neighbour in that order comes first (smallest distance, then lowest
training index).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Hashable, Iterable, Sequence, Union

import numpy as np

from .model import (
    SCROLL_ACTIONS,
    SCROLL_COLLAPSED,
    TouchAction,
    decode_label_token,
    encode_label_token,
)


class KnnError(ValueError):
    pass


class LengthMismatch(KnnError):
    pass


class EmptyTrainingSet(KnnError):
    pass


class InconsistentDimensions(KnnError):
    pass


class KTooLarge(KnnError):
    pass


class DimensionMismatch(KnnError):
    pass


class Metric(str, Enum):
    EUCLIDEAN = "euclidean"
    CITY_BLOCK = "city_block"


def distance(a, b, metric: Metric) -> float:
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape or va.ndim != 1:
        raise LengthMismatch(f"vector shapes differ: {va.shape} vs {vb.shape}")
    if metric is Metric.EUCLIDEAN:
        return float(np.sqrt(np.sum((va - vb) ** 2)))
    return float(np.sum(np.abs(va - vb)))


@dataclass(frozen=True)
class KnnModel:
    """Lazy learner: the training set verbatim plus (k, metric)."""

    vectors: np.ndarray
    labels: tuple[Hashable, ...]
    k: int
    metric: Metric

    def __post_init__(self) -> None:
        vectors = np.asarray(self.vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] == 0:
            raise EmptyTrainingSet("need a non-empty 2-D training matrix")
        if len(self.labels) != vectors.shape[0]:
            raise KnnError("one label per training vector required")
        if self.k < 1:
            raise KnnError(f"k must be >= 1, got {self.k}")
        if self.k > vectors.shape[0]:
            raise KTooLarge(f"k={self.k} exceeds training size {vectors.shape[0]}")
        vectors = vectors.copy()
        vectors.flags.writeable = False
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def knn_fit(train: Iterable[tuple[Sequence[float], Hashable]], k: int,
            metric: Metric) -> KnnModel:
    pairs = list(train)
    if not pairs:
        raise EmptyTrainingSet("empty training set")
    dims = {np.asarray(v).shape for v, _ in pairs}
    if len(dims) != 1 or any(len(shape) != 1 for shape in dims):
        raise InconsistentDimensions(f"training vector shapes: {sorted(dims)}")
    vectors = np.asarray([np.asarray(v, dtype=np.float64) for v, _ in pairs])
    labels = tuple(label for _, label in pairs)
    return KnnModel(vectors=vectors, labels=labels, k=k, metric=metric)


def _distances(model: KnnModel, query: np.ndarray) -> np.ndarray:
    diff = model.vectors - query
    if model.metric is Metric.EUCLIDEAN:
        return np.sqrt(np.sum(diff * diff, axis=1))
    return np.sum(np.abs(diff), axis=1)


def knn_predict(model: KnnModel, query) -> Hashable:
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (model.dim,):
        raise DimensionMismatch(f"query shape {q.shape}, model dim {model.dim}")
    dists = _distances(model, q)
    # stable sort keeps equal distances in training-index order
    order = np.argsort(dists, kind="stable")[: model.k]
    votes: dict[Hashable, int] = {}
    for i in order:
        label = model.labels[i]
        votes[label] = votes.get(label, 0) + 1
    best = max(votes.values())
    if sum(1 for count in votes.values() if count == best) == 1:
        return max(votes, key=votes.get)
    tied = {label for label, count in votes.items() if count == best}
    for i in order:
        if model.labels[i] in tied:
            return model.labels[i]
    raise AssertionError("unreachable: some tied label occurs among neighbours")


def knn_predict_batch(model: KnnModel, queries) -> list[Hashable]:
    return [knn_predict(model, q) for q in np.asarray(queries, dtype=np.float64)]


# ---------------------------------------------------------------- two-stage

_SCROLL_VALUES = {a.value for a in SCROLL_ACTIONS}


def collapse_scroll(action: TouchAction) -> str:
    """Stage-1 label: the action value with all scroll directions merged."""
    return SCROLL_COLLAPSED if action in SCROLL_ACTIONS else action.value


@dataclass(frozen=True)
class TwoStageModel:
    stage1: KnnModel
    stage2: KnnModel


def fit_two_stage(vectors, labels: Sequence[TouchAction], k: int = 1) -> TwoStageModel:
    """Train both stages; stage 2 sees only the ground-truth scroll samples."""
    matrix = np.asarray(vectors, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != len(labels):
        raise KnnError("vectors must be (n, d) with one action label per row")
    stage1 = knn_fit(
        [(row, collapse_scroll(action)) for row, action in zip(matrix, labels)],
        k=k, metric=Metric.EUCLIDEAN,
    )
    scroll_pairs = [
        (row, action.value)
        for row, action in zip(matrix, labels)
        if action in SCROLL_ACTIONS
    ]
    if not scroll_pairs:
        raise EmptyTrainingSet("two-stage fit needs at least one scroll sample")
    stage2 = knn_fit(scroll_pairs, k=min(k, len(scroll_pairs)), metric=Metric.CITY_BLOCK)
    return TwoStageModel(stage1=stage1, stage2=stage2)


def two_stage_predict(model: TwoStageModel, query) -> TouchAction:
    first = knn_predict(model.stage1, query)
    if first != SCROLL_COLLAPSED:
        return TouchAction(first)
    return TouchAction(knn_predict(model.stage2, query))


# -------------------------------------------------------------- persistence

AnyKnn = Union[KnnModel, TwoStageModel]


def _stage_to_json(model: KnnModel) -> dict:
    return {
        "metric": model.metric.value,
        "k": model.k,
        "labels": [encode_label_token(label) for label in model.labels],
        "vectors": model.vectors.tolist(),
    }


def _stage_from_json(record: dict) -> KnnModel:
    return KnnModel(
        vectors=np.asarray(record["vectors"], dtype=np.float64),
        labels=tuple(decode_label_token(text) for text in record["labels"]),
        k=int(record["k"]),
        metric=Metric(record["metric"]),
    )


def save_model(model: AnyKnn, path, layout_digest: str) -> None:
    """Write a self-describing model file (metric, k, layout hash, vectors)."""
    if isinstance(model, TwoStageModel):
        record = {
            "kind": "two-stage-knn",
            "layout_digest": layout_digest,
            "stage1": _stage_to_json(model.stage1),
            "stage2": _stage_to_json(model.stage2),
        }
    else:
        record = {
            "kind": "knn",
            "layout_digest": layout_digest,
            **_stage_to_json(model),
        }
    Path(path).write_text(json.dumps(record, separators=(",", ":")) + "\n")


def load_model(path) -> tuple[AnyKnn, str]:
    """Returns (model, layout_digest recorded at save time)."""
    record = json.loads(Path(path).read_text())
    kind = record.get("kind")
    digest = str(record.get("layout_digest", ""))
    if kind == "two-stage-knn":
        return (
            TwoStageModel(
                stage1=_stage_from_json(record["stage1"]),
                stage2=_stage_from_json(record["stage2"]),
            ),
            digest,
        )
    if kind == "knn":
        return _stage_from_json(record), digest
    raise KnnError(f"not a knn model file: kind={kind!r}")
