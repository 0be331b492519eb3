"""One-hidden-layer pattern network trained by scaled conjugate gradient.

The model is softmax(w2 @ tanh(w1 @ x + b1) + b2). Training is
full-batch SCG: conjugate directions with curvature estimated by a
gradient difference at scale sigma0 and a Levenberg-Marquardt style
lambda that grows on failed steps and shrinks on very good ones. A
step is applied only when the comparison parameter is strictly
positive, so the sequence of accepted training losses is strictly
decreasing. With a validation set, training stops after
`early_stop_patience` consecutive accepted steps without improvement
and the best-validation weights are returned.

Inputs are standardized internally (train-set mean/std) for
conditioning, and the starting weights are read as initializing that
conditioned problem. The affine map is folded back into w1/b1 before
weights are returned, so the returned model consumes raw feature
vectors. Pass standardize=False to fine-tune a returned model.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .model import decode_label_token, encode_label_token, label_order_key


class AnnError(ValueError):
    pass


class BadDimensions(AnnError):
    pass


class DimensionMismatch(AnnError):
    pass


class DegenerateSplit(AnnError):
    pass


class NonFiniteLoss(AnnError):
    pass


@dataclass(frozen=True, eq=False)
class MlpModel:
    """Weights plus the ordered class list the output units stand for."""

    w1: np.ndarray  # (hidden, in_dim)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (out_dim, hidden)
    b2: np.ndarray  # (out_dim,)
    classes: tuple

    def __post_init__(self) -> None:
        w1 = np.asarray(self.w1, dtype=np.float64)
        b1 = np.asarray(self.b1, dtype=np.float64)
        w2 = np.asarray(self.w2, dtype=np.float64)
        b2 = np.asarray(self.b2, dtype=np.float64)
        if w1.ndim != 2 or w2.ndim != 2:
            raise BadDimensions("weight matrices must be 2-D")
        hidden, in_dim = w1.shape
        out_dim = w2.shape[0]
        if w2.shape[1] != hidden or b1.shape != (hidden,) or b2.shape != (out_dim,):
            raise BadDimensions(
                f"inconsistent shapes: w1 {w1.shape}, b1 {b1.shape}, "
                f"w2 {w2.shape}, b2 {b2.shape}"
            )
        if len(self.classes) != out_dim:
            raise BadDimensions(
                f"{out_dim} output units but {len(self.classes)} classes"
            )
        for name, arr in (("w1", w1), ("b1", b1), ("w2", w2), ("b2", b2)):
            if not np.all(np.isfinite(arr)):
                raise BadDimensions(f"{name} contains non-finite values")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "classes", tuple(self.classes))

    @property
    def in_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden(self) -> int:
        return self.w1.shape[0]

    @property
    def out_dim(self) -> int:
        return self.w2.shape[0]

    def to_flat(self) -> np.ndarray:
        """Parameters flattened in the fixed order w1, b1, w2, b2 (row-major)."""
        return np.concatenate(
            [self.w1.ravel(), self.b1, self.w2.ravel(), self.b2]
        )

    def with_flat(self, flat: np.ndarray) -> "MlpModel":
        """Same shapes and classes, parameters taken from `flat`."""
        h, d, c = self.hidden, self.in_dim, self.out_dim
        sizes = [h * d, h, c * h, c]
        if flat.shape != (sum(sizes),):
            raise BadDimensions(f"flat vector has {flat.shape}, need {sum(sizes)}")
        parts = np.split(np.asarray(flat, dtype=np.float64), np.cumsum(sizes)[:-1])
        return MlpModel(
            w1=parts[0].reshape(h, d), b1=parts[1],
            w2=parts[2].reshape(c, h), b2=parts[3],
            classes=self.classes,
        )


def _default_classes(out_dim: int, classes) -> tuple:
    if classes is None:
        return tuple(range(out_dim))
    if len(classes) != out_dim:
        raise BadDimensions(f"{out_dim} output units but {len(classes)} classes")
    return tuple(classes)


def mlp_init(in_dim: int, hidden: int, out_dim: int, seed: int,
             classes=None) -> MlpModel:
    """Deterministic 1/sqrt(fan-in) normal weights, zero biases."""
    if min(in_dim, hidden, out_dim) < 1:
        raise BadDimensions(f"dims must be >= 1: {(in_dim, hidden, out_dim)}")
    rng = np.random.default_rng(seed)
    return MlpModel(
        w1=rng.standard_normal((hidden, in_dim)) / math.sqrt(in_dim),
        b1=np.zeros(hidden),
        w2=rng.standard_normal((out_dim, hidden)) / math.sqrt(hidden),
        b2=np.zeros(out_dim),
        classes=_default_classes(out_dim, classes),
    )


def mlp_zero(in_dim: int, hidden: int, out_dim: int, classes=None) -> MlpModel:
    """All-zero weights: posterior is uniform for any input."""
    if min(in_dim, hidden, out_dim) < 1:
        raise BadDimensions(f"dims must be >= 1: {(in_dim, hidden, out_dim)}")
    return MlpModel(
        w1=np.zeros((hidden, in_dim)), b1=np.zeros(hidden),
        w2=np.zeros((out_dim, hidden)), b2=np.zeros(out_dim),
        classes=_default_classes(out_dim, classes),
    )


def forward_batch(model: MlpModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.in_dim:
        raise DimensionMismatch(f"batch shape {X.shape}, model input {model.in_dim}")
    hidden = np.tanh(X @ model.w1.T + model.b1)
    logits = hidden @ model.w2.T + model.b2
    logits -= logits.max(axis=1, keepdims=True)
    exp = np.exp(logits)
    return exp / exp.sum(axis=1, keepdims=True)


def forward(model: MlpModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.in_dim,):
        raise DimensionMismatch(f"input shape {x.shape}, model input {model.in_dim}")
    return forward_batch(model, x[None, :])[0]


def loss_and_grad(model: MlpModel, X, y) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch and its gradient.

    `y` holds class indices (positions in model.classes). The gradient
    is flattened in the same order as MlpModel.to_flat().
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.intp)
    if X.ndim != 2 or X.shape[1] != model.in_dim:
        raise DimensionMismatch(f"batch shape {X.shape}, model input {model.in_dim}")
    if y.shape != (X.shape[0],) or X.shape[0] == 0:
        raise DimensionMismatch("need one class index per batch row")
    if y.size and (y.min() < 0 or y.max() >= model.out_dim):
        raise DimensionMismatch("class index out of range")
    n = X.shape[0]
    hidden = np.tanh(X @ model.w1.T + model.b1)
    logits = hidden @ model.w2.T + model.b2
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_posterior = shifted - log_norm
    loss = float(-log_posterior[np.arange(n), y].mean())

    d_logits = np.exp(log_posterior)
    d_logits[np.arange(n), y] -= 1.0
    d_logits /= n
    g_w2 = d_logits.T @ hidden
    g_b2 = d_logits.sum(axis=0)
    d_hidden = (d_logits @ model.w2) * (1.0 - hidden * hidden)
    g_w1 = d_hidden.T @ X
    g_b1 = d_hidden.sum(axis=0)
    grad = np.concatenate([g_w1.ravel(), g_b1, g_w2.ravel(), g_b2])
    return loss, grad


def predict_ranked(model: MlpModel, x) -> list[tuple]:
    """All classes with posteriors, best first; ties keep class order."""
    posterior = forward(model, x)
    order = np.argsort(-posterior, kind="stable")
    return [(model.classes[i], float(posterior[i])) for i in order]


def predict_batch(model: MlpModel, X) -> np.ndarray:
    posterior = forward_batch(model, X)
    idx = np.argmax(posterior, axis=1)
    return np.asarray([model.classes[i] for i in idx])


@dataclass(frozen=True)
class ScgConfig:
    sigma0: float = 1e-4
    lambda0: float = 1e-6
    max_epochs: int = 1000
    early_stop_patience: int = 6
    seed: int = 0
    standardize: bool = True

    def __post_init__(self) -> None:
        if self.sigma0 <= 0 or self.lambda0 <= 0:
            raise ValueError("sigma0 and lambda0 must be positive")
        if self.max_epochs < 0 or self.early_stop_patience < 1:
            raise ValueError("bad epoch/patience settings")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: Optional[float]
    accepted: bool


@dataclass(frozen=True)
class SplitSpec:
    """Stratified train/validation/test fractions."""

    train: float = 0.70
    validation: float = 0.15
    test: float = 0.15
    seed: int = 0

    def __post_init__(self) -> None:
        parts = (self.train, self.validation, self.test)
        if any(f < 0.0 for f in parts):
            raise ValueError("fractions must be non-negative")
        if abs(sum(parts) - 1.0) > 1e-9:
            raise ValueError(f"fractions must sum to 1, got {sum(parts)}")


def split_indices(labels, spec: SplitSpec = SplitSpec()):
    """Stratified (train, validation, test) index arrays.

    Each class is shuffled by the spec seed and allocated by largest
    remainder; remainder seats break ties toward the bucket furthest
    below its global quota, so equal fractions stay balanced overall.
    """
    labels = list(labels)
    if not labels:
        raise DegenerateSplit("no labels to split")
    fractions = (spec.train, spec.validation, spec.test)
    rng = np.random.default_rng((spec.seed, 0x5711))
    by_class: dict = {}
    for i, lab in enumerate(labels):
        by_class.setdefault(lab, []).append(i)
    buckets: tuple[list[int], ...] = ([], [], [])
    placed = 0
    for lab in sorted(by_class, key=label_order_key):
        idx = np.array(by_class[lab], dtype=np.intp)
        idx = idx[rng.permutation(idx.size)]
        quotas = [idx.size * f for f in fractions]
        take = [int(math.floor(q)) for q in quotas]
        for _ in range(idx.size - sum(take)):
            deficit = [
                (quotas[b] - take[b], (placed + sum(take)) * fractions[b] - len(buckets[b]) - take[b], -b)
                for b in range(3)
            ]
            b = max(range(3), key=lambda j: deficit[j])
            take[b] += 1
        cut1, cut2 = take[0], take[0] + take[1]
        buckets[0].extend(idx[:cut1].tolist())
        buckets[1].extend(idx[cut1:cut2].tolist())
        buckets[2].extend(idx[cut2:].tolist())
        placed += idx.size
    return tuple(np.array(sorted(b), dtype=np.intp) for b in buckets)


_LAMBDA_CAP = 1e100
_GRAD_TOL = 1e-10


def _standardizer(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd == 0.0, 1.0, sd)
    return mu, sd


def _to_raw(model: MlpModel, mu, sd) -> MlpModel:
    # same function on raw inputs: w1' x + b1' == w1 (x - mu) / sd + b1
    w1 = model.w1 / sd[None, :]
    b1 = model.b1 - w1 @ mu
    return MlpModel(w1=w1, b1=b1, w2=model.w2, b2=model.b2, classes=model.classes)


def scg_train(model: MlpModel, X_train, y_train, X_val=None, y_val=None,
              config: ScgConfig = ScgConfig()) -> tuple[MlpModel, list[EpochRecord]]:
    """Full-batch SCG. Returns (trained model, per-epoch history).

    `y_train`/`y_val` hold class indices. Epoch 0 in the history is the
    untrained baseline. With config.standardize the incoming weights
    initialize the standardized problem while the returned model always
    consumes raw features. Raises DegenerateSplit when some class is
    absent from the training rows and NonFiniteLoss when the loss or
    gradient diverges.
    """
    X_train = np.asarray(X_train, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.intp)
    present = set(np.unique(y_train).tolist())
    if present != set(range(model.out_dim)):
        missing = sorted(set(range(model.out_dim)) - present)
        raise DegenerateSplit(f"classes missing from training data: {missing}")
    has_val = X_val is not None
    if has_val:
        X_val = np.asarray(X_val, dtype=np.float64)
        y_val = np.asarray(y_val, dtype=np.intp)

    # With standardize on, the given weights initialize the conditioned
    # problem directly. Rescaling them to compensate for the input map
    # would multiply w1 by the feature spreads (1e4 for energy features)
    # and park every tanh unit deep in saturation before the first step.
    if config.standardize:
        mu, sd = _standardizer(X_train)
        X_train = (X_train - mu) / sd
        if has_val:
            X_val = (X_val - mu) / sd
    else:
        mu = sd = None
    work = model

    def evaluate(flat: np.ndarray) -> tuple[float, np.ndarray]:
        loss, grad = loss_and_grad(work.with_flat(flat), X_train, y_train)
        if not (math.isfinite(loss) and np.all(np.isfinite(grad))):
            raise NonFiniteLoss(f"diverged: loss={loss}")
        return loss, grad

    def val_loss_at(flat: np.ndarray) -> Optional[float]:
        if not has_val:
            return None
        loss, _ = loss_and_grad(work.with_flat(flat), X_val, y_val)
        if not math.isfinite(loss):
            raise NonFiniteLoss("validation loss diverged")
        return loss

    flat = work.to_flat()
    n_params = flat.size
    loss, grad = evaluate(flat)
    residual = -grad
    direction = residual.copy()
    lam = config.lambda0
    lam_bar = 0.0
    success = True
    delta = 0.0
    mu_dir = 0.0
    norm_p2 = 0.0

    val = val_loss_at(flat)
    history = [EpochRecord(0, loss, val, True)]
    best_val = val if has_val else loss
    best_flat = flat.copy()
    stall = 0

    for epoch in range(1, config.max_epochs + 1):
        if float(np.linalg.norm(residual)) < _GRAD_TOL:
            break
        if success:
            mu_dir = float(direction @ residual)
            if mu_dir <= 0.0:  # safeguard: restart on a non-descent direction
                direction = residual.copy()
                mu_dir = float(residual @ residual)
            norm_p2 = float(direction @ direction)
            sigma = config.sigma0 / math.sqrt(norm_p2)
            _, grad_probe = evaluate(flat + sigma * direction)
            s = (grad_probe - grad) / sigma
            delta = float(direction @ s)
        delta = delta + (lam - lam_bar) * norm_p2
        if delta <= 0.0:  # make the curvature estimate positive definite
            lam_bar = 2.0 * (lam - delta / norm_p2)
            delta = -delta + lam * norm_p2
            lam = lam_bar
        alpha = mu_dir / delta
        candidate = flat + alpha * direction
        new_loss, new_grad = evaluate(candidate)
        comparison = 2.0 * delta * (loss - new_loss) / (mu_dir * mu_dir)

        if comparison > 0.0:  # accept the step
            flat = candidate
            loss = new_loss
            new_residual = -new_grad
            lam_bar = 0.0
            success = True
            if epoch % n_params == 0:  # periodic restart to steepest descent
                direction = new_residual.copy()
            else:
                beta = float(
                    (new_residual @ new_residual - new_residual @ residual) / mu_dir
                )
                direction = new_residual + beta * direction
            residual = new_residual
            grad = new_grad
            if comparison >= 0.75:
                lam = 0.25 * lam
        else:
            lam_bar = lam
            success = False
        if comparison < 0.25:
            lam = min(lam + delta * (1.0 - comparison) / norm_p2, _LAMBDA_CAP)

        if success:
            val = val_loss_at(flat)
        history.append(EpochRecord(epoch, loss, val, success))

        if success:
            score = val if has_val else loss
            if score < best_val:
                best_val = score
                best_flat = flat.copy()
                stall = 0
            elif has_val:
                stall += 1
                if stall >= config.early_stop_patience:
                    break

    final = best_flat if has_val else flat
    trained = work.with_flat(final)
    if config.standardize:
        trained = _to_raw(trained, mu, sd)
    return trained, history


# ------------------------------------------------------------- persistence

def save_mlp(model: MlpModel, path, layout_digest: str,
             config: Optional[ScgConfig] = None) -> None:
    record = {
        "kind": "mlp",
        "layout_digest": layout_digest,
        "in_dim": model.in_dim,
        "hidden": model.hidden,
        "activation": ["tanh", "softmax"],
        "classes": [encode_label_token(c) for c in model.classes],
        "w1": model.w1.tolist(),
        "b1": model.b1.tolist(),
        "w2": model.w2.tolist(),
        "b2": model.b2.tolist(),
    }
    if config is not None:
        record["train_config"] = {
            "sigma0": config.sigma0, "lambda0": config.lambda0,
            "max_epochs": config.max_epochs,
            "early_stop_patience": config.early_stop_patience,
            "seed": config.seed, "standardize": config.standardize,
        }
    Path(path).write_text(json.dumps(record, separators=(",", ":")) + "\n")


def load_mlp(path) -> tuple[MlpModel, str]:
    record = json.loads(Path(path).read_text())
    if record.get("kind") != "mlp":
        raise AnnError(f"not an mlp model file: kind={record.get('kind')!r}")
    model = MlpModel(
        w1=np.asarray(record["w1"], dtype=np.float64),
        b1=np.asarray(record["b1"], dtype=np.float64),
        w2=np.asarray(record["w2"], dtype=np.float64),
        b2=np.asarray(record["b2"], dtype=np.float64),
        classes=tuple(decode_label_token(c) for c in record["classes"]),
    )
    return model, str(record.get("layout_digest", ""))
