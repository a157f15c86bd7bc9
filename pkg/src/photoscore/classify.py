"""Three-class linear softmax classifier over photo features, trained
with a label smoothing loss, plus the forced-choice and top-1 evaluation
metrics. Externally produced logits go through the same evaluators.

The loss for logits x, target class c and smoothing epsilon is
    -(1 - eps) * logsoftmax(x)[c] - eps * sum(logsoftmax(x)[i != c]),
computed with a max-shifted, numerically stable log-softmax. Training is
full-batch gradient descent from zero-initialized weights, so results
are byte-reproducible.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .corpus import FEATURE_COLUMNS, FeatureVector
from .errors import PhotoscoreError

#: default model inputs: the 18 photo features, in CSV column order
DEFAULT_FEATURES = [c for c in FEATURE_COLUMNS
                    if c not in ("image_id", "has_detection", "label")]

N_CLASSES = 3


@dataclass
class TrainConfig:
    epsilon: float = 0.05
    learning_rate: float = 0.1
    epochs: int = 500
    l2: float = 0.0
    seed: int = 42
    impute: bool = False

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must be in [0, 1)")
        if self.epochs < 0 or self.learning_rate <= 0 or self.l2 < 0:
            raise ValueError("invalid training hyperparameters")


@dataclass
class ClassifierModel:
    feature_names: list[str]
    weights: np.ndarray  # (3, d + 1), bias last
    epsilon: float
    feature_means: np.ndarray
    feature_stds: np.ndarray
    training_loss: list = field(default_factory=list)


def log_softmax(logits) -> np.ndarray:
    """Stable log-probabilities; exp of the result sums to 1."""
    x = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise PhotoscoreError("non-finite logits")
    shifted = x - x.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def smoothing_loss(logits, c: int, epsilon: float) -> float:
    """Label smoothing loss of one logit triple against class c."""
    if not 0.0 <= epsilon < 1.0:
        raise ValueError("epsilon must be in [0, 1)")
    lp = log_softmax(logits)
    if lp.shape != (N_CLASSES,):
        raise ValueError("expected three logits")
    total = lp.sum()
    return float(-(1.0 - epsilon) * lp[c] - epsilon * (total - lp[c]))


def _smoothing_targets(labels, epsilon):
    t = np.full((labels.shape[0], N_CLASSES), epsilon)
    t[np.arange(labels.shape[0]), labels] = 1.0 - epsilon
    return t


def _mean_loss_and_grad(W, Z1, targets, l2):
    """Objective (mean loss + l2 * ||W||^2) and its gradient in W."""
    n = Z1.shape[0]
    logits = Z1 @ W.T
    lp = log_softmax(logits)
    loss = float(-(targets * lp).sum() / n + l2 * float((W ** 2).sum()))
    p = np.exp(lp)
    # d loss / d logits = (1 + eps) * p - t, since each target row sums to 1 + eps
    grad_logits = p * targets.sum(axis=1, keepdims=True) - targets
    grad_W = grad_logits.T @ Z1 / n + 2.0 * l2 * W
    return loss, grad_W


def feature_matrix(feature_vectors, feature_names=None, impute=False):
    """Stack FeatureVectors into a dense (n, d) matrix.

    Rows with absent values are dropped unless `impute` is set, in which
    case column means over the present values fill the gaps. Returns
    (matrix, kept_row_indices).
    """
    names = list(feature_names or DEFAULT_FEATURES)
    raw = np.full((len(feature_vectors), len(names)), np.nan)
    for i, fv in enumerate(feature_vectors):
        for j, name in enumerate(names):
            value = getattr(fv, name)
            if value is not None and np.isfinite(value):
                raw[i, j] = float(value)
    if impute:
        col_means = np.nanmean(raw, axis=0)
        if np.any(np.isnan(col_means)):
            missing = [names[j] for j in np.flatnonzero(np.isnan(col_means))]
            raise PhotoscoreError(f"features absent in every row: {missing}")
        idx = np.where(np.isnan(raw))
        raw[idx] = col_means[idx[1]]
        kept = np.arange(len(feature_vectors))
    else:
        kept = np.flatnonzero(~np.isnan(raw).any(axis=1))
        raw = raw[kept]
    return raw, kept


def train_classifier(features, config: TrainConfig | None = None) -> ClassifierModel:
    """Train the linear softmax head on (FeatureVector, label) pairs.

    Features are z-scored by training statistics; constant columns are
    dropped with a warning. Training records the objective at the start
    of every epoch in `training_loss`.
    """
    if config is None:
        config = TrainConfig()
    if not features:
        raise PhotoscoreError("no training rows")
    fvs = [fv for fv, _ in features]
    labels_all = np.array([int(label) for _, label in features], dtype=np.int64)
    X, kept = feature_matrix(fvs, impute=config.impute)
    labels = labels_all[kept]
    if X.shape[0] == 0:
        raise PhotoscoreError("no complete training rows (try impute)")
    if len(np.unique(labels)) < 2:
        raise PhotoscoreError("need at least two distinct labels")

    means = X.mean(axis=0)
    stds = X.std(axis=0)
    # relative tolerance: float summation noise leaves constant columns
    # with std around 1e-18 rather than exactly zero
    tol = 1e-12 * np.maximum(1.0, np.abs(means))
    keep_cols = np.flatnonzero(stds > tol)
    if keep_cols.size == 0:
        raise PhotoscoreError("all features are constant")
    if keep_cols.size < len(DEFAULT_FEATURES):
        dropped = [DEFAULT_FEATURES[j] for j in np.flatnonzero(stds <= tol)]
        warnings.warn(f"dropping constant features: {dropped}")
    names = [DEFAULT_FEATURES[j] for j in keep_cols]
    means = means[keep_cols]
    stds = stds[keep_cols]
    Z = (X[:, keep_cols] - means) / stds
    Z1 = np.column_stack([Z, np.ones(Z.shape[0])])

    targets = _smoothing_targets(labels, config.epsilon)
    W = np.zeros((N_CLASSES, Z1.shape[1]))
    trace = []
    for _ in range(config.epochs):
        loss, grad = _mean_loss_and_grad(W, Z1, targets, config.l2)
        trace.append(loss)
        W = W - config.learning_rate * grad
    return ClassifierModel(feature_names=names, weights=W,
                           epsilon=config.epsilon, feature_means=means,
                           feature_stds=stds, training_loss=trace)


def predict_logits(model: ClassifierModel, fv: FeatureVector,
                   impute: bool = False) -> np.ndarray:
    """Raw class scores W . [z-scored features; 1] for one feature vector."""
    row = np.empty(len(model.feature_names))
    for j, name in enumerate(model.feature_names):
        if not hasattr(fv, name):
            raise PhotoscoreError(f"feature {name!r} unknown to this input")
        value = getattr(fv, name)
        if value is None or not np.isfinite(value):
            if not impute:
                raise PhotoscoreError(
                    f"feature {name!r} absent; pass impute to use training means")
            row[j] = model.feature_means[j]
        else:
            row[j] = float(value)
    z = (row - model.feature_means) / model.feature_stds
    return model.weights @ np.append(z, 1.0)


def forced_choice_accuracy(scored) -> tuple[float, int]:
    """Binary accuracy over Good/Bad rows only.

    Rows with Neutral ground truth are excluded. The prediction is
    positive iff x2 > x0 (a tie counts as negative).
    """
    correct = 0
    n_used = 0
    for logits, label in scored:
        label = int(label)
        if label == 1:
            continue
        x = np.asarray(logits, dtype=np.float64)
        predicted_good = x[2] > x[0]
        n_used += 1
        if predicted_good == (label == 2):
            correct += 1
    if n_used == 0:
        raise PhotoscoreError("no forced-choice rows: all labels are neutral")
    return correct / n_used, n_used


def top1_accuracy(scored) -> float:
    """Argmax-vs-label accuracy; argmax ties resolve to the lower index."""
    scored = list(scored)
    if not scored:
        raise PhotoscoreError("no rows to evaluate")
    correct = sum(
        1 for logits, label in scored
        if int(np.argmax(np.asarray(logits, dtype=np.float64))) == int(label))
    return correct / len(scored)


# ---------------------------------------------------------------------------
# Model JSON and logits CSV persistence
# ---------------------------------------------------------------------------

def save_model(model: ClassifierModel, path):
    obj = {
        "feature_names": list(model.feature_names),
        "weights": [[float(v) for v in row] for row in model.weights],
        "epsilon": model.epsilon,
        "means": [float(v) for v in model.feature_means],
        "stds": [float(v) for v in model.feature_stds],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def load_model(path) -> ClassifierModel:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    try:
        return ClassifierModel(
            feature_names=list(obj["feature_names"]),
            weights=np.asarray(obj["weights"], dtype=np.float64),
            epsilon=float(obj["epsilon"]),
            feature_means=np.asarray(obj["means"], dtype=np.float64),
            feature_stds=np.asarray(obj["stds"], dtype=np.float64),
        )
    except KeyError as exc:
        raise PhotoscoreError(f"model file missing field {exc}") from exc


def write_logits_csv(rows, path):
    """Write (image_id, logits) rows as image_id,x0,x1,x2."""
    lines = ["image_id,x0,x1,x2"]
    for image_id, logits in rows:
        x = np.asarray(logits, dtype=np.float64)
        lines.append(f"{image_id},{x[0]:.6g},{x[1]:.6g},{x[2]:.6g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_logits_csv(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != "image_id,x0,x1,x2":
        raise PhotoscoreError(f"not a logits CSV: {path}")
    out = []
    for line in lines[1:]:
        cells = line.split(",")
        out.append((cells[0], np.array([float(c) for c in cells[1:4]])))
    return out
