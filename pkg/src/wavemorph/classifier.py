"""Deterministic logistic baseline over selected-sub-band entropy features.

This stands in for a heavyweight learned detector: features are the
per-image entropies of the selected sub-bands (in rank order), the
model is L2-regularized logistic regression fit by full-batch gradient
descent with Armijo backtracking from a zero start.  Everything is a
pure function of its inputs, so sweeps are reproducible bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .features import BONAFIDE, MORPHED
from .metrics import ScoreSet, roc_auc
from .selection import KlRankingTable, TopK, select

DEFAULT_LAMBDA = 1e-3
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 5000

SWEEP_CSV_COLUMNS = ("k", "auc_validation")

STD_FLOOR = 1e-8


@dataclass(frozen=True)
class FeatureVector:
    image_id: str
    values: np.ndarray  # entropy bits per selected band, rank order
    label: str  # bonafide | morphed


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    mean: np.ndarray
    std: np.ndarray
    lam: float
    iterations: int
    final_loss: float
    loss_history: list[float] = field(default_factory=list, repr=False)


def _as_arrays(features) -> tuple[np.ndarray, np.ndarray, list[str]]:
    features = list(features)
    if not features:
        raise ValueError("no feature vectors")
    dims = {np.asarray(f.values).size for f in features}
    if len(dims) != 1:
        raise ValueError(f"feature vectors have mixed lengths: {sorted(dims)}")
    X = np.array([np.asarray(f.values, dtype=np.float64) for f in features])
    if not np.all(np.isfinite(X)):
        raise ValueError("features contain non-finite values")
    y = np.array([1.0 if f.label == MORPHED else -1.0 for f in features])
    ids = [f.image_id for f in features]
    return X, y, ids


def loss_and_gradient(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, lam: float
) -> tuple[float, np.ndarray, float]:
    """Mean logistic loss with L2 penalty on the weights, and its gradient.

    Labels are +-1; the loss is mean(log(1 + exp(-y z))) + lam/2 ||w||^2
    with z = Xw + b.  The bias is unregularized.
    """
    z = X @ w + b
    yz = y * z
    loss = float(np.mean(np.logaddexp(0.0, -yz)) + 0.5 * lam * (w @ w))
    # d/dz of log(1+exp(-yz)) is -y * sigmoid(-yz)
    coef = -y / (1.0 + np.exp(yz))
    grad_w = X.T @ coef / X.shape[0] + lam * w
    grad_b = float(np.mean(coef))
    return loss, grad_w, grad_b


def train(
    features,
    lam: float = DEFAULT_LAMBDA,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
) -> LinearModel:
    """Fit the logistic baseline; deterministic for identical inputs.

    Features are standardized per dimension with statistics from the
    training set (std floored at 1e-8).  Each gradient step is accepted
    only if it satisfies the Armijo condition, so the recorded loss
    sequence never increases.
    """
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    X_raw, y, _ = _as_arrays(features)
    if np.all(y > 0) or np.all(y < 0):
        raise ValueError("training data must contain both classes")

    mean = X_raw.mean(axis=0)
    std = np.maximum(X_raw.std(axis=0), STD_FLOOR)
    X = (X_raw - mean) / std

    w = np.zeros(X.shape[1])
    b = 0.0
    loss, grad_w, grad_b = loss_and_gradient(w, b, X, y, lam)
    history = [loss]
    step = 1.0
    iterations = 0
    for iterations in range(1, max_iters + 1):
        grad_sq = grad_w @ grad_w + grad_b * grad_b
        if np.sqrt(grad_sq) <= tol:
            iterations -= 1
            break
        # Armijo backtracking: shrink until sufficient decrease
        while True:
            w_new = w - step * grad_w
            b_new = b - step * grad_b
            loss_new, gw_new, gb_new = loss_and_gradient(w_new, b_new, X, y, lam)
            if loss_new <= loss - 1e-4 * step * grad_sq:
                break
            step *= 0.5
            if step < 1e-16:
                break
        if loss_new > loss:
            break
        w, b, loss, grad_w, grad_b = w_new, b_new, loss_new, gw_new, gb_new
        history.append(loss)
        step = min(step * 2.0, 1e6)

    return LinearModel(
        weights=w,
        bias=b,
        mean=mean,
        std=std,
        lam=lam,
        iterations=iterations,
        final_loss=loss,
        loss_history=history,
    )


def predict(model: LinearModel, values: np.ndarray) -> float:
    """Morph-likeness score in (0, 1) for one raw feature vector."""
    x = np.asarray(values, dtype=np.float64)
    if x.shape != model.weights.shape:
        raise ValueError(f"feature dimension {x.shape} does not match model {model.weights.shape}")
    z = model.weights @ ((x - model.mean) / model.std) + model.bias
    return float(1.0 / (1.0 + np.exp(-z)))


def predict_batch(model: LinearModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.weights.size:
        raise ValueError(f"expected (n, {model.weights.size}) features, got {X.shape}")
    z = ((X - model.mean) / model.std) @ model.weights + model.bias
    return 1.0 / (1.0 + np.exp(-z))


@dataclass
class SplitFeatures:
    """Per-image entropies for all 48 bands, for one train/validation pair.

    Columns of the matrices follow sub-band index order 1..48; sweeps
    slice them down to the top-k ranked bands.
    """

    train_matrix: np.ndarray  # (n_train, 48)
    train_labels: list[str]
    validation_matrix: np.ndarray  # (n_val, 48)
    validation_labels: list[str]
    train_ids: list[str] = field(default_factory=list)
    validation_ids: list[str] = field(default_factory=list)


def sweep_k(
    table: KlRankingTable,
    splits: SplitFeatures,
    k_values,
    lam: float = DEFAULT_LAMBDA,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
) -> list[tuple[int, float]]:
    """Validation AUC of the baseline for each sub-band count.

    For every k the top-k ranked bands are selected, the baseline is
    trained on the train split, and AUC is measured on validation
    scores.  Output order follows ``k_values``.
    """
    if splits.train_matrix.shape[0] == 0 or splits.validation_matrix.shape[0] == 0:
        raise ValueError("train and validation splits must be non-empty")
    results = []
    for k in k_values:
        indices = select(table, TopK(int(k)))
        cols = np.array(indices) - 1
        train_feats = [
            FeatureVector(image_id=i, values=row, label=lab)
            for i, row, lab in zip(
                splits.train_ids or [""] * len(splits.train_labels),
                splits.train_matrix[:, cols],
                splits.train_labels,
            )
        ]
        model = train(train_feats, lam=lam, max_iters=max_iters, tol=tol)
        val_scores = predict_batch(model, splits.validation_matrix[:, cols])
        score_set = ScoreSet(
            image_ids=splits.validation_ids or [str(i) for i in range(val_scores.size)],
            labels=np.array([lab == MORPHED for lab in splits.validation_labels]),
            scores=val_scores,
        )
        results.append((int(k), roc_auc(score_set)))
    return results


# --- on-disk forms ---------------------------------------------------------


def write_model_json(path, model: LinearModel) -> None:
    doc = {
        "weights": [float(v) for v in model.weights],
        "bias": model.bias,
        "mean": [float(v) for v in model.mean],
        "std": [float(v) for v in model.std],
        "lambda": model.lam,
        "iterations": model.iterations,
        "final_loss": model.final_loss,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def read_model_json(path) -> LinearModel:
    with open(path) as fh:
        doc = json.load(fh)
    return LinearModel(
        weights=np.array(doc["weights"], dtype=np.float64),
        bias=float(doc["bias"]),
        mean=np.array(doc["mean"], dtype=np.float64),
        std=np.array(doc["std"], dtype=np.float64),
        lam=float(doc["lambda"]),
        iterations=int(doc["iterations"]),
        final_loss=float(doc["final_loss"]),
    )


def write_sweep_csv(path, results) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_COLUMNS)
        for k, auc in results:
            writer.writerow([k, repr(float(auc))])
