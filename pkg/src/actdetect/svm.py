"""Soft-margin linear SVM trained from scratch on the dual problem.

The trainer runs pairwise coordinate updates on the maximal KKT-violating
pair (SMO with gradient caching), which is deterministic and needs no
learning-rate tuning. The primal being minimized is

    0.5 * ||w||^2 + sum_i C_i * max(0, 1 - y_i * (w . x_i + b))

with an unregularized bias; C_i is constant C unless per-class balancing is
enabled.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    MalformedModelFile,
    NotStandardized,
    SingleClassWarning,
    VersionMismatch,
)
from .features import FeatureMatrix, Scaler
from .util import atomic_write_text

MODEL_FORMAT_VERSION = "1"


@dataclass
class TrainConfig:
    """Solver hyperparameters; defaults favor determinism over speed."""

    C: float = 1.0
    tol: float = 1e-4
    max_iter: int = 100_000
    seed: int = 42
    balanced: bool = False


@dataclass
class SvmModel:
    """Trained linear classifier plus the scaler used at training time."""

    weights: np.ndarray
    bias: float
    C: float
    scaler: Scaler
    columns: list[str]
    train_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.weights) != len(self.scaler.mean):
            raise DimensionMismatch("weight vector does not match scaler width")


def hinge_objective(X: np.ndarray, y: np.ndarray, w: np.ndarray, b: float, C) -> float:
    """Primal objective on standardized rows; `C` may be scalar or per-sample."""
    margins = 1.0 - y * (X @ w + b)
    penalties = np.asarray(C) * np.maximum(0.0, margins)
    return float(0.5 * w @ w + penalties.sum())


def _smo_max_violating_pair(K, y, box, tol, max_iter):
    """Pairwise dual coordinate updates on the maximal violating pair.

    Returns (alpha, bias, iterations, kkt_gap, dual_trace) where dual_trace
    holds the minimized dual objective at checkpoints (non-increasing).
    """
    n = len(y)
    alpha = np.zeros(n)
    grad = -np.ones(n)
    pos = y > 0
    trace = []
    checkpoint_every = 500

    def dual_objective():
        # f(a) = 0.5 a'Qa - sum(a) with grad = Qa - 1, so a'Qa = a.(grad + 1)
        return float(0.5 * alpha @ (grad + 1.0) - alpha.sum())

    it = 0
    kkt_gap = np.inf
    while it < max_iter:
        f_scores = -y * grad
        up = (pos & (alpha < box)) | (~pos & (alpha > 0))
        low = (pos & (alpha > 0)) | (~pos & (alpha < box))
        if not up.any() or not low.any():
            kkt_gap = 0.0
            break
        up_idx = np.flatnonzero(up)
        low_idx = np.flatnonzero(low)
        i = up_idx[np.argmax(f_scores[up_idx])]
        j = low_idx[np.argmin(f_scores[low_idx])]
        m, mm = f_scores[i], f_scores[j]
        kkt_gap = m - mm
        if kkt_gap <= tol:
            break
        quad = max(K[i, i] + K[j, j] - 2.0 * K[i, j], 1e-12)
        step = kkt_gap / quad
        step = min(step, box[i] - alpha[i] if pos[i] else alpha[i])
        step = min(step, alpha[j] if pos[j] else box[j] - alpha[j])
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        grad += step * y * (K[:, i] - K[:, j])
        it += 1
        if it % checkpoint_every == 0:
            trace.append(dual_objective())

    trace.append(dual_objective())

    f_scores = -y * grad
    up = (pos & (alpha < box)) | (~pos & (alpha > 0))
    low = (pos & (alpha > 0)) | (~pos & (alpha < box))
    if up.any() and low.any():
        bias = 0.5 * (f_scores[up].max() + f_scores[low].min())
    elif up.any():
        bias = float(f_scores[up].max())
    else:
        bias = float(f_scores[low].min())
    return alpha, float(bias), it, float(kkt_gap), trace


def train(matrix: FeatureMatrix, hp: TrainConfig | None = None) -> SvmModel:
    """Fit the SVM on a standardized feature matrix with +/-1 labels.

    A single-class training set yields a constant classifier and a
    SingleClassWarning instead of an error.
    """
    hp = hp or TrainConfig()
    if matrix.scaler is None:
        raise NotStandardized("feature matrix must be standardized before training")
    if matrix.labels is None:
        raise ValueError("feature matrix has no labels")
    if hp.C <= 0:
        raise ValueError("C must be positive")
    X = matrix.rows
    y = np.asarray(matrix.labels, dtype=float)
    if X.shape[0] < 2:
        raise ValueError("need at least 2 training samples")
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise ValueError("labels must be +1 (active) or -1 (inactive)")

    meta: dict = {"seed": hp.seed, "C": hp.C, "tol": hp.tol, "n_train": int(X.shape[0])}

    if len(np.unique(y)) == 1:
        constant = float(y[0])
        warnings.warn("training labels are single-class; fitting a constant classifier",
                      SingleClassWarning, stacklevel=2)
        meta.update({"iterations": 0, "objective": 0.0, "duality_gap": 0.0,
                     "kkt_gap": 0.0, "warning": "single-class training set",
                     "objective_trace": []})
        return SvmModel(weights=np.zeros(X.shape[1]), bias=constant, C=hp.C,
                        scaler=matrix.scaler, columns=list(matrix.columns), train_meta=meta)

    if hp.balanced:
        n = len(y)
        n_pos = int((y > 0).sum())
        box = np.where(y > 0, hp.C * n / (2.0 * n_pos), hp.C * n / (2.0 * (n - n_pos)))
        meta["balanced"] = True
    else:
        box = np.full(len(y), hp.C)

    K = X @ X.T
    alpha, bias, iterations, kkt_gap, trace = _smo_max_violating_pair(
        K, y, box, hp.tol, hp.max_iter
    )
    w = X.T @ (alpha * y)
    dual_value = -trace[-1]
    primal = hinge_objective(X, y, w, bias, box)
    meta.update(
        {
            "iterations": iterations,
            "objective": primal,
            "dual_objective": dual_value,
            "duality_gap": primal - dual_value,
            "kkt_gap": kkt_gap,
            "objective_trace": trace,
            "converged": kkt_gap <= hp.tol,
        }
    )
    if not meta["converged"]:
        meta["warning"] = f"iteration cap {hp.max_iter} reached with KKT gap {kkt_gap:.3e}"
    return SvmModel(weights=w, bias=bias, C=hp.C, scaler=matrix.scaler,
                    columns=list(matrix.columns), train_meta=meta)


def decision_value(model: SvmModel, x: np.ndarray) -> float:
    """w . scale(x) + b for one raw (unstandardized) feature vector."""
    z = model.scaler.apply(np.asarray(x, dtype=float).reshape(1, -1))
    return float(z[0] @ model.weights + model.bias)


def decision_values(model: SvmModel, rows: np.ndarray) -> np.ndarray:
    z = model.scaler.apply(rows)
    return z @ model.weights + model.bias


def predict(model: SvmModel, x: np.ndarray) -> bool:
    """True (active) when the decision value is strictly positive."""
    return decision_value(model, x) > 0.0


def predict_batch(model: SvmModel, rows: np.ndarray) -> np.ndarray:
    return decision_values(model, rows) > 0.0


def save(model: SvmModel, path: Path | str) -> None:
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "weights": [float(v) for v in model.weights],
        "bias": float(model.bias),
        "C": float(model.C),
        "scaler": model.scaler.to_dict(),
        "columns": list(model.columns),
        "train_meta": model.train_meta,
    }
    atomic_write_text(Path(path), json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load(path: Path | str) -> SvmModel:
    try:
        with open(path, encoding="utf-8") as handle:
            doc = json.load(handle)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedModelFile(f"{path}: not a valid model file: {exc}") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise MalformedModelFile(f"{path}: missing version tag")
    if doc["version"] != MODEL_FORMAT_VERSION:
        raise VersionMismatch(
            f"{path}: model format {doc['version']!r} unsupported (expected {MODEL_FORMAT_VERSION!r})"
        )
    try:
        return SvmModel(
            weights=np.asarray(doc["weights"], dtype=float),
            bias=float(doc["bias"]),
            C=float(doc["C"]),
            scaler=Scaler.from_dict(doc["scaler"]),
            columns=list(doc["columns"]),
            train_meta=dict(doc.get("train_meta", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedModelFile(f"{path}: incomplete model document: {exc}") from exc
