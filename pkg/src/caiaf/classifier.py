"""Binary linear max-margin classifier trained by per-example subgradient descent.

The regularized objective is

    F(w, b) = (reg_lambda / 2) * ||w||^2 + (1/n) * sum_i max(0, 1 - y_i (w.x_i + b))

minimized with step size 1/(1 + reg_lambda * t) over a global step counter t
(the bounded form of the 1/(reg_lambda * t) schedule: identical tail, but the
first step is 1 instead of 1/reg_lambda, which would dwarf the data scale at
small reg_lambda), an unregularized bias, zero initialization, and the example
order reshuffled each epoch from ``rng_seed``. Training is deterministic:
identical inputs and seed give a bitwise-identical model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .validation import as_feature_matrix


@dataclass(frozen=True)
class TrainConfig:
    """Classifier hyperparameters threaded through session configs."""

    reg_lambda: float = 1e-4
    epochs: int = 50
    rng_seed: int = 0

    def __post_init__(self):
        if self.reg_lambda <= 0:
            raise ValueError("reg_lambda must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")

    def to_dict(self) -> dict:
        return {"reg_lambda": self.reg_lambda, "epochs": self.epochs, "rng_seed": self.rng_seed}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(
            reg_lambda=d.get("reg_lambda", 1e-4),
            epochs=d.get("epochs", 50),
            rng_seed=d.get("rng_seed", 0),
        )


def hinge_objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray,
                    reg_lambda: float) -> float:
    """Regularized hinge objective F(w, b) over a dataset with labels in {-1,+1}."""
    margins = 1.0 - y * (X @ w + b)
    hinge = np.maximum(0.0, margins)
    return 0.5 * reg_lambda * float(w @ w) + float(np.mean(hinge))


def hinge_objective_grad(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray,
                         reg_lambda: float) -> tuple[np.ndarray, float]:
    """Analytic (sub)gradient of ``hinge_objective`` w.r.t. (w, b)."""
    n = X.shape[0]
    active = (y * (X @ w + b)) < 1.0
    gw = reg_lambda * w - (X[active].T @ y[active]) / n
    gb = -float(np.sum(y[active])) / n
    return gw, gb


class LinearMarginClassifier(BaseEstimator):
    """Linear decision function f(x) = w.x + b for two classes.

    Class names map to {-1, +1} by lexicographic order: the smaller name
    becomes -1, the larger +1. ``predict`` returns the +1 class on ties
    (decision value exactly zero).
    """

    def __init__(self, reg_lambda: float = 1e-4, epochs: int = 50, rng_seed: int = 0):
        self.reg_lambda = reg_lambda
        self.epochs = epochs
        self.rng_seed = rng_seed

    @classmethod
    def from_config(cls, config: TrainConfig) -> "LinearMarginClassifier":
        return cls(reg_lambda=config.reg_lambda, epochs=config.epochs,
                   rng_seed=config.rng_seed)

    def fit(self, X, y) -> "LinearMarginClassifier":
        if self.reg_lambda <= 0:
            raise ValueError("reg_lambda must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        X = as_feature_matrix(X)
        y = np.asarray(y)
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y length mismatch")
        if X.shape[0] < 1:
            raise ValueError("need at least one example")
        classes = np.unique(y)
        if classes.shape[0] != 2:
            raise ValueError(f"need exactly two classes, got {classes.tolist()}")
        signed = np.where(y == classes[1], 1.0, -1.0)

        n, dim = X.shape
        lam = float(self.reg_lambda)
        rng = np.random.default_rng(self.rng_seed)
        w = np.zeros(dim)
        b = 0.0
        t = 0
        history = []
        for _ in range(self.epochs):
            order = rng.permutation(n)
            for i in order:
                t += 1
                eta = 1.0 / (1.0 + lam * t)
                xi = X[i]
                yi = signed[i]
                margin = yi * (xi @ w + b)
                w *= 1.0 - eta * lam
                if margin < 1.0:
                    w += (eta * yi) * xi
                    b += eta * yi
            history.append(hinge_objective(w, b, X, signed, lam))

        self.classes_ = classes
        self.weights_ = w
        self.bias_ = b
        self.trained_on_ = n
        self.objective_history_ = history
        return self

    def _check_fitted(self):
        if not hasattr(self, "weights_"):
            raise NotFittedError("classifier is not fitted")

    def decision_function(self, X) -> np.ndarray:
        """Signed distance-like score w.x + b per sample."""
        self._check_fitted()
        X = as_feature_matrix(X, dim=self.weights_.shape[0])
        return X @ self.weights_ + self.bias_

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        scores = self.decision_function(X)
        return self.classes_[(scores >= 0).astype(int)]

    def uncertainty(self, X) -> np.ndarray:
        """|decision| per sample; smaller means more uncertain."""
        return np.abs(self.decision_function(X))

    def to_dict(self) -> dict:
        """JSON form: weights, bias, lambda, epochs, rng_seed (+ classes)."""
        self._check_fitted()
        return {
            "weights": [float(v) for v in self.weights_],
            "bias": float(self.bias_),
            "lambda": float(self.reg_lambda),
            "epochs": int(self.epochs),
            "rng_seed": int(self.rng_seed),
            "classes": [c.item() if hasattr(c, "item") else c for c in self.classes_],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearMarginClassifier":
        model = cls(reg_lambda=d["lambda"], epochs=d["epochs"], rng_seed=d["rng_seed"])
        model.weights_ = np.asarray(d["weights"], dtype=np.float64)
        model.bias_ = float(d["bias"])
        model.classes_ = np.asarray(d.get("classes", [-1, 1]))
        model.trained_on_ = int(d.get("trained_on", 0))
        model.objective_history_ = []
        return model
