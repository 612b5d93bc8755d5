"""Wide-and-deep ELUC net: one rectified hidden layer plus an input skip.

The output layer reads the concatenation of the (standardized) input and the
hidden layer, so the linear part of the signal has a direct path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import Dataset
from ..features import FeatureSchema, featurize_dataset
from .base import Predictor, _meta_kwargs

DEFAULT_HIDDEN = 64


@dataclass
class MlpTrainParams:
    learning_rate: float = 1e-3
    momentum: float = 0.9
    batch_size: int = 256
    epochs: int = 100
    seed: int = 0


def param_count(n_features: int, hidden: int) -> int:
    return n_features * hidden + hidden + (n_features + hidden) + 1


def unpack_params(params: np.ndarray, n_features: int, hidden: int):
    p, h = n_features, hidden
    w1 = params[: p * h].reshape(p, h)
    b1 = params[p * h : p * h + h]
    w2 = params[p * h + h : p * h + h + p + h]
    b2 = params[-1]
    return w1, b1, w2, b2


def mlp_forward(params: np.ndarray, X: np.ndarray, hidden: int) -> np.ndarray:
    w1, b1, w2, b2 = unpack_params(params, X.shape[1], hidden)
    h = np.maximum(X @ w1 + b1, 0.0)
    return np.hstack([X, h]) @ w2 + b2


def mlp_loss(params: np.ndarray, X: np.ndarray, y: np.ndarray, hidden: int) -> float:
    err = mlp_forward(params, X, hidden) - y
    return float(np.mean(err * err))


def mlp_loss_grad(params: np.ndarray, X: np.ndarray, y: np.ndarray, hidden: int):
    """Mean-squared-error loss and its gradient w.r.t. the packed parameters."""
    n, p = X.shape
    w1, b1, w2, b2 = unpack_params(params, p, hidden)
    pre = X @ w1 + b1
    h = np.maximum(pre, 0.0)
    z = np.hstack([X, h])
    err = z @ w2 + b2 - y
    loss = float(np.mean(err * err))

    dout = (2.0 / n) * err
    gw2 = z.T @ dout
    gb2 = float(dout.sum())
    dh = np.outer(dout, w2[p:]) * (pre > 0.0)
    gw1 = X.T @ dh
    gb1 = dh.sum(axis=0)
    grad = np.concatenate([gw1.ravel(), gb1, gw2, [gb2]])
    return loss, grad


class MlpPredictor(Predictor):
    family = "mlp"

    def __init__(self, params: np.ndarray, hidden: int, schema: FeatureSchema,
                 standardization: dict, **kw):
        super().__init__(schema, **kw)
        self.params = np.asarray(params, dtype=np.float64)
        self.hidden = int(hidden)
        if self.params.shape != (param_count(schema.n_features, self.hidden),):
            raise ValueError(
                f"expected {param_count(schema.n_features, self.hidden)} parameters, got {self.params.shape}"
            )
        if not np.all(np.isfinite(self.params)):
            raise ValueError("mlp parameters must be finite")
        self.standardization = standardization
        self._x_mean = np.asarray(standardization["x_mean"], dtype=np.float64)
        self._x_std = np.asarray(standardization["x_std"], dtype=np.float64)
        self._y_mean = float(standardization["y_mean"])
        self._y_std = float(standardization["y_std"])

    def predict_features(self, X: np.ndarray) -> np.ndarray:
        self._check_width(X)
        Xs = (X - self._x_mean) / self._x_std
        return mlp_forward(self.params, Xs, self.hidden) * self._y_std + self._y_mean

    def _weights_payload(self) -> dict:
        return {"params": self.params.tolist(), "hidden": self.hidden}

    @classmethod
    def _from_doc(cls, doc: dict) -> "MlpPredictor":
        w = doc["weights"]
        return cls(np.array(w["params"]), w["hidden"], FeatureSchema.from_dict(doc["schema"]),
                   doc["standardization"], **_meta_kwargs(doc))


def init_params(rng: np.random.Generator, n_features: int, hidden: int) -> np.ndarray:
    """He-scaled layer-1 weights, small skip-layer weights, zero biases."""
    w1 = rng.normal(0.0, np.sqrt(2.0 / n_features), (n_features, hidden))
    w2 = rng.normal(0.0, np.sqrt(1.0 / (n_features + hidden)), n_features + hidden)
    return np.concatenate([w1.ravel(), np.zeros(hidden), w2, [0.0]])


def fit_mlp(ds: Dataset, schema: FeatureSchema | None = None, hidden: int = DEFAULT_HIDDEN,
            training: MlpTrainParams | None = None, **kw) -> MlpPredictor:
    """Train by mini-batch gradient descent with momentum on MSE.

    Features and the target are standardized with training-set statistics,
    which are stored in the model. Deterministic for a fixed seed under
    single-threaded execution.
    """
    if schema is None:
        schema = FeatureSchema.full()
    if training is None:
        training = MlpTrainParams()
    if len(ds) < 1 or hidden < 1:
        raise ValueError("need at least one row and one hidden unit")

    X = featurize_dataset(ds, schema)
    y = ds.eluc
    x_mean = X.mean(axis=0)
    x_std = X.std(axis=0)
    x_std[x_std < 1e-12] = 1.0
    y_mean = float(y.mean())
    y_std = float(y.std())
    if y_std < 1e-12:
        y_std = 1.0
    Xs = (X - x_mean) / x_std
    ys = (y - y_mean) / y_std

    rng = np.random.default_rng(training.seed)
    params = init_params(rng, X.shape[1], hidden)
    velocity = np.zeros_like(params)
    n = len(ys)
    batch = min(training.batch_size, n)

    initial_loss = mlp_loss(params, Xs, ys, hidden)
    for epoch in range(training.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, batch):
            sel = perm[start : start + batch]
            loss, grad = mlp_loss_grad(params, Xs[sel], ys[sel], hidden)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"training diverged (non-finite loss at epoch {epoch}); lower the learning rate"
                )
            velocity = training.momentum * velocity - training.learning_rate * grad
            params = params + velocity
    final_loss = mlp_loss(params, Xs, ys, hidden)

    metadata = dict(kw.pop("metadata", {}))
    metadata.update({
        "train_loss_initial": initial_loss,
        "train_loss_final": final_loss,
        "epochs": training.epochs,
        "learning_rate": training.learning_rate,
        "momentum": training.momentum,
        "batch_size": training.batch_size,
        "seed": training.seed,
    })
    standardization = {
        "x_mean": x_mean.tolist(), "x_std": x_std.tolist(),
        "y_mean": y_mean, "y_std": y_std,
    }
    return MlpPredictor(params, hidden, schema, standardization, metadata=metadata, **kw)
