"""Ordinary least-squares ELUC model on action deltas."""

from __future__ import annotations

import numpy as np

from ..data import Dataset
from ..features import FeatureSchema, featurize_dataset
from .base import Predictor, _meta_kwargs

RIDGE_PENALTY = 1e-8


class LinRegModel(Predictor):
    family = "linreg"

    def __init__(self, weights: np.ndarray, intercept: float, schema: FeatureSchema, **kw):
        super().__init__(schema, **kw)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.intercept = float(intercept)
        if not (np.all(np.isfinite(self.weights)) and np.isfinite(self.intercept)):
            raise ValueError("linear model weights must be finite")

    def predict_features(self, X: np.ndarray) -> np.ndarray:
        self._check_width(X)
        return X @ self.weights + self.intercept

    def _weights_payload(self) -> dict:
        return {"weights": self.weights.tolist(), "intercept": self.intercept}

    @classmethod
    def _from_doc(cls, doc: dict) -> "LinRegModel":
        w = doc["weights"]
        return cls(np.array(w["weights"]), w["intercept"],
                   FeatureSchema.from_dict(doc["schema"]), **_meta_kwargs(doc))

    def delta_weight(self, land_type: str) -> float:
        """The coefficient on one land type's delta feature."""
        names = self.schema.feature_names()
        return float(self.weights[names.index(f"delta_{land_type}")])


def fit_linreg(ds: Dataset, schema: FeatureSchema | None = None, **kw) -> LinRegModel:
    """Least-squares fit of ELUC on the schema's features.

    The delta features sum to zero on every row, so the design matrix is
    structurally rank-deficient; in that case (or any other deficiency) the
    solve falls back to a tiny ridge penalty, which picks the minimum-norm
    solution, and the fallback is recorded in the model metadata.
    """
    if schema is None:
        schema = FeatureSchema.deltas_only()
    X = featurize_dataset(ds, schema)
    n, p = X.shape
    if n <= p:
        raise ValueError(f"need more rows ({n}) than features ({p}) to fit")
    A = np.hstack([np.ones((n, 1)), X])
    beta, _, rank, _ = np.linalg.lstsq(A, ds.eluc, rcond=None)
    metadata = dict(kw.pop("metadata", {}))
    if rank < p + 1:
        # augmented system solves the ridge problem without squaring the
        # condition number the way normal equations would
        aug = np.vstack([A, np.sqrt(RIDGE_PENALTY) * np.eye(p + 1)])
        rhs = np.concatenate([ds.eluc, np.zeros(p + 1)])
        beta, _, _, _ = np.linalg.lstsq(aug, rhs, rcond=None)
        metadata["ridge_fallback"] = True
    return LinRegModel(beta[1:], beta[0], schema, metadata=metadata, **kw)
