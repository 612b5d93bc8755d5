"""Bagged regression forest with per-split random feature subsetting.

Predictions average the trees' leaf means, so they can never leave the range
of the training targets; probing with extreme conversions makes that
bounded-leaf behavior visible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._backend import build_tree
from ..data import Dataset
from ..features import FeatureSchema, featurize_dataset
from .base import Predictor, _meta_kwargs


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0])
        # iterative partition descent; cheap and exact for both backends
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            node, rows = stack.pop()
            f = int(self.feature[node])
            if f < 0:
                out[rows] = self.value[node]
                continue
            go = X[rows, f] <= self.threshold[node]
            stack.append((int(self.left[node]), rows[go]))
            stack.append((int(self.right[node]), rows[~go]))
        return out


class ForestPredictor(Predictor):
    family = "forest"

    def __init__(self, trees: list[Tree], y_min: float, y_max: float,
                 schema: FeatureSchema, **kw):
        super().__init__(schema, **kw)
        if not trees:
            raise ValueError("a forest needs at least one tree")
        self.trees = trees
        self.y_min = float(y_min)
        self.y_max = float(y_max)

    def predict_features(self, X: np.ndarray) -> np.ndarray:
        self._check_width(X)
        acc = np.zeros(X.shape[0])
        for tree in self.trees:
            acc += tree.predict(X)
        return acc / len(self.trees)

    def _weights_payload(self) -> dict:
        return {
            "y_min": self.y_min,
            "y_max": self.y_max,
            "trees": [
                {
                    "feature": t.feature.tolist(),
                    "threshold": t.threshold.tolist(),
                    "left": t.left.tolist(),
                    "right": t.right.tolist(),
                    "value": t.value.tolist(),
                }
                for t in self.trees
            ],
        }

    @classmethod
    def _from_doc(cls, doc: dict) -> "ForestPredictor":
        w = doc["weights"]
        trees = [
            Tree(
                np.array(t["feature"], dtype=np.int32),
                np.array(t["threshold"], dtype=np.float64),
                np.array(t["left"], dtype=np.int32),
                np.array(t["right"], dtype=np.int32),
                np.array(t["value"], dtype=np.float64),
            )
            for t in w["trees"]
        ]
        return cls(trees, w["y_min"], w["y_max"], FeatureSchema.from_dict(doc["schema"]),
                   **_meta_kwargs(doc))


def fit_forest(ds: Dataset, schema: FeatureSchema | None = None, n_trees: int = 100,
               max_depth: int | None = None, min_leaf: int = 1,
               max_features: int | None = None, seed: int = 0, **kw) -> ForestPredictor:
    """Fit n_trees trees, each on a bootstrap resample.

    max_features defaults to ceil(p / 3) per split (the regression
    convention); max_depth=None means unlimited. Deterministic per seed; all
    randomness is drawn from one generator in a fixed order.
    """
    if len(ds) < min_leaf:
        raise ValueError(f"need at least min_leaf={min_leaf} rows, got {len(ds)}")
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if schema is None:
        schema = FeatureSchema.full()
    X = featurize_dataset(ds, schema)
    y = ds.eluc
    n, p = X.shape
    k = math.ceil(p / 3) if max_features is None else max_features
    depth = -1 if max_depth is None else max_depth

    rng = np.random.default_rng(seed)
    trees = []
    for _ in range(n_trees):
        bootstrap = rng.integers(0, n, size=n)
        tree_seed = int(rng.integers(1, 2**63))
        trees.append(Tree(*build_tree(X, y, bootstrap, depth, min_leaf, k, tree_seed)))

    metadata = dict(kw.pop("metadata", {}))
    metadata.update({"n_trees": n_trees, "max_depth": max_depth, "min_leaf": min_leaf,
                     "max_features": k, "seed": seed})
    return ForestPredictor(trees, float(y.min()), float(y.max()), schema,
                           metadata=metadata, **kw)
