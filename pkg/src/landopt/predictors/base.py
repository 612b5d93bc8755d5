"""Shared predictor interface, evaluation, conversion probes, and JSON persistence."""

from __future__ import annotations

import json

import numpy as np

from ..data import Dataset
from ..features import FeatureSchema, featurize, featurize_arrays
from ..land import FIXED_TYPES, LAND_TYPES, N_TYPES, TYPE_INDEX, ActionDelta, CellContext, LandUseVector


class SchemaMismatchError(ValueError):
    """Inputs do not provide the feature groups a model was trained on."""


class Predictor:
    """A fitted ELUC model: a pure function of (context, action) features.

    Subclasses implement ``predict_features`` on a prebuilt feature matrix;
    everything else (single predictions, batching over datasets, probes) is
    shared.
    """

    family = "base"

    def __init__(self, schema: FeatureSchema, model_id: str = "", region_tag: str = "global",
                 metadata: dict | None = None):
        self.schema = schema
        self.model_id = model_id
        self.region_tag = region_tag
        self.metadata = dict(metadata or {})

    def predict_features(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_width(self, X: np.ndarray) -> None:
        if X.shape[1] != self.schema.n_features:
            raise SchemaMismatchError(
                f"model expects {self.schema.n_features} features "
                f"({self.schema.feature_names()[:3]}...), got {X.shape[1]}"
            )

    def predict(self, ctx: CellContext, delta: ActionDelta) -> float:
        X = featurize(ctx, delta, self.schema)[None, :]
        return float(self.predict_features(X)[0])

    def predict_batch(self, usage, nonland, delta, area, lat, lon, year) -> np.ndarray:
        X = featurize_arrays(usage, nonland, delta, area, lat, lon, year, self.schema)
        return self.predict_features(X)

    def predict_dataset(self, ds: Dataset) -> np.ndarray:
        return self.predict_batch(ds.usage, ds.nonland, ds.delta, ds.area, ds.lat, ds.lon, ds.year)

    # Serialization ---------------------------------------------------------

    def _weights_payload(self) -> dict:
        raise NotImplementedError

    def save(self, path) -> None:
        doc = {
            "family": self.family,
            "schema": self.schema.as_dict(),
            "standardization": getattr(self, "standardization", None),
            "weights": self._weights_payload(),
            "metadata": {
                "model_id": self.model_id,
                "region_tag": self.region_tag,
                **self.metadata,
            },
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
            fh.write("\n")


def evaluate_mae(model: Predictor, ds: Dataset) -> float:
    """Mean absolute error of the model over a dataset, in tC/ha."""
    if len(ds) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    pred = model.predict_dataset(ds)
    return float(np.mean(np.abs(pred - ds.eluc)))


HEATMAP_SOURCES = tuple(t for t in LAND_TYPES if t != "c4per")
HEATMAP_TARGETS = tuple(t for t in LAND_TYPES if t not in ("primf", "primn", "urban", "c4per"))


def conversion_heatmap(model: Predictor, baseline_ctx: CellContext | None = None) -> dict:
    """Predictions for full conversions of 100% type A into 100% type B.

    Rows (A) range over all types except c4per; columns (B) additionally
    exclude the non-targetable primf, primn, and urban. Diagonal entries are
    zero-delta predictions. Returns source/target labels and the matrix.
    """
    if baseline_ctx is None:
        baseline_ctx = CellContext(
            lat=0.0, lon=0.0, area=50000.0, year=2011,
            usage=LandUseVector(np.zeros(N_TYPES)), cell_id="probe",
        )
    matrix = np.zeros((len(HEATMAP_SOURCES), len(HEATMAP_TARGETS)))
    for i, a in enumerate(HEATMAP_SOURCES):
        fractions = np.zeros(N_TYPES)
        fractions[TYPE_INDEX[a]] = 1.0
        ctx = CellContext(
            lat=baseline_ctx.lat, lon=baseline_ctx.lon, area=baseline_ctx.area,
            year=baseline_ctx.year, usage=LandUseVector(fractions, 0.0),
            cell_id=baseline_ctx.cell_id,
        )
        for j, b in enumerate(HEATMAP_TARGETS):
            delta = np.zeros(N_TYPES)
            if a != b:
                delta[TYPE_INDEX[a]] = -1.0
                delta[TYPE_INDEX[b]] = 1.0
            matrix[i, j] = model.predict(ctx, ActionDelta(delta))
    return {"sources": HEATMAP_SOURCES, "targets": HEATMAP_TARGETS, "values": matrix}


def load_model(path) -> Predictor:
    """Load any predictor family from its JSON document."""
    from .forest import ForestPredictor
    from .linreg import LinRegModel
    from .mlp import MlpPredictor

    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    family = doc.get("family")
    for cls in (LinRegModel, MlpPredictor, ForestPredictor):
        if cls.family == family:
            return cls._from_doc(doc)
    raise ValueError(f"unknown model family: {family!r}")


def _meta_kwargs(doc: dict) -> dict:
    meta = dict(doc.get("metadata", {}))
    return {
        "model_id": meta.pop("model_id", ""),
        "region_tag": meta.pop("region_tag", "global"),
        "metadata": meta,
    }
