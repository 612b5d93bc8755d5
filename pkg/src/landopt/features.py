"""Feature schemas mapping (context, action) pairs to model input vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .land import LAND_TYPES, ActionDelta, CellContext


@dataclass(frozen=True)
class FeatureSchema:
    """Which feature groups a model consumes, in a fixed deterministic order.

    The order is: usage block (12 canonical fractions + nonland), delta block
    (12), then area, lat, lon, year for whichever flags are set. Deltas are
    always included.
    """

    include_usage: bool = False
    include_deltas: bool = True
    include_area: bool = False
    include_latlon: bool = False
    include_year: bool = False

    def __post_init__(self):
        if not self.include_deltas:
            raise ValueError("a feature schema must include the deltas")

    @classmethod
    def deltas_only(cls) -> "FeatureSchema":
        return cls()

    @classmethod
    def full(cls, latlon: bool = False, year: bool = False) -> "FeatureSchema":
        return cls(include_usage=True, include_area=True, include_latlon=latlon, include_year=year)

    def feature_names(self) -> list[str]:
        names = []
        if self.include_usage:
            names += [f"usage_{t}" for t in LAND_TYPES] + ["nonland"]
        names += [f"delta_{t}" for t in LAND_TYPES]
        if self.include_area:
            names.append("area")
        if self.include_latlon:
            names += ["lat", "lon"]
        if self.include_year:
            names.append("year")
        return names

    @property
    def n_features(self) -> int:
        return len(self.feature_names())

    def as_dict(self) -> dict:
        return {
            "include_usage": self.include_usage,
            "include_deltas": self.include_deltas,
            "include_area": self.include_area,
            "include_latlon": self.include_latlon,
            "include_year": self.include_year,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSchema":
        return cls(**d)


def featurize(ctx: CellContext, delta: ActionDelta, schema: FeatureSchema) -> np.ndarray:
    parts = []
    if schema.include_usage:
        parts.append(ctx.usage.fractions)
        parts.append([ctx.usage.nonland])
    parts.append(delta.values)
    if schema.include_area:
        parts.append([ctx.area])
    if schema.include_latlon:
        parts.append([ctx.lat, ctx.lon])
    if schema.include_year:
        parts.append([float(ctx.year)])
    return np.concatenate([np.asarray(p, dtype=np.float64) for p in parts])


def featurize_arrays(
    usage: np.ndarray,
    nonland: np.ndarray,
    delta: np.ndarray,
    area: np.ndarray,
    lat: np.ndarray,
    lon: np.ndarray,
    year: np.ndarray,
    schema: FeatureSchema,
) -> np.ndarray:
    """Batch featurization from columnar arrays; rows are cells."""
    parts = []
    if schema.include_usage:
        parts.append(usage)
        parts.append(nonland[:, None])
    parts.append(delta)
    if schema.include_area:
        parts.append(area[:, None])
    if schema.include_latlon:
        parts.append(lat[:, None])
        parts.append(lon[:, None])
    if schema.include_year:
        parts.append(year[:, None].astype(np.float64))
    return np.hstack([np.asarray(p, dtype=np.float64) for p in parts])


def featurize_dataset(ds: Dataset, schema: FeatureSchema) -> np.ndarray:
    return featurize_arrays(ds.usage, ds.nonland, ds.delta, ds.area, ds.lat, ds.lon, ds.year, schema)
