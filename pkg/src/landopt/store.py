"""Immutable model/cell store backing the what-if service."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .data import Dataset, load_csv, region_of
from .land import CellContext, LandUseVector
from .predictors.base import Predictor, load_model
from .prescriptor import PrescriptorNet, load_prescriptor


@dataclass
class PrescriptorEntry:
    prescriptor_id: str
    net: PrescriptorNet
    eluc_mean: float
    change_mean: float


@dataclass
class ModelStore:
    predictor: Predictor
    prescriptors: list[PrescriptorEntry]   # sorted by change_mean ascending
    cells: dict[str, CellContext]          # latest year per cell, insertion-ordered
    predictors_by_id: dict[str, Predictor]

    @classmethod
    def build(cls, predictor: Predictor, prescriptors: list[PrescriptorEntry],
              ds: Dataset) -> "ModelStore":
        cells: dict[str, CellContext] = {}
        for i in range(len(ds)):
            cid = ds.cell_id[i]
            year = int(ds.year[i])
            if cid in cells and cells[cid].year >= year:
                continue
            cells[cid] = CellContext(
                lat=float(ds.lat[i]), lon=float(ds.lon[i]), area=float(ds.area[i]),
                year=year, usage=LandUseVector(ds.usage[i].copy(), float(ds.nonland[i])),
                cell_id=cid,
            )
        prescriptors = sorted(prescriptors, key=lambda p: (p.change_mean, p.eluc_mean))
        by_id = {predictor.model_id or "default": predictor}
        return cls(predictor, prescriptors, cells, by_id)

    def prescriptor(self, prescriptor_id: str) -> PrescriptorEntry | None:
        for entry in self.prescriptors:
            if entry.prescriptor_id == prescriptor_id:
                return entry
        return None

    def cells_in_region(self, region: str | None) -> list[CellContext]:
        if region in (None, "", "global"):
            return list(self.cells.values())
        return [c for c in self.cells.values() if region_of(c.lon) == region]

    def known_regions(self) -> set[str]:
        return {region_of(c.lon) for c in self.cells.values()} | {"global"}


def load_store(store_dir, predictor_path=None, data_path=None, archive_dir=None) -> ModelStore:
    """Load a store directory: predictor.json, cells.csv, and archive/*.json.

    Individual pieces can live elsewhere via the explicit path arguments.
    """
    base = Path(store_dir)
    predictor_path = Path(predictor_path) if predictor_path else base / "predictor.json"
    data_path = Path(data_path) if data_path else base / "cells.csv"
    archive_dir = Path(archive_dir) if archive_dir else base / "archive"

    predictor = load_model(predictor_path)
    ds = load_csv(data_path)
    entries = []
    for path in sorted(archive_dir.glob("*.json")):
        net, meta = load_prescriptor(path)
        entries.append(PrescriptorEntry(
            prescriptor_id=meta.get("prescriptor_id", path.stem),
            net=net,
            eluc_mean=float(meta["eluc_mean"]),
            change_mean=float(meta["change_mean"]),
        ))
    return ModelStore.build(predictor, entries, ds)
