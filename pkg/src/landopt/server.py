"""HTTP what-if API over a loaded model store.

The store is loaded once and never mutated; every outcome shown to a client
is recomputed through the predictor on request.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .land import (
    LAND_TYPES,
    MODIFIABLE_TYPES,
    N_MODIFIABLE,
    N_TYPES,
    ActionDelta,
    CellContext,
    Recommendation,
    apply_recommendation,
    compute_change,
)
from .prescriptor import prescribe
from .store import ModelStore

BUDGET_TOL = 1e-6


class PrescribeRequest(BaseModel):
    cell_id: str
    prescriptor_id: str


class PredictRequest(BaseModel):
    cell_id: str
    recommended: list[float]


def _cell_payload(ctx: CellContext) -> dict:
    usage = {t: float(ctx.usage.fractions[i]) for i, t in enumerate(LAND_TYPES)}
    usage["nonland"] = ctx.usage.nonland
    return {
        "cell_id": ctx.cell_id,
        "lat": ctx.lat,
        "lon": ctx.lon,
        "area": ctx.area,
        "year": ctx.year,
        "usage": usage,
    }


def _outcome_payload(store: ModelStore, ctx: CellContext, rec: Recommendation) -> dict:
    after = apply_recommendation(ctx, rec)
    delta = ActionDelta(after.fractions - ctx.usage.fractions)
    change = compute_change(ctx.usage, after)
    predicted = store.predictor.predict(ctx, delta)
    baseline = store.predictor.predict(ctx, ActionDelta(np.zeros(N_TYPES)))
    if abs(baseline) > 1e-9:
        reduction = 100.0 * (baseline - predicted) / abs(baseline)
    else:
        reduction = None
    usage_out = {t: float(after.fractions[i]) for i, t in enumerate(LAND_TYPES)}
    usage_out["nonland"] = after.nonland
    return {
        "recommended": usage_out,
        "delta": {t: float(delta.values[i]) for i, t in enumerate(LAND_TYPES)},
        "predicted_eluc": predicted,
        "change_pct": change,
        "baseline_eluc": baseline,
        "eluc_reduction_pct": reduction,
    }


def create_app(store: ModelStore, ui_dir=None) -> FastAPI:
    app = FastAPI(title="land-use what-if service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(HTTPException)
    async def _http_error(request: Request, exc: HTTPException):
        return JSONResponse(status_code=exc.status_code, content={"error": str(exc.detail)})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422, content={"error": str(exc.errors())})

    @app.get("/api/cells")
    def list_cells(region: str | None = None):
        if region not in (None, "") and region not in store.known_regions():
            raise HTTPException(404, f"unknown region: {region!r}")
        return [_cell_payload(c) for c in store.cells_in_region(region)]

    @app.get("/api/prescriptors")
    def list_prescriptors():
        return [
            {
                "prescriptor_id": e.prescriptor_id,
                "eluc_mean": e.eluc_mean,
                "change_mean": e.change_mean,
            }
            for e in store.prescriptors
        ]

    @app.post("/api/prescribe")
    def prescribe_cell(req: PrescribeRequest):
        ctx = store.cells.get(req.cell_id)
        if ctx is None:
            raise HTTPException(404, f"unknown cell_id: {req.cell_id!r}")
        entry = store.prescriptor(req.prescriptor_id)
        if entry is None:
            raise HTTPException(404, f"unknown prescriptor_id: {req.prescriptor_id!r}")
        try:
            rec = prescribe(entry.net, ctx)
            return _outcome_payload(store, ctx, rec)
        except ValueError as exc:
            raise HTTPException(500, f"prescription failed: {exc}") from exc

    @app.post("/api/predict")
    def predict_cell(req: PredictRequest):
        ctx = store.cells.get(req.cell_id)
        if ctx is None:
            raise HTTPException(404, f"unknown cell_id: {req.cell_id!r}")
        if len(req.recommended) != N_MODIFIABLE:
            raise HTTPException(
                422, f"recommended must list {N_MODIFIABLE} fractions "
                     f"in order {MODIFIABLE_TYPES}, got {len(req.recommended)}"
            )
        values = np.asarray(req.recommended, dtype=np.float64)
        if np.any(values < 0.0) or not np.all(np.isfinite(values)):
            raise HTTPException(422, "recommended fractions must be finite and >= 0")
        budget = ctx.usage.modifiable_budget
        total = float(values.sum())
        if abs(total - budget) > BUDGET_TOL:
            raise HTTPException(
                422, f"recommended sums to {total!r} but the cell's modifiable "
                     f"budget is {budget!r} (tolerance {BUDGET_TOL})"
            )
        if total > 0.0:
            values = values * (budget / total)
        try:
            return _outcome_payload(store, ctx, Recommendation(values))
        except ValueError as exc:
            raise HTTPException(500, f"prediction failed: {exc}") from exc

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
