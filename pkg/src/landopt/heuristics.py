"""Threshold-swept baseline prescriptions converting land into secondary forest."""

from __future__ import annotations

import csv

import numpy as np

from .evolution import EvalContexts
from .land import MOD_IDX, MODIFIABLE_TYPES, CellContext, Recommendation, apply_batch, change_batch
from .predictors.base import Predictor
from .predictors.linreg import LinRegModel
from .prescriptor import SECDF_POS

DEFAULT_THRESHOLDS = tuple(float(t) for t in range(10, 101, 10))

_SOURCE_POS = [i for i in range(len(MODIFIABLE_TYPES)) if i != SECDF_POS]


def even_recs(usage: np.ndarray, threshold_pct: float) -> np.ndarray:
    """Even conversion: the same proportion of every non-secdf modifiable type
    moves to secdf, sized to hit the change threshold (or saturate)."""
    cur = usage[:, MOD_IDX]
    land_total = usage.sum(axis=1)
    sources = cur.sum(axis=1) - cur[:, SECDF_POS]
    # proportion of each source type to move
    p = np.zeros(len(usage))
    ok = (sources > 0.0) & (land_total > 0.0)
    p[ok] = np.minimum(1.0, threshold_pct * land_total[ok] / (100.0 * sources[ok]))
    recs = cur * (1.0 - p[:, None])
    recs[:, SECDF_POS] = cur[:, SECDF_POS] + p * sources
    return recs


def linear_recs(usage: np.ndarray, threshold_pct: float, linreg: LinRegModel) -> np.ndarray:
    """Greedy conversion: drain sources in descending LinReg delta-weight order
    until the change threshold is met exactly (partial take on the last)."""
    order = sorted(_SOURCE_POS, key=lambda i: -linreg.delta_weight(MODIFIABLE_TYPES[i]))
    cur = usage[:, MOD_IDX]
    land_total = usage.sum(axis=1)
    needed = threshold_pct / 100.0 * land_total
    recs = cur.copy()
    for i in order:
        take = np.minimum(recs[:, i], needed)
        recs[:, i] -= take
        recs[:, SECDF_POS] += take
        needed -= take
    return recs


def even_heuristic(ctx: CellContext, threshold_pct: float) -> Recommendation:
    if not 0.0 <= threshold_pct <= 100.0:
        raise ValueError(f"threshold must be in [0, 100], got {threshold_pct}")
    return Recommendation(even_recs(ctx.usage.fractions[None, :], threshold_pct)[0])


def linear_heuristic(ctx: CellContext, threshold_pct: float, linreg: LinRegModel) -> Recommendation:
    if not 0.0 <= threshold_pct <= 100.0:
        raise ValueError(f"threshold must be in [0, 100], got {threshold_pct}")
    return Recommendation(linear_recs(ctx.usage.fractions[None, :], threshold_pct, linreg)[0])


def heuristic_sweep(kind: str, ctxs: EvalContexts, predictor: Predictor,
                    thresholds=DEFAULT_THRESHOLDS, linreg: LinRegModel | None = None,
                    eluc_fn=None) -> list[dict]:
    """Evaluate one heuristic at each threshold, exactly as candidates are.

    ``eluc_fn(usage, delta) -> eluc`` may replace the predictor (e.g. the
    noiseless generator); rows come back sorted by change_mean.
    """
    if kind not in ("even", "linear"):
        raise ValueError(f"unknown heuristic kind: {kind!r}")
    if kind == "linear" and linreg is None:
        raise ValueError("the linear heuristic needs a fitted LinReg model")
    rows = []
    for thr in thresholds:
        if kind == "even":
            recs = even_recs(ctxs.usage, thr)
        else:
            recs = linear_recs(ctxs.usage, thr, linreg)
        after = apply_batch(ctxs.usage, recs)
        delta = after - ctxs.usage
        change = change_batch(ctxs.usage, after, ctxs.nonland)
        if eluc_fn is not None:
            eluc = np.asarray(eluc_fn(ctxs.usage, delta))
        else:
            eluc = predictor.predict_batch(ctxs.usage, ctxs.nonland, delta, ctxs.area,
                                           ctxs.lat, ctxs.lon, ctxs.year)
        rows.append({
            "kind": kind,
            "threshold": float(thr),
            "change_mean": float(change.mean()),
            "eluc_mean": float(eluc.mean()),
        })
    rows.sort(key=lambda r: r["change_mean"])
    return rows


def write_sweep_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["kind", "threshold", "change_mean", "eluc_mean"])
        for r in rows:
            writer.writerow([r["kind"], repr(r["threshold"]), repr(r["change_mean"]), repr(r["eluc_mean"])])
