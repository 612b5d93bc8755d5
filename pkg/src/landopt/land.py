"""Land-use taxonomy, context/action/outcome types, and change accounting.

All fractional quantities are dimensionless shares of a grid cell. A cell's
twelve land-type fractions plus its ``nonland`` share always sum to one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SUM_TOL = 1e-9   # internal sum checks
FILE_TOL = 1e-6  # files carry rounded decimals

#: The twelve land types, in canonical order. This order is fixed and is the
#: same everywhere: feature vectors, network inputs, and file columns.
LAND_TYPES = (
    "primf", "primn", "secdf", "secdn", "urban",
    "c3ann", "c4ann", "c3per", "c4per", "c3nfx", "pastr", "range",
)
N_TYPES = len(LAND_TYPES)

#: Types a prescription may reallocate, in canonical order.
MODIFIABLE_TYPES = ("secdf", "secdn", "c3ann", "c4ann", "c3per", "c3nfx", "pastr", "range")
#: Types a prescription must leave untouched: primary land and urban areas
#: cannot be affected, and c4per occurs too rarely to prescribe.
FIXED_TYPES = ("primf", "primn", "urban", "c4per")

TYPE_INDEX = {name: i for i, name in enumerate(LAND_TYPES)}
MOD_IDX = np.array([TYPE_INDEX[t] for t in MODIFIABLE_TYPES], dtype=np.intp)
FIX_IDX = np.array([TYPE_INDEX[t] for t in FIXED_TYPES], dtype=np.intp)
N_MODIFIABLE = len(MODIFIABLE_TYPES)
SECDF_MOD_POS = MODIFIABLE_TYPES.index("secdf")


class LandValidationError(ValueError):
    """A land-use vector, recommendation, or action failed validation."""


def _as_float_array(values, n, what):
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != (n,):
        raise LandValidationError(f"{what} must have shape ({n},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise LandValidationError(f"{what} contains non-finite values")
    return arr


@dataclass
class LandUseVector:
    """Fractional allocation over the 12 land types plus the nonland share."""

    fractions: np.ndarray
    nonland: float = 0.0

    def __post_init__(self):
        self.fractions = _as_float_array(self.fractions, N_TYPES, "land fractions")
        self.nonland = float(self.nonland)

    def validate(self, tol: float = SUM_TOL) -> "LandUseVector":
        if np.any(self.fractions < 0.0):
            bad = LAND_TYPES[int(np.argmin(self.fractions))]
            raise LandValidationError(f"negative fraction for {bad}: {self.fractions.min()}")
        if self.nonland < 0.0:
            raise LandValidationError(f"negative nonland fraction: {self.nonland}")
        total = float(self.fractions.sum()) + self.nonland
        if abs(total - 1.0) > tol:
            raise LandValidationError(f"fractions + nonland sum to {total!r}, expected 1 within {tol}")
        return self

    @property
    def land_total(self) -> float:
        return 1.0 - self.nonland

    @property
    def modifiable_budget(self) -> float:
        return float(self.fractions[MOD_IDX].sum())

    @property
    def modifiable(self) -> np.ndarray:
        """The 8 modifiable fractions in MODIFIABLE_TYPES order."""
        return self.fractions[MOD_IDX].copy()

    def copy(self) -> "LandUseVector":
        return LandUseVector(self.fractions.copy(), self.nonland)

    def as_dict(self) -> dict:
        d = {t: float(self.fractions[i]) for i, t in enumerate(LAND_TYPES)}
        d["nonland"] = self.nonland
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LandUseVector":
        return cls(np.array([d[t] for t in LAND_TYPES]), d.get("nonland", 0.0))


@dataclass
class CellContext:
    """One grid cell at a decision moment: where, when, and current usage."""

    lat: float
    lon: float
    area: float
    year: int
    usage: LandUseVector
    cell_id: str = ""

    def validate(self) -> "CellContext":
        if not self.area > 0:
            raise LandValidationError(f"area must be positive, got {self.area}")
        if not -90.0 <= self.lat <= 90.0:
            raise LandValidationError(f"lat out of range: {self.lat}")
        if not -180.0 <= self.lon < 180.0:
            raise LandValidationError(f"lon out of range: {self.lon}")
        self.usage.validate()
        return self


@dataclass
class Recommendation:
    """Target fractions for the 8 modifiable types, in MODIFIABLE_TYPES order."""

    values: np.ndarray

    def __post_init__(self):
        self.values = _as_float_array(self.values, N_MODIFIABLE, "recommendation")

    def validate_against(self, ctx: CellContext, tol: float = SUM_TOL) -> "Recommendation":
        if np.any(self.values < 0.0):
            bad = MODIFIABLE_TYPES[int(np.argmin(self.values))]
            raise LandValidationError(f"negative recommendation for {bad}: {self.values.min()}")
        budget = ctx.usage.modifiable_budget
        total = float(self.values.sum())
        if abs(total - budget) > tol:
            raise LandValidationError(
                f"recommendation sums to {total!r} but the cell's modifiable budget is {budget!r}"
            )
        return self

    def as_dict(self) -> dict:
        return {t: float(v) for t, v in zip(MODIFIABLE_TYPES, self.values)}


@dataclass
class ActionDelta:
    """Signed per-type fractional changes, in canonical order."""

    values: np.ndarray

    def __post_init__(self):
        self.values = _as_float_array(self.values, N_TYPES, "action delta")

    def validate(self, tol: float = SUM_TOL) -> "ActionDelta":
        total = float(self.values.sum())
        if abs(total) > tol:
            raise LandValidationError(f"action deltas sum to {total!r}, expected 0 within {tol}")
        return self

    def as_dict(self) -> dict:
        return {t: float(v) for t, v in zip(LAND_TYPES, self.values)}


@dataclass
class Outcome:
    """The (ELUC, change) pair: tC/ha emitted (positive) and percent land changed."""

    eluc: float
    change: float


def apply_recommendation(ctx: CellContext, rec: Recommendation) -> LandUseVector:
    """Replace the modifiable fractions of ``ctx`` with ``rec``.

    Fixed-type fractions and nonland are carried over untouched, so the total
    stays at one.
    """
    rec.validate_against(ctx)
    out = ctx.usage.fractions.copy()
    out[MOD_IDX] = rec.values
    return LandUseVector(out, ctx.usage.nonland)


def compute_change(before: LandUseVector, after: LandUseVector) -> float:
    """Percent of the cell's land whose use differs between two allocations.

    Equals 100 * sum(max(0, after - before)) / land_total; because deltas sum
    to zero this is half the L1 distance, normalized by usable land. A cell
    with no land at all has zero change by definition.
    """
    if abs(before.nonland - after.nonland) > SUM_TOL:
        raise LandValidationError(
            f"nonland differs between allocations: {before.nonland} vs {after.nonland}"
        )
    land_total = before.land_total
    if land_total <= 0.0:
        return 0.0
    gained = np.maximum(after.fractions - before.fractions, 0.0).sum()
    return float(100.0 * gained / land_total)


def delta_of(before: LandUseVector, after: LandUseVector) -> ActionDelta:
    """Per-type ``after - before`` differences."""
    if abs(before.nonland - after.nonland) > SUM_TOL:
        raise LandValidationError(
            f"nonland differs between allocations: {before.nonland} vs {after.nonland}"
        )
    return ActionDelta(after.fractions - before.fractions)


# Batch forms used on the evolution hot path. Rows are cells; usage matrices
# are (n, 12) in canonical column order and recommendations (n, 8) in
# MODIFIABLE_TYPES order.

def apply_batch(usage: np.ndarray, recs: np.ndarray) -> np.ndarray:
    after = usage.copy()
    after[:, MOD_IDX] = recs
    return after


def change_batch(before: np.ndarray, after: np.ndarray, nonland: np.ndarray) -> np.ndarray:
    land_total = 1.0 - nonland
    gained = np.maximum(after - before, 0.0).sum(axis=1)
    out = np.zeros(len(before))
    ok = land_total > 0.0
    out[ok] = 100.0 * gained[ok] / land_total[ok]
    return out
