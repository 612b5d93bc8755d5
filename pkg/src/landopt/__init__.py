"""Surrogate-assisted evolutionary optimization of land-use change."""

from .land import (
    FIXED_TYPES,
    LAND_TYPES,
    MODIFIABLE_TYPES,
    ActionDelta,
    CellContext,
    LandUseVector,
    Outcome,
    Recommendation,
    apply_recommendation,
    compute_change,
    delta_of,
)

__version__ = "0.1.0"
