"""Dataset ingestion, year splits, sampling, and the synthetic ELUC generator.

The synthetic generator stands in for the high-fidelity bookkeeping simulator:
it draws plausible cells and actions and labels them with a known function, so
model behavior can be checked against exact ground truth.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .land import (
    FILE_TOL,
    LAND_TYPES,
    MOD_IDX,
    N_MODIFIABLE,
    N_TYPES,
    TYPE_INDEX,
    ActionDelta,
    CellContext,
    LandUseVector,
)

USAGE_COLUMNS = tuple(f"usage_{t}" for t in LAND_TYPES)
DELTA_COLUMNS = tuple(f"delta_{t}" for t in LAND_TYPES)
CSV_COLUMNS = ("cell_id", "year", "lat", "lon", "area", "nonland") + USAGE_COLUMNS + DELTA_COLUMNS + ("eluc",)

#: Synthetic tC/ha response per unit of positive delta, one per land type in
#: canonical order. These are generator configuration values chosen to give
#: conversions to forest < pasture < crops in emissions, not measured truth.
DEFAULT_WEIGHTS = {
    "primf": -40.0, "primn": -15.0, "secdf": -30.0, "secdn": -12.0,
    "urban": 1.0, "c3ann": 6.0, "c4ann": 8.0, "c3per": 4.0,
    "c4per": 5.0, "c3nfx": 5.0, "pastr": -4.0, "range": -2.0,
}
DEFAULT_INTERACTION = 10.0
DEFAULT_NOISE_STD = 0.5

# Dirichlet concentrations for land sampling: fixed types get less mass so
# most of a typical cell stays prescribable.
_ALPHA_MODIFIABLE = 0.5
_ALPHA_FIXED = 0.15

_SECDF = TYPE_INDEX["secdf"]
_SECDN = TYPE_INDEX["secdn"]
_PRIMF = TYPE_INDEX["primf"]
_PRIMN = TYPE_INDEX["primn"]
_PASTR = TYPE_INDEX["pastr"]

_REGION_BANDS = (("us", -180.0, -90.0), ("sa", -90.0, -30.0), ("eu", -30.0, 60.0), ("as", 60.0, 180.0))


class ParseError(ValueError):
    """A CSV file violated the interchange schema."""


def region_of(lon: float) -> str:
    """Region tag for a longitude, by fixed bands."""
    for tag, lo, hi in _REGION_BANDS:
        if lo <= lon < hi:
            return tag
    return "as"


@dataclass
class DatasetRow:
    ctx: CellContext
    delta: ActionDelta
    eluc: float


@dataclass
class Dataset:
    """Columnar storage of (context, action, ELUC) rows in file order."""

    cell_id: list
    year: np.ndarray
    lat: np.ndarray
    lon: np.ndarray
    area: np.ndarray
    nonland: np.ndarray
    usage: np.ndarray   # (n, 12)
    delta: np.ndarray   # (n, 12)
    eluc: np.ndarray
    region_tag: str = "global"

    def __len__(self) -> int:
        return len(self.eluc)

    def row(self, i: int) -> DatasetRow:
        ctx = CellContext(
            lat=float(self.lat[i]), lon=float(self.lon[i]), area=float(self.area[i]),
            year=int(self.year[i]),
            usage=LandUseVector(self.usage[i].copy(), float(self.nonland[i])),
            cell_id=self.cell_id[i],
        )
        return DatasetRow(ctx, ActionDelta(self.delta[i].copy()), float(self.eluc[i]))

    def rows(self) -> Iterator[DatasetRow]:
        for i in range(len(self)):
            yield self.row(i)

    def subset(self, idx: np.ndarray, region_tag: str | None = None) -> "Dataset":
        return Dataset(
            cell_id=[self.cell_id[i] for i in idx],
            year=self.year[idx].copy(),
            lat=self.lat[idx].copy(),
            lon=self.lon[idx].copy(),
            area=self.area[idx].copy(),
            nonland=self.nonland[idx].copy(),
            usage=self.usage[idx].copy(),
            delta=self.delta[idx].copy(),
            eluc=self.eluc[idx].copy(),
            region_tag=self.region_tag if region_tag is None else region_tag,
        )

    def filter_region(self, tag: str) -> "Dataset":
        if tag == "global":
            return self
        regions = np.array([region_of(x) for x in self.lon])
        return self.subset(np.flatnonzero(regions == tag), region_tag=tag)

    def year_range(self) -> tuple[int, int]:
        return int(self.year.min()), int(self.year.max())


def _parse_float(text: str, col: str, line: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"row {line}: column {col!r} is not a number: {text!r}") from None
    if not math.isfinite(v):
        raise ParseError(f"row {line}: column {col!r} is not finite: {text!r}")
    return v


def load_csv(path, region_tag: str = "global") -> Dataset:
    """Load a dataset from the canonical CSV interchange format.

    Every row is validated: usage fractions and nonland must sum to one and
    deltas to zero within file tolerance, and usage + delta must stay
    non-negative (within tolerance, clamped at zero downstream).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file: missing header") from None
        if tuple(header) != CSV_COLUMNS:
            missing = set(CSV_COLUMNS) - set(header)
            if missing:
                raise ParseError(f"missing column(s): {sorted(missing)}")
            raise ParseError(f"unexpected column order: {header[:6]}...")

        cell_id, years = [], []
        scalars = {k: [] for k in ("lat", "lon", "area", "nonland", "eluc")}
        usage_rows, delta_rows = [], []
        for line, rec in enumerate(reader, start=2):
            if len(rec) != len(CSV_COLUMNS):
                raise ParseError(f"row {line}: expected {len(CSV_COLUMNS)} fields, got {len(rec)}")
            cell_id.append(rec[0])
            try:
                years.append(int(rec[1]))
            except ValueError:
                raise ParseError(f"row {line}: column 'year' is not an integer: {rec[1]!r}") from None
            for j, col in enumerate(("lat", "lon", "area", "nonland")):
                scalars[col].append(_parse_float(rec[2 + j], col, line))
            u = [_parse_float(rec[6 + k], USAGE_COLUMNS[k], line) for k in range(N_TYPES)]
            d = [_parse_float(rec[18 + k], DELTA_COLUMNS[k], line) for k in range(N_TYPES)]
            scalars["eluc"].append(_parse_float(rec[30], "eluc", line))

            nl = scalars["nonland"][-1]
            if min(u) < 0.0 or nl < 0.0:
                raise ParseError(f"row {line}: negative usage fraction")
            total = sum(u) + nl
            if abs(total - 1.0) > FILE_TOL:
                raise ParseError(f"row {line}: usage + nonland sums to {total!r}, expected 1")
            if abs(sum(d)) > FILE_TOL:
                raise ParseError(f"row {line}: deltas sum to {sum(d)!r}, expected 0")
            if min(ui + di for ui, di in zip(u, d)) < -FILE_TOL:
                raise ParseError(f"row {line}: usage + delta goes negative")
            usage_rows.append(u)
            delta_rows.append(d)

    if not cell_id:
        raise ParseError("no rows")
    return Dataset(
        cell_id=cell_id,
        year=np.array(years, dtype=np.int64),
        lat=np.array(scalars["lat"]),
        lon=np.array(scalars["lon"]),
        area=np.array(scalars["area"]),
        nonland=np.array(scalars["nonland"]),
        usage=np.array(usage_rows),
        delta=np.array(delta_rows),
        eluc=np.array(scalars["eluc"]),
        region_tag=region_tag,
    )


def save_csv(ds: Dataset, path) -> None:
    """Write the canonical interchange CSV; floats as shortest round-trip decimals."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for i in range(len(ds)):
            row = [ds.cell_id[i], str(int(ds.year[i]))]
            row += [repr(float(v)) for v in (ds.lat[i], ds.lon[i], ds.area[i], ds.nonland[i])]
            row += [repr(float(v)) for v in ds.usage[i]]
            row += [repr(float(v)) for v in ds.delta[i]]
            row.append(repr(float(ds.eluc[i])))
            writer.writerow(row)


def split_by_year(ds: Dataset, train_range: tuple[int, int], test_range: tuple[int, int]) -> tuple[Dataset, Dataset]:
    """Split rows into train/test by inclusive year ranges. Ranges must be disjoint."""
    t0, t1 = train_range
    s0, s1 = test_range
    if max(t0, s0) <= min(t1, s1):
        raise ValueError(f"year ranges overlap: {train_range} vs {test_range}")
    train_idx = np.flatnonzero((ds.year >= t0) & (ds.year <= t1))
    test_idx = np.flatnonzero((ds.year >= s0) & (ds.year <= s1))
    return ds.subset(train_idx), ds.subset(test_idx)


def sample_fraction(ds: Dataset, fraction: float, seed: int) -> Dataset:
    """Choose ceil(fraction * n) rows without replacement, deterministically."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    n = len(ds)
    k = math.ceil(fraction * n)
    rng = np.random.default_rng(seed)
    idx = rng.choice(n, size=k, replace=False)
    return ds.subset(idx)


@dataclass
class SynthConfig:
    """Configuration of the synthetic ground-truth generator."""

    seed: int = 0
    n_cells: int = 100
    years: tuple[int, int] = (2000, 2009)
    linear_weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    interaction_coeff: float = DEFAULT_INTERACTION
    noise_std: float = DEFAULT_NOISE_STD

    def __post_init__(self):
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        missing = [t for t in LAND_TYPES if t not in self.linear_weights]
        if missing:
            raise ValueError(f"linear_weights missing land types: {missing}")
        if not all(math.isfinite(self.linear_weights[t]) for t in LAND_TYPES):
            raise ValueError("linear_weights must be finite")

    @property
    def weight_vector(self) -> np.ndarray:
        return np.array([self.linear_weights[t] for t in LAND_TYPES])

    def true_eluc(self, usage: np.ndarray, delta: np.ndarray) -> np.ndarray:
        """Noiseless generator response for (n, 12) usage and delta matrices."""
        usage = np.atleast_2d(usage)
        delta = np.atleast_2d(delta)
        lin = delta @ self.weight_vector
        inter = self.interaction_coeff * delta[:, _SECDF] * usage[:, _PASTR]
        return lin + inter


#: Types whose deltas are identically zero in historical actions: urban is
#: never touched and c4per is never prescribed.
NEVER_MOVED = ("urban", "c4per")


def identifiable_weights(weights: dict | None = None) -> dict:
    """The generator weights, expressed in the gauge a least-squares fit can see.

    Two directions of weight space leave the generated ELUC unchanged: the
    coefficients of types that never move (zero delta columns), and a common
    shift of the remaining coefficients (active deltas sum to zero on every
    row). This zeroes the former and centers the latter, producing weights
    that generate the exact same data and are recoverable coefficient-for-
    coefficient by an exact fit.
    """
    w = dict(DEFAULT_WEIGHTS if weights is None else weights)
    active = [t for t in LAND_TYPES if t not in NEVER_MOVED]
    mean = sum(w[t] for t in active) / len(active)
    out = {t: w[t] - mean for t in active}
    out.update({t: 0.0 for t in NEVER_MOVED})
    return out


def synth_generate(cfg: SynthConfig) -> Dataset:
    """Generate a synthetic dataset: one row per cell per year.

    Cells get a random location, area, nonland share, and a Dirichlet land
    allocation; actions reshuffle the modifiable types and occasionally
    convert primary land into the matching secondary type. ELUC is the
    noiseless generator response plus Gaussian noise.
    """
    rng = np.random.default_rng(cfg.seed)
    y0, y1 = cfg.years
    if y1 < y0:
        raise ValueError(f"years range is empty: {cfg.years}")
    n_years = y1 - y0 + 1
    n = cfg.n_cells * n_years

    lat = rng.uniform(-60.0, 75.0, cfg.n_cells)
    lon = rng.uniform(-180.0, 180.0 - 1e-9, cfg.n_cells)
    area = 77200.0 * np.cos(np.radians(lat))  # ~0.25 degree cell, hectares
    nonland = rng.uniform(0.0, 0.3, cfg.n_cells)

    alpha = np.full(N_TYPES, _ALPHA_FIXED)
    alpha[MOD_IDX] = _ALPHA_MODIFIABLE

    cell_id = []
    years = np.empty(n, dtype=np.int64)
    usage = np.empty((n, N_TYPES))
    delta = np.empty((n, N_TYPES))
    lat_r = np.empty(n)
    lon_r = np.empty(n)
    area_r = np.empty(n)
    nonland_r = np.empty(n)

    i = 0
    for c in range(cfg.n_cells):
        cid = f"cell_{c:05d}"
        for year in range(y0, y1 + 1):
            shares = rng.dirichlet(alpha)
            u = shares * (1.0 - nonland[c])

            # Reallocate the modifiable budget toward a random target mix.
            budget = u[MOD_IDX].sum()
            mix = rng.dirichlet(np.full(N_MODIFIABLE, 0.5))
            t = rng.uniform()
            target = (1.0 - t) * u[MOD_IDX] + t * budget * mix
            d = np.zeros(N_TYPES)
            d[MOD_IDX] = target - u[MOD_IDX]

            # Occasional primary loss, rebalanced into the secondary types.
            if rng.uniform() < 0.3:
                loss_f = rng.uniform(0.0, 0.5) * u[_PRIMF]
                loss_n = rng.uniform(0.0, 0.5) * u[_PRIMN]
                d[_PRIMF] -= loss_f
                d[_SECDF] += loss_f
                d[_PRIMN] -= loss_n
                d[_SECDN] += loss_n

            cell_id.append(cid)
            years[i] = year
            usage[i] = u
            delta[i] = d
            lat_r[i] = lat[c]
            lon_r[i] = lon[c]
            area_r[i] = area[c]
            nonland_r[i] = nonland[c]
            i += 1

    eluc = cfg.true_eluc(usage, delta)
    if cfg.noise_std > 0:
        eluc = eluc + rng.normal(0.0, cfg.noise_std, n)

    return Dataset(
        cell_id=cell_id, year=years, lat=lat_r, lon=lon_r, area=area_r,
        nonland=nonland_r, usage=usage, delta=delta, eluc=np.asarray(eluc),
    )
