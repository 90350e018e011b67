"""Loading raw event files and turning them into a standardized panel.

The raw data are long-format rows ``(customer, product, sku, variable, date,
value)``.  They are summed over customers and SKUs into one daily series per
``(product, variable)`` pair, filtered for sparsity and standardized.
"""
from __future__ import annotations

import csv
import datetime as dt
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

#: Variable kinds in canonical order (price, quantity, web visits, TV ad
#: exposure, search frequency).
VARIABLES = ("P", "Q", "Visit", "TVAd", "Search")


class ParseError(ValueError):
    """A malformed row in an event file.  ``line`` is the 1-based file line."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class EventSchema:
    """Column names of an event file."""

    customer: str = "customer_id"
    product: str = "product_code"
    sku: str = "sku_code"
    variable: str = "variable"
    date: str = "date"
    value: str = "value"

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str] | None) -> "EventSchema":
        return cls(**dict(mapping or {}))


@dataclass
class RawEventTable:
    frame: pd.DataFrame
    dropped_count: int = 0
    window: tuple[dt.date, dt.date] | None = None

    def __len__(self) -> int:
        return len(self.frame)


@dataclass(frozen=True)
class PanelSeries:
    """N labelled daily series of common length T.

    ``entry_days[i]`` is the number of days on which series ``i`` had a
    nonzero observation before any gap filling; it drives the sparsity filter.
    """

    labels: list[tuple[str, str]]
    values: np.ndarray
    days: np.ndarray
    entry_days: np.ndarray | None = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("panel values must be a 2-d array")
        if values.shape[0] != len(self.labels):
            raise ValueError(
                f"{len(self.labels)} labels for {values.shape[0]} rows")
        if len(self.days) != values.shape[1]:
            raise ValueError(
                f"{len(self.days)} days for {values.shape[1]} columns")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", [tuple(l) for l in self.labels])
        object.__setattr__(self, "days",
                           np.asarray(self.days, dtype="datetime64[D]"))

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def T(self) -> int:
        return self.values.shape[1]

    def indices(self, variable: str) -> list[int]:
        """Row indices whose variable kind is ``variable``."""
        return [i for i, (_, v) in enumerate(self.labels) if v == variable]

    def select(self, rows: Sequence[int]) -> "PanelSeries":
        rows = list(rows)
        entry = None if self.entry_days is None else self.entry_days[rows]
        return replace(self, labels=[self.labels[i] for i in rows],
                       values=self.values[rows], entry_days=entry)


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------

def _parse_date(text: str) -> dt.date:
    return dt.date.fromisoformat(text.strip())


def load_events(path, schema: EventSchema | Mapping[str, str] | None = None,
                window: tuple[dt.date, dt.date] | None = None,
                delimiter: str = ",") -> RawEventTable:
    """Read a delimiter-separated event file.

    Rows dated outside ``window`` (inclusive bounds) are dropped and counted.
    Any malformed row raises :class:`ParseError` carrying its line number.
    """
    if not isinstance(schema, EventSchema):
        schema = EventSchema.from_mapping(schema)
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"event file not found: {path}")
    if window is not None:
        window = (_as_date(window[0]), _as_date(window[1]))

    cols = {k: [] for k in ("customer_id", "product_code", "sku_code",
                            "variable", "date", "value")}
    dropped = 0
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        missing = [c for c in (schema.customer, schema.product, schema.sku,
                               schema.variable, schema.date, schema.value)
                   if c not in (reader.fieldnames or [])]
        if missing:
            raise ParseError(1, f"missing columns {missing}")
        for lineno, row in enumerate(reader, start=2):
            var = (row[schema.variable] or "").strip()
            if var not in VARIABLES:
                raise ParseError(lineno, f"unknown variable {var!r}")
            try:
                day = _parse_date(row[schema.date])
            except (TypeError, ValueError):
                raise ParseError(lineno, f"bad date {row[schema.date]!r}")
            try:
                value = float(row[schema.value])
            except (TypeError, ValueError):
                raise ParseError(lineno, f"bad value {row[schema.value]!r}")
            if not np.isfinite(value) or value < 0:
                raise ParseError(lineno, f"negative or non-finite value {value}")
            if var == "P" and value <= 0:
                raise ParseError(lineno, "price must be positive")
            if window is not None and not window[0] <= day <= window[1]:
                dropped += 1
                continue
            cols["customer_id"].append(row[schema.customer])
            cols["product_code"].append(row[schema.product])
            cols["sku_code"].append(row[schema.sku])
            cols["variable"].append(var)
            cols["date"].append(day)
            cols["value"].append(value)

    frame = pd.DataFrame(cols)
    frame["date"] = pd.to_datetime(frame["date"])
    if dropped:
        log.info("dropped %d rows outside window %s", dropped, window)
    return RawEventTable(frame, dropped, window)


def _as_date(d) -> dt.date:
    if isinstance(d, dt.datetime):
        return d.date()
    if isinstance(d, dt.date):
        return d
    if isinstance(d, np.datetime64):
        return pd.Timestamp(d).date()
    return dt.date.fromisoformat(str(d))


def window_days(window) -> np.ndarray:
    start, end = _as_date(window[0]), _as_date(window[1])
    days = np.arange(np.datetime64(start, "D"), np.datetime64(end, "D") + 1)
    return days


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

def _price_by_day(frame: pd.DataFrame) -> pd.DataFrame:
    """Quantity-weighted mean price per (product, day).

    Price rows are paired with quantity rows sharing (customer, product, sku,
    date).  Days whose price rows have no matching quantity fall back to the
    plain mean of the prices seen.
    """
    key = ["customer_id", "product_code", "sku_code", "date"]
    p = frame[frame["variable"] == "P"].groupby(key, as_index=False)["value"].mean()
    q = frame[frame["variable"] == "Q"].groupby(key, as_index=False)["value"].sum()
    m = p.merge(q, on=key, how="left", suffixes=("_p", "_q"))
    m["w"] = m["value_q"].fillna(0.0)
    m["pw"] = m["value_p"] * m["w"]
    g = m.groupby(["product_code", "date"]).agg(
        pw=("pw", "sum"), w=("w", "sum"), plain=("value_p", "mean"))
    price = np.where(g["w"] > 0, g["pw"] / g["w"].where(g["w"] > 0, 1.0),
                     g["plain"])
    return pd.Series(price, index=g.index, name="value").reset_index()


def _fill_price(row: np.ndarray) -> np.ndarray:
    """Forward-fill zeros with the last observed price; back-fill the start."""
    obs = np.flatnonzero(row)
    if obs.size == 0:
        return row
    idx = np.maximum.accumulate(np.where(row != 0, np.arange(row.size), 0))
    filled = row[idx]
    filled[:obs[0]] = row[obs[0]]
    return filled


def _daily_grid(frame, products, days):
    """Dense (product, variable, day) array of raw sums, price unfilled."""
    day_pos = pd.Index(pd.to_datetime(days))
    prod_pos = {p: i for i, p in enumerate(products)}
    grid = np.zeros((len(products), len(VARIABLES), len(days)))

    summed = (frame[frame["variable"] != "P"]
              .groupby(["product_code", "variable", "date"])["value"].sum()
              .reset_index())
    if len(summed):
        pi = summed["product_code"].map(prod_pos).to_numpy()
        vi = summed["variable"].map({v: i for i, v in enumerate(VARIABLES)}).to_numpy()
        ti = day_pos.get_indexer(summed["date"])
        ok = (ti >= 0) & ~pd.isna(pi)
        grid[pi[ok].astype(int), vi[ok], ti[ok]] = summed["value"].to_numpy()[ok]

    price = _price_by_day(frame)
    if len(price):
        pi = price["product_code"].map(prod_pos).to_numpy()
        ti = day_pos.get_indexer(price["date"])
        ok = (ti >= 0) & ~pd.isna(pi)
        grid[pi[ok].astype(int), 0, ti[ok]] = price["value"].to_numpy()[ok]
    return grid


def product_order(frame: pd.DataFrame) -> list[str]:
    """Products ordered by total quantity, largest first (ties by code)."""
    products = sorted(frame["product_code"].unique())
    totals = (frame[frame["variable"] == "Q"].groupby("product_code")["value"]
              .sum().reindex(products, fill_value=0.0))
    return sorted(products, key=lambda p: (-totals[p], p))


def aggregate(raw: RawEventTable, window=None) -> PanelSeries:
    """Sum events into one daily series per (product, variable).

    Quantities, visits, TV exposure and searches are summed over customers
    and SKUs.  Price is the quantity-weighted mean unit price of the day,
    carried forward over days without purchases.  The full product x variable
    grid is returned; sparse series are removed later by :func:`filter_sparse`.
    """
    window = window if window is not None else raw.window
    if window is None:
        raise ValueError("an analysis window is required")
    days = window_days(window)
    if len(days) < 2:
        raise ValueError("window must span at least 2 days")
    frame = raw.frame
    if len(frame):
        lo, hi = pd.Timestamp(days[0]), pd.Timestamp(days[-1])
        frame = frame[(frame["date"] >= lo) & (frame["date"] <= hi)]
    if len(frame) == 0:
        raise ValueError("no data in window")

    products = product_order(frame)
    grid = _daily_grid(frame, products, days)
    entry = (grid != 0).sum(axis=2)
    for i in range(len(products)):
        grid[i, 0] = _fill_price(grid[i, 0])

    labels = [(p, v) for p in products for v in VARIABLES]
    return PanelSeries(labels, grid.reshape(len(labels), len(days)), days,
                       entry.reshape(-1))


def entry_day_counts(panel: PanelSeries) -> dict[tuple[str, str], int]:
    if panel.entry_days is None:
        counts = (panel.values != 0).sum(axis=1)
    else:
        counts = panel.entry_days
    return {lab: int(c) for lab, c in zip(panel.labels, counts)}


def filter_sparse(panel: PanelSeries, counts=None, min_days: int = 51) -> PanelSeries:
    """Keep series with at least ``min_days`` days of entry, in label order."""
    if min_days < 1:
        raise ValueError("min_days must be >= 1")
    if counts is None:
        counts = entry_day_counts(panel)
    keep = [i for i, lab in enumerate(panel.labels) if counts[lab] >= min_days]
    if not keep:
        raise ValueError("empty panel after filtering")
    return panel.select(keep)


def standardize(panel: PanelSeries) -> PanelSeries:
    """Zero mean, unit population standard deviation per row."""
    x = panel.values
    mean = x.mean(axis=1, keepdims=True)
    centred = x - mean
    sd = np.sqrt((centred ** 2).mean(axis=1))
    scale = np.abs(x).max(axis=1)
    bad = np.flatnonzero(sd <= 1e-12 * np.maximum(scale, 1.0))
    if bad.size:
        raise ValueError(f"constant series cannot be standardized: "
                         f"{[panel.labels[i] for i in bad]}")
    return replace(panel, values=centred / sd[:, None])


def ranksize_fit(totals, cutoff: float = 0.0) -> tuple[float, float]:
    """Fit ``log(rank) = a + b log(total)`` over totals above ``cutoff``.

    Returns the slope ``b`` (the rank-size exponent) and the R^2 of the fit.
    """
    if isinstance(totals, Mapping):
        totals = list(totals.values())
    t = np.sort(np.asarray(totals, dtype=float))[::-1]
    t = t[t > cutoff]
    t = t[t > 0]
    if t.size < 3:
        raise ValueError("rank-size fit needs at least 3 positive totals")
    x = np.log(t)
    if np.ptp(x) == 0:
        raise ValueError("rank-size fit is degenerate: all totals are equal")
    y = np.log(np.arange(1, t.size + 1))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (intercept + slope * x)
    r2 = 1.0 - (resid ** 2).sum() / ((y - y.mean()) ** 2).sum()
    return float(slope), float(r2)
