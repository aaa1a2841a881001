"""CSV ingestion of hourly market/wind data and aggregate curves; result files.

Input schemas (UTF-8, header row, dot decimals, ISO-8601 UTC timestamps)::

    prices.csv  timestamp_utc, price_eur_mwh
    wind.csv    timestamp_utc, forecast_mwh, realized_mwh
    curves.csv  timestamp_utc, side, price_eur_mwh, quantity_mwh
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .clearing import DEMAND, SUPPLY, AggregateCurve, ClearingError
from .scenarios import HourRecord

PRICE_COLUMNS = ("timestamp_utc", "price_eur_mwh")
WIND_COLUMNS = ("timestamp_utc", "forecast_mwh", "realized_mwh")
CURVE_COLUMNS = ("timestamp_utc", "side", "price_eur_mwh", "quantity_mwh")

HOURLY_COLUMNS = ("timestamp_utc", "method", "lambda_da", "q_mwh", "realized_mwh",
                  "green_mwh", "gray_mwh", "profit_eur")
SWEEP_N_COLUMNS = ("n_scenarios", "repeat", "seed", "profit_eur", "perfect_profit_eur", "ratio")
SWEEP_PRICES_COLUMNS = ("pi_gray", "pi_green", "method", "profit_eur", "ratio", "green_share")
PRICE_IMPACT_COLUMNS = ("capacity_mw", "rank", "timestamp_utc", "delta_price_eur_mwh")
CURVE_DUMP_COLUMNS = ("timestamp_utc", "method", "step", "price_eur_mwh", "q_upto_mwh")
PROFIT_DURATION_COLUMNS = ("method", "rank", "profit_eur")
CUMULATIVE_GRAY_COLUMNS = ("timestamp_utc", "method", "cumulative_gray_mwh")

OUTPUT_FILES = {
    "hourly_results.csv": HOURLY_COLUMNS,
    "sweep_n.csv": SWEEP_N_COLUMNS,
    "sweep_prices.csv": SWEEP_PRICES_COLUMNS,
    "price_impact.csv": PRICE_IMPACT_COLUMNS,
    "curve_dump.csv": CURVE_DUMP_COLUMNS,
    "profit_duration.csv": PROFIT_DURATION_COLUMNS,
    "cumulative_gray.csv": CUMULATIVE_GRAY_COLUMNS,
}


class LoadError(Exception):
    """Input data could not be read or failed validation."""


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def format_ts(ts) -> str:
    return pd.Timestamp(ts).tz_convert("UTC").strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class Dataset:
    """Time-ordered hourly prices and (rescaled) wind data."""

    timestamps: pd.DatetimeIndex
    price: np.ndarray
    forecast: np.ndarray
    realized: np.ndarray
    res_capacity: float
    provenance: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        ts = pd.DatetimeIndex(self.timestamps)
        ts = ts.tz_localize("UTC") if ts.tz is None else ts.tz_convert("UTC")
        arrays = [np.array(a, dtype=float) for a in (self.price, self.forecast, self.realized)]
        if any(a.shape != (len(ts),) for a in arrays):
            raise LoadError("timestamp and value columns differ in length")
        if len(ts) > 1 and not ts.is_monotonic_increasing or not ts.is_unique:
            raise LoadError("timestamps must be strictly increasing")
        if np.any(arrays[1] < 0) or np.any(arrays[2] < 0):
            raise LoadError("wind forecast and realization must be non-negative")
        for a in arrays:
            a.flags.writeable = False
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "price", arrays[0])
        object.__setattr__(self, "forecast", arrays[1])
        object.__setattr__(self, "realized", arrays[2])
        object.__setattr__(self, "res_capacity", float(self.res_capacity))

    def __len__(self):
        return len(self.timestamps)

    @classmethod
    def from_records(cls, records, res_capacity: float) -> "Dataset":
        records = list(records)
        return cls(
            pd.DatetimeIndex([pd.Timestamp(r.t) for r in records]),
            [r.lambda_da for r in records],
            [r.forecast for r in records],
            [r.realized for r in records],
            res_capacity,
        )

    def records(self) -> list:
        return [HourRecord(t.to_pydatetime(), float(p), float(f), float(r))
                for t, p, f, r in zip(self.timestamps, self.price, self.forecast, self.realized)]

    def index_of(self, timestamp) -> int:
        ts = pd.Timestamp(timestamp)
        ts = ts.tz_localize("UTC") if ts.tz is None else ts.tz_convert("UTC")
        try:
            return int(self.timestamps.get_loc(ts))
        except KeyError:
            raise KeyError(f"no hour {format_ts(ts)} in dataset") from None

    def start_index(self, eval_start) -> int:
        """First hour at or after ``eval_start`` (0 when ``None``)."""
        if eval_start is None:
            return 0
        ts = pd.Timestamp(eval_start)
        ts = ts.tz_localize("UTC") if ts.tz is None else ts.tz_convert("UTC")
        return int(self.timestamps.searchsorted(ts, side="left"))


def _read_csv(path, columns) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise LoadError(f"input file not found: {path}")
    try:
        df = pd.read_csv(path, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise LoadError(f"{path}: cannot parse CSV ({exc})") from exc
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise LoadError(f"{path}: missing columns {missing}; found {list(df.columns)}")
    df = df[list(columns)].copy()
    try:
        df["timestamp_utc"] = pd.to_datetime(df["timestamp_utc"], utc=True, format="ISO8601")
    except (ValueError, TypeError) as exc:
        raise LoadError(f"{path}: unparseable timestamp ({exc})") from exc
    for c in columns:
        if c not in ("timestamp_utc", "side"):
            df[c] = pd.to_numeric(df[c], errors="coerce")
    return df


def _drop_nonfinite(df, cols, label, diag):
    ok = np.isfinite(df[list(cols)].to_numpy(dtype=float)).all(axis=1)
    diag[f"{label}_nonfinite_rows"] = int((~ok).sum())
    return df[ok]


def _check_duplicates(df, path):
    dup = df["timestamp_utc"].duplicated(keep=False)
    if dup.any():
        rows = (np.flatnonzero(dup.to_numpy()) + 2).tolist()[:10]
        raise LoadError(f"{path}: duplicate timestamps at CSV lines {rows}")


def load_hourly(prices_path, wind_path, scale_to_capacity: float | None = None) -> Dataset:
    """Join prices and wind on timestamp and rescale wind to the farm capacity.

    Wind columns are multiplied by ``scale_to_capacity / max(forecast, realized)``
    so the largest value in the file maps to the farm capacity.  Without a scale
    the data is used as-is and the RES capacity is the observed maximum.
    """
    diag = {}
    prices = _read_csv(prices_path, PRICE_COLUMNS)
    wind = _read_csv(wind_path, WIND_COLUMNS)
    _check_duplicates(prices, prices_path)
    _check_duplicates(wind, wind_path)
    prices = _drop_nonfinite(prices, ["price_eur_mwh"], "prices", diag)
    wind = _drop_nonfinite(wind, ["forecast_mwh", "realized_mwh"], "wind", diag)
    negative = (wind["forecast_mwh"] < 0) | (wind["realized_mwh"] < 0)
    if negative.any():
        raise LoadError(f"{wind_path}: negative wind values at CSV lines "
                        f"{(np.flatnonzero(negative.to_numpy()) + 2).tolist()[:10]}")

    merged = prices.merge(wind, on="timestamp_utc", how="inner").sort_values("timestamp_utc")
    diag["prices_unmatched_rows"] = int(len(prices) - len(merged))
    diag["wind_unmatched_rows"] = int(len(wind) - len(merged))
    if merged.empty:
        raise LoadError(f"no common timestamps between {prices_path} and {wind_path}")

    forecast = merged["forecast_mwh"].to_numpy(dtype=float)
    realized = merged["realized_mwh"].to_numpy(dtype=float)
    observed_max = float(max(forecast.max(), realized.max()))
    if scale_to_capacity is not None:
        if scale_to_capacity <= 0:
            raise LoadError("scale_to_capacity must be positive")
        factor = scale_to_capacity / observed_max if observed_max > 0 else 0.0
        forecast = forecast * factor
        realized = realized * factor
        res_capacity = float(scale_to_capacity)
    else:
        factor = 1.0
        res_capacity = observed_max
    diag["wind_scale_factor"] = factor

    ts = pd.DatetimeIndex(merged["timestamp_utc"])
    steps = np.diff(ts.asi8) if len(ts) > 1 else np.array([], dtype=np.int64)
    diag["gaps"] = int(np.sum(steps != 3600 * 10**9)) if steps.size else 0

    provenance = {"prices": file_digest(prices_path), "wind": file_digest(wind_path)}
    return Dataset(ts, merged["price_eur_mwh"].to_numpy(dtype=float), forecast, realized,
                   res_capacity, provenance, diag)


@dataclass
class AggregateCurveSet:
    hours: dict = field(default_factory=dict)
    dropped: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.hours)


def load_aggregate_curves(path) -> AggregateCurveSet:
    """Per-hour (supply, demand) pairs from a long-format curves file.

    Points are sorted by quantity before validation (supply ties by rising
    price, demand ties by falling price).  Hours with a missing side or a
    non-monotone curve are dropped and counted.
    """
    df = _read_csv(path, CURVE_COLUMNS)
    df["side"] = df["side"].astype(str).str.strip().str.lower()
    bad_side = ~df["side"].isin([SUPPLY, DEMAND])
    if bad_side.any():
        raise LoadError(f"{path}: unknown side values {sorted(set(df.loc[bad_side, 'side']))}")
    out = AggregateCurveSet(provenance={"curves": file_digest(path)})
    dropped = {"nonfinite_rows": 0, "incomplete_pair": 0, "non_monotone": 0}
    ok = np.isfinite(df[["price_eur_mwh", "quantity_mwh"]].to_numpy(dtype=float)).all(axis=1)
    dropped["nonfinite_rows"] = int((~ok).sum())
    df = df[ok]
    for ts, group in df.groupby("timestamp_utc", sort=True):
        sides = {}
        for side, pts in group.groupby("side"):
            price_key = pts["price_eur_mwh"] if side == SUPPLY else -pts["price_eur_mwh"]
            pts = pts.assign(_k=price_key).sort_values(["quantity_mwh", "_k"], kind="mergesort")
            sides[side] = pts
        if set(sides) != {SUPPLY, DEMAND}:
            dropped["incomplete_pair"] += 1
            continue
        try:
            pair = tuple(AggregateCurve(side, sides[side]["price_eur_mwh"].to_numpy(),
                                        sides[side]["quantity_mwh"].to_numpy())
                         for side in (SUPPLY, DEMAND))
        except ClearingError:
            dropped["non_monotone"] += 1
            continue
        out.hours[pd.Timestamp(ts)] = pair
    out.dropped = dropped
    return out


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------

@dataclass
class RunOutputs:
    """Plain rows for every result file; missing tables become header-only files."""

    summary: dict = field(default_factory=dict)
    hourly: list = field(default_factory=list)
    sweep_n: list = field(default_factory=list)
    sweep_prices: list = field(default_factory=list)
    price_impact: list = field(default_factory=list)
    curve_dump: list = field(default_factory=list)
    profit_duration: list = field(default_factory=list)
    cumulative_gray: list = field(default_factory=list)


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    if isinstance(v, pd.Timestamp):
        return format_ts(v)
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, pd.Timestamp):
        return format_ts(obj)
    if isinstance(obj, os.PathLike):
        return os.fspath(obj)
    return obj


def write_csv(path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])


def write_outputs(results: RunOutputs, out_dir) -> dict:
    """Write every result file into ``out_dir``; returns ``{name: path}``."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {}
        tables = {
            "hourly_results.csv": results.hourly,
            "sweep_n.csv": results.sweep_n,
            "sweep_prices.csv": results.sweep_prices,
            "price_impact.csv": results.price_impact,
            "curve_dump.csv": results.curve_dump,
            "profit_duration.csv": results.profit_duration,
            "cumulative_gray.csv": results.cumulative_gray,
        }
        for name, rows in tables.items():
            path = out_dir / name
            write_csv(path, OUTPUT_FILES[name], rows)
            paths[name] = path
        path = out_dir / "summary.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(_jsonable(results.summary), fh, indent=2, sort_keys=True, allow_nan=False)
            fh.write("\n")
        paths["summary.json"] = path
    except OSError as exc:
        raise OSError(f"cannot write results to {out_dir}: {exc}") from exc
    return paths


def read_hourly_results(path) -> pd.DataFrame:
    df = pd.read_csv(path, encoding="utf-8")
    df["timestamp_utc"] = pd.to_datetime(df["timestamp_utc"], utc=True, format="ISO8601")
    return df
