"""Synthetic stand-ins for the market and wind inputs.

Used by the tests and the bundled fixtures; not a model of any real zone.
Run ``python -m h2bid.synthetic OUT_DIR`` to write ``prices.csv``,
``wind.csv`` and ``curves.csv``.
"""
from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np
import pandas as pd

from .dataio import Dataset, format_ts

# aggregate wind fleet size used for the raw (unscaled) wind columns
FLEET_MWH = 3500.0


def _wind_pu(n, rng):
    x = np.empty(n)
    x[0] = rng.normal()
    for t in range(1, n):
        x[t] = 0.97 * x[t - 1] + 0.25 * rng.normal()
    realized = 1.0 / (1.0 + np.exp(-1.4 * x))
    err = np.empty(n)
    err[0] = 0.0
    for t in range(1, n):
        err[t] = 0.8 * err[t - 1] + 0.06 * rng.normal()
    # realizations tend to exceed mid-to-high forecasts
    forecast = np.clip(realized - err - 0.03 * realized, 0.0, 1.0)
    return forecast, np.clip(realized, 0.0, 1.0)


def synthetic_frames(n_hours: int = 2000, seed: int = 0, start: str = "2023-01-01T00:00:00Z"):
    """Raw price and wind tables (wind in fleet MWh, not yet rescaled)."""
    rng = np.random.default_rng(seed)
    ts = pd.date_range(pd.Timestamp(start), periods=n_hours, freq="h")
    forecast, realized = _wind_pu(n_hours, rng)
    hour = np.asarray(ts.hour)
    daily = 18.0 * np.sin(2 * np.pi * (hour - 7) / 24.0)
    noise = np.empty(n_hours)
    noise[0] = 0.0
    for t in range(1, n_hours):
        noise[t] = 0.85 * noise[t - 1] + 9.0 * rng.normal()
    price = 78.0 + daily - 70.0 * (realized - 0.45) + noise
    spikes = rng.random(n_hours) < 0.01
    price[spikes] += rng.exponential(120.0, spikes.sum())
    price = np.round(np.clip(price, -60.0, 400.0), 2)
    stamps = [format_ts(t) for t in ts]
    prices = pd.DataFrame({"timestamp_utc": stamps, "price_eur_mwh": price})
    wind = pd.DataFrame({"timestamp_utc": stamps,
                         "forecast_mwh": np.round(forecast * FLEET_MWH, 3),
                         "realized_mwh": np.round(realized * FLEET_MWH, 3)})
    return prices, wind


def synthetic_dataset(n_hours: int = 2000, seed: int = 0, res_capacity: float = 66.0,
                      start: str = "2023-01-01T00:00:00Z") -> Dataset:
    prices, wind = synthetic_frames(n_hours, seed, start)
    f = wind["forecast_mwh"].to_numpy(float)
    r = wind["realized_mwh"].to_numpy(float)
    factor = res_capacity / max(f.max(), r.max())
    return Dataset(pd.to_datetime(prices["timestamp_utc"], utc=True), prices["price_eur_mwh"].to_numpy(float),
                   f * factor, r * factor, res_capacity, {"synthetic_seed": str(seed)})


def random_curve_pair(rng, anchor_price: float, n_points: int = 25):
    """Monotone (supply, demand) point lists that cross near ``anchor_price``."""
    volume = rng.uniform(2500.0, 4500.0)
    q_s = np.sort(rng.uniform(0.0, 1.6 * volume, n_points))
    q_s[0] = 0.0
    p_s = anchor_price + np.cumsum(rng.exponential(6.0, n_points)) - 6.0 * n_points * (volume / (1.6 * volume))
    p_s = np.maximum.accumulate(p_s)
    q_d = np.sort(rng.uniform(0.0, 1.5 * volume, n_points))
    q_d[0] = 0.0
    p_d = anchor_price + 6.0 * n_points * (volume / (1.5 * volume)) - np.cumsum(rng.exponential(6.0, n_points))
    p_d = np.minimum.accumulate(p_d)
    # a few flat stretches as in real bid ladders
    for p in (p_s, p_d):
        k = rng.integers(1, n_points - 1)
        p[k] = p[k - 1]
    return list(zip(p_s.tolist(), q_s.tolist())), list(zip(p_d.tolist(), q_d.tolist()))


def synthetic_curves(prices: pd.DataFrame, n_hours: int | None = None, seed: int = 0) -> pd.DataFrame:
    rng = np.random.default_rng(seed + 7919)
    rows = []
    take = prices if n_hours is None else prices.iloc[:n_hours]
    for ts, price in zip(take["timestamp_utc"], take["price_eur_mwh"]):
        supply, demand = random_curve_pair(rng, float(price))
        rows += [(ts, "supply", round(p, 4), round(q, 3)) for p, q in supply]
        rows += [(ts, "demand", round(p, 4), round(q, 3)) for p, q in demand]
    return pd.DataFrame(rows, columns=["timestamp_utc", "side", "price_eur_mwh", "quantity_mwh"])


def write_synthetic(out_dir, n_hours: int = 2000, seed: int = 0, curve_hours: int | None = 200) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prices, wind = synthetic_frames(n_hours, seed)
    curves = synthetic_curves(prices, curve_hours, seed)
    paths = {"prices": out_dir / "prices.csv", "wind": out_dir / "wind.csv", "curves": out_dir / "curves.csv"}
    prices.to_csv(paths["prices"], index=False, lineterminator="\n")
    wind.to_csv(paths["wind"], index=False, lineterminator="\n")
    curves.to_csv(paths["curves"], index=False, lineterminator="\n")
    return paths


def main(argv=None):
    ap = argparse.ArgumentParser(description="Write synthetic prices/wind/curves CSVs.")
    ap.add_argument("out_dir")
    ap.add_argument("--hours", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--curve-hours", type=int, default=200)
    args = ap.parse_args(argv)
    for name, path in write_synthetic(args.out_dir, args.hours, args.seed, args.curve_hours).items():
        print(f"{name}: {path}")


if __name__ == "__main__":
    main()
