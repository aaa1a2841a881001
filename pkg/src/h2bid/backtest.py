"""Year-long hourly simulation of the three bidding methods and the studies built on it."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from . import _kernels
from .bidcurve import (PRICE_ATOL, BidCurve, perfect_info_curve, point_forecast_curve,
                       scenario_curve)
from .clearing import ClearingError, price_impact
from .dataio import AggregateCurveSet, Dataset, format_ts
from .economics import EconomicParams, gray_value, green_value
from .scenarios import (ZERO_FORECAST_FLOOR, ErrorPool, ScenarioSet, hour_seed,
                        sample_scenario_set)
from .settlement import SettlementResult, YearSummary, summarize_columns

log = logging.getLogger(__name__)

POINT = "point"
SCENARIO = "scenario"
PERFECT = "perfect"
METHODS = (POINT, SCENARIO, PERFECT)


@dataclass(frozen=True)
class BacktestConfig:
    method: str = SCENARIO
    n_scenarios: int = 10
    k_pool: int = 50
    base_seed: int = 0
    params: EconomicParams = field(default_factory=EconomicParams)
    res_capacity: float = 66.0
    eval_start: object = None
    workers: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.n_scenarios < 1:
            raise ValueError("n_scenarios must be at least 1")
        if self.k_pool < 1:
            raise ValueError("k_pool must be at least 1")
        if not self.res_capacity > 0:
            raise ValueError("res_capacity must be positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    def with_(self, **changes) -> "BacktestConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "method": self.method, "n_scenarios": self.n_scenarios, "k_pool": self.k_pool,
            "base_seed": self.base_seed, "params": self.params.to_dict(),
            "res_capacity": self.res_capacity,
            "eval_start": None if self.eval_start is None else str(self.eval_start),
            "workers": self.workers,
        }


@dataclass(frozen=True)
class NeighbourPools:
    """Per-unit error pools for a contiguous block of evaluation hours."""

    start: int
    k: int
    res_capacity: float
    errors: np.ndarray   # (hours, k), NaN-padded
    sources: np.ndarray  # (hours, k), -1-padded

    def pool(self, t: int) -> ErrorPool:
        row = t - self.start
        idx = self.sources[row]
        keep = idx >= 0
        return ErrorPool(tuple(self.errors[row][keep].tolist()), tuple(idx[keep].tolist()))


def _valid_hours(data: Dataset) -> np.ndarray:
    return np.isfinite(data.price) & np.isfinite(data.forecast) & np.isfinite(data.realized)


def build_pools(data: Dataset, k: int, res_capacity: float, start: int = 0, stop: int | None = None) -> NeighbourPools:
    stop = len(data) if stop is None else stop
    forecast = np.nan_to_num(data.forecast, nan=-1.0)
    eligible = (forecast >= ZERO_FORECAST_FLOOR * res_capacity) & np.isfinite(data.realized)
    sources = _kernels.knn_pools(forecast, eligible, start, stop, k)
    errors = np.full(sources.shape, np.nan)
    has = sources >= 0
    idx = sources[has]
    errors[has] = (data.realized[idx] - data.forecast[idx]) / data.forecast[idx]
    return NeighbourPools(start, k, res_capacity, errors, sources)


def repeat_seed(base_seed: int, repeat: int) -> int:
    """Distinct base seed for one cross-validation repeat."""
    return int(np.random.SeedSequence([int(base_seed), 0x5EED, int(repeat)]).generate_state(1)[0])


@dataclass
class BacktestResult:
    method: str
    timestamps: pd.DatetimeIndex
    lambda_da: np.ndarray
    realized: np.ndarray
    q: np.ndarray
    green_mwh: np.ndarray
    gray_mwh: np.ndarray
    value: np.ndarray
    cost: np.ndarray
    profit: np.ndarray
    summary: YearSummary
    params: EconomicParams
    skipped: int = 0
    interest_range_hours: int = 0

    def __len__(self):
        return len(self.q)

    def settlement(self, i: int) -> SettlementResult:
        eta = self.params.eta
        return SettlementResult(float(self.q[i]), float(self.cost[i]), float(self.value[i]),
                                float(self.profit[i]), float(self.green_mwh[i]), float(self.gray_mwh[i]),
                                eta * float(self.green_mwh[i]), eta * float(self.gray_mwh[i]))

    def summary_dict(self) -> dict:
        d = self.summary.to_dict()
        d["skipped_hours"] = self.skipped
        d["interest_range_hours"] = self.interest_range_hours
        d["interest_range_share"] = self.interest_range_hours / len(self) if len(self) else 0.0
        d["negative_profit_hours"] = int(np.sum(self.profit < -PRICE_ATOL))
        return d


def _scenario_arrays(data: Dataset, hours: np.ndarray, cfg: BacktestConfig,
                     pools: NeighbourPools | None):
    """Flat (values, probs, offsets) for each hour's scenario set under ``cfg.method``."""
    p_h = cfg.params.p_h
    if cfg.method in (POINT, PERFECT):
        src = data.forecast if cfg.method == POINT else data.realized
        values = np.maximum(src[hours], 0.0)
        if cfg.method == POINT:
            # same clamp the sampler applies, so N=1 reproduces this exactly
            values = np.minimum(values, cfg.res_capacity)
        values = np.minimum(values, p_h)
        return values, np.ones(hours.size), np.arange(hours.size + 1, dtype=np.int64)
    if pools is None:
        pools = build_pools(data, cfg.k_pool, cfg.res_capacity, int(hours.min()), int(hours.max()) + 1)

    def work(chunk):
        out = []
        for t in chunk:
            s = sample_scenario_set(pools.pool(int(t)), float(data.forecast[t]), cfg.n_scenarios,
                                    hour_seed(cfg.base_seed, int(t)), cfg.res_capacity, p_h)
            out.append(s.as_arrays())
        return out

    if cfg.workers > 1 and hours.size > 1:
        chunks = np.array_split(hours, cfg.workers)
        with ThreadPoolExecutor(max_workers=cfg.workers) as ex:
            sets = [s for part in ex.map(work, chunks) for s in part]
    else:
        sets = work(hours)
    lengths = np.array([v.size for v, _ in sets], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
    values = np.concatenate([v for v, _ in sets]) if sets else np.zeros(0)
    probs = np.concatenate([p for _, p in sets]) if sets else np.zeros(0)
    return values, probs, offsets


def run_backtest(data: Dataset, cfg: BacktestConfig, pools: NeighbourPools | None = None) -> BacktestResult:
    """Bid, clear as a price taker and settle every hour of the evaluation window.

    Hours before ``cfg.eval_start`` only feed the neighbour pools.  Hours with a
    non-finite price or wind value are skipped and counted.
    """
    start = data.start_index(cfg.eval_start)
    valid = _valid_hours(data)
    hours = np.arange(start, len(data))
    skipped = int(np.sum(~valid[hours]))
    hours = hours[valid[hours]]
    params = cfg.params

    if hours.size:
        values, probs, offsets = _scenario_arrays(data, hours, cfg, pools)
        lam = np.ascontiguousarray(data.price[hours])
        q = _kernels.clear_scenario_batch(values, probs, offsets, lam, params.eta, params.pi_gray,
                                          params.pi_green, params.p_h, PRICE_ATOL)
        realized = np.ascontiguousarray(data.realized[hours])
        cols = _kernels.settle_batch(q, lam, realized, params.eta, params.pi_gray, params.pi_green)
    else:
        lam = realized = q = np.zeros(0)
        cols = np.zeros((0, 5))
    green, gray, value, cost, profit = (np.ascontiguousarray(c) for c in cols.T)
    summary = summarize_columns(profit, cost, value, q, green, gray, params.eta * green, params.eta * gray)
    in_range = (lam >= gray_value(params)) & (lam <= green_value(params))
    if skipped:
        log.warning("%s: skipped %d hours with missing values", cfg.method, skipped)
    return BacktestResult(cfg.method, data.timestamps[hours], lam, realized, q, green, gray, value,
                          cost, profit, summary, params, skipped, int(in_range.sum()))


def run_methods(data: Dataset, cfg: BacktestConfig, methods=METHODS,
                pools: NeighbourPools | None = None) -> dict:
    if SCENARIO in methods and pools is None:
        start = data.start_index(cfg.eval_start)
        pools = build_pools(data, cfg.k_pool, cfg.res_capacity, start)
    return {m: run_backtest(data, cfg.with_(method=m), pools) for m in methods}


def curve_for_hour(data: Dataset, t: int, cfg: BacktestConfig) -> BidCurve:
    """The bid curve the configured method submits for hour ``t``."""
    if not 0 <= t < len(data):
        raise IndexError(f"hour index {t} out of range")
    params = cfg.params
    if cfg.method == POINT:
        return point_forecast_curve(float(data.forecast[t]), params)
    if cfg.method == PERFECT:
        return perfect_info_curve(float(data.realized[t]), params)
    pools = build_pools(data, cfg.k_pool, cfg.res_capacity, t, t + 1)
    scen = sample_scenario_set(pools.pool(t), float(data.forecast[t]), cfg.n_scenarios,
                               hour_seed(cfg.base_seed, t), cfg.res_capacity, params.p_h)
    return scenario_curve(scen, params)


# --------------------------------------------------------------------------
# Sensitivity studies
# --------------------------------------------------------------------------

@dataclass
class SweepResult:
    n_values: list
    repeats: int
    seeds: list
    profits: np.ndarray   # (len(n_values), repeats)
    ratios: np.ndarray    # (len(n_values), repeats)
    perfect_profit: float
    point_profit: float

    @property
    def mean(self) -> np.ndarray:
        return self.ratios.mean(axis=1)

    @property
    def low(self) -> np.ndarray:
        return self.ratios.min(axis=1)

    @property
    def high(self) -> np.ndarray:
        return self.ratios.max(axis=1)

    @property
    def band_width(self) -> np.ndarray:
        return self.high - self.low

    @property
    def point_ratio(self) -> float:
        return self.point_profit / self.perfect_profit if self.perfect_profit else float("nan")

    def rows(self) -> list:
        return [{"n_scenarios": n, "repeat": r, "seed": self.seeds[r],
                 "profit_eur": float(self.profits[i, r]), "perfect_profit_eur": self.perfect_profit,
                 "ratio": float(self.ratios[i, r])}
                for i, n in enumerate(self.n_values) for r in range(self.repeats)]

    def summary_dict(self) -> dict:
        return {"n_values": list(self.n_values), "repeats": self.repeats,
                "mean_ratio": self.mean, "min_ratio": self.low, "max_ratio": self.high,
                "band_width": self.band_width, "point_ratio": self.point_ratio,
                "perfect_profit_eur": self.perfect_profit, "point_profit_eur": self.point_profit}


def sweep_scenario_count(data: Dataset, cfg: BacktestConfig, n_values, repeats: int) -> SweepResult:
    """Scenario-curve profit relative to perfect information for several N.

    Each repeat redraws the sampling step with its own seed; the neighbour pools
    are fixed by the data and shared.
    """
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    n_values = [int(n) for n in n_values]
    start = data.start_index(cfg.eval_start)
    pools = build_pools(data, cfg.k_pool, cfg.res_capacity, start)
    perfect = run_backtest(data, cfg.with_(method=PERFECT)).summary.total_profit
    point = run_backtest(data, cfg.with_(method=POINT)).summary.total_profit
    seeds = [repeat_seed(cfg.base_seed, r) for r in range(repeats)]
    profits = np.empty((len(n_values), repeats))
    for i, n in enumerate(n_values):
        for r, seed in enumerate(seeds):
            res = run_backtest(data, cfg.with_(method=SCENARIO, n_scenarios=n, base_seed=seed), pools)
            profits[i, r] = res.summary.total_profit
    ratios = profits / perfect if perfect else np.full_like(profits, np.nan)
    return SweepResult(n_values, repeats, seeds, profits, ratios, perfect, point)


@dataclass
class PriceSweepResult:
    gray_grid: list
    green_grid: list
    profit: dict        # method -> (len(gray), len(green))
    ratio: dict         # method -> profit / perfect profit
    green_share: dict   # method -> green hydrogen share

    def rows(self) -> list:
        rows = []
        for i, g in enumerate(self.gray_grid):
            for j, s in enumerate(self.green_grid):
                for m in METHODS:
                    rows.append({"pi_gray": g, "pi_green": s, "method": m,
                                 "profit_eur": float(self.profit[m][i, j]),
                                 "ratio": float(self.ratio[m][i, j]),
                                 "green_share": float(self.green_share[m][i, j])})
        return rows

    def summary_dict(self) -> dict:
        return {"gray_grid": list(self.gray_grid), "green_grid": list(self.green_grid),
                "ratio": {m: v for m, v in self.ratio.items()},
                "green_share": {m: v for m, v in self.green_share.items()}}


def sweep_hydrogen_prices(data: Dataset, cfg: BacktestConfig, gray_grid, green_grid) -> PriceSweepResult:
    gray_grid = [float(x) for x in gray_grid]
    green_grid = [float(x) for x in green_grid]
    if not gray_grid or not green_grid:
        raise ValueError("price grids must be non-empty")
    if min(gray_grid) <= 0 or min(green_grid) <= 0:
        raise ValueError("price grids must be strictly positive")
    start = data.start_index(cfg.eval_start)
    pools = build_pools(data, cfg.k_pool, cfg.res_capacity, start)
    shape = (len(gray_grid), len(green_grid))
    profit = {m: np.empty(shape) for m in METHODS}
    share = {m: np.empty(shape) for m in METHODS}
    for i, g in enumerate(gray_grid):
        for j, s in enumerate(green_grid):
            cell = cfg.with_(params=cfg.params.with_(pi_gray=g, pi_green=s))
            for m, res in run_methods(data, cell, METHODS, pools).items():
                profit[m][i, j] = res.summary.total_profit
                share[m][i, j] = res.summary.green_share
    perfect = profit[PERFECT]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = {m: np.where(perfect != 0, profit[m] / perfect, np.nan) for m in METHODS}
    return PriceSweepResult(gray_grid, green_grid, profit, ratio, share)


@dataclass
class PriceImpactResult:
    capacities: list
    deltas: dict       # capacity -> Δprice sorted descending
    timestamps: dict   # capacity -> timestamps in the same order
    n_hours: int
    skipped: dict = field(default_factory=dict)
    diagnostic: str = ""

    def rows(self) -> list:
        return [{"capacity_mw": c, "rank": k, "timestamp_utc": ts, "delta_price_eur_mwh": float(d)}
                for c in self.capacities
                for k, (ts, d) in enumerate(zip(self.timestamps[c], self.deltas[c]))]

    def summary_dict(self) -> dict:
        return {
            "capacities_mw": list(self.capacities),
            "hours_used": self.n_hours,
            "skipped": dict(self.skipped),
            "diagnostic": self.diagnostic,
            "hours_with_change": {str(c): int(np.sum(self.deltas[c] > 0)) for c in self.capacities},
            "median_delta": {str(c): float(np.median(self.deltas[c])) if len(self.deltas[c]) else None
                             for c in self.capacities},
            "max_delta": {str(c): float(np.max(self.deltas[c])) if len(self.deltas[c]) else None
                          for c in self.capacities},
        }


def run_price_impact_study(data: Dataset, curve_data: AggregateCurveSet, capacities,
                           params: EconomicParams | None = None) -> PriceImpactResult:
    """Clearing-price change from inserting a perfect-information bid per capacity.

    Hours without wind data, or whose aggregate curves do not clear, are
    skipped and counted.
    """
    params = params or EconomicParams()
    capacities = [float(c) for c in capacities]
    if any(c < 0 for c in capacities):
        raise ValueError("capacities must be non-negative")
    skipped = {"no_wind_data": 0, "infeasible": 0}
    deltas = {c: [] for c in capacities}
    stamps = {c: [] for c in capacities}
    n_hours = 0
    for ts in sorted(curve_data.hours):
        supply, demand = curve_data.hours[ts]
        try:
            t = data.index_of(ts)
        except KeyError:
            skipped["no_wind_data"] += 1
            continue
        realized = float(data.realized[t])
        if not np.isfinite(realized):
            skipped["no_wind_data"] += 1
            continue
        bids = {c: BidCurve.empty() if c == 0 else perfect_info_curve(realized, params.with_(p_h=c))
                for c in capacities}
        try:
            row = {c: price_impact(supply, demand, bids[c]) for c in capacities}
        except ClearingError:
            skipped["infeasible"] += 1
            continue
        n_hours += 1
        for c in capacities:
            deltas[c].append(row[c])
            stamps[c].append(ts)
    out_d, out_t = {}, {}
    for c in capacities:
        d = np.asarray(deltas[c], dtype=float)
        order = np.argsort(-d, kind="stable")
        out_d[c] = d[order]
        out_t[c] = [stamps[c][i] for i in order]
    diagnostic = "" if n_hours else "no usable hours: aggregate curves and wind data do not overlap or never clear"
    return PriceImpactResult(capacities, out_d, out_t, n_hours, skipped, diagnostic)


# --------------------------------------------------------------------------
# Plot-ready rows
# --------------------------------------------------------------------------

def hourly_rows(res: BacktestResult) -> list:
    return [{"timestamp_utc": format_ts(ts), "method": res.method, "lambda_da": float(l),
             "q_mwh": float(q), "realized_mwh": float(r), "green_mwh": float(g),
             "gray_mwh": float(gy), "profit_eur": float(p)}
            for ts, l, q, r, g, gy, p in zip(res.timestamps, res.lambda_da, res.q, res.realized,
                                             res.green_mwh, res.gray_mwh, res.profit)]


def profit_duration_rows(res: BacktestResult) -> list:
    return [{"method": res.method, "rank": k, "profit_eur": float(p)}
            for k, p in enumerate(np.sort(res.profit, kind="stable"))]


def cumulative_gray_rows(res: BacktestResult) -> list:
    return [{"timestamp_utc": format_ts(ts), "method": res.method, "cumulative_gray_mwh": float(c)}
            for ts, c in zip(res.timestamps, res.summary.cumulative_gray_mwh)]
