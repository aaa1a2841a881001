"""Stepwise price-quantity bid curves of the electrolyzer.

A curve is stored as consumer steps: strictly decreasing prices over strictly
increasing cumulative quantities, each step covering the half-open interval
``(previous q_upto, q_upto]``.  The scenario curve prices quantity ``q`` at
``eta * (pi_gray + pi_green * P(wind >= q))``, i.e. the expected marginal value
of hydrogen under the empirical distribution of the green signal.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .economics import EconomicParams, gray_value, green_value
from .scenarios import ScenarioSet

# absolute tolerance when comparing a market price with a step price, EUR/MWh
PRICE_ATOL = 1e-9

NO_BID = "no_bid"
PARTIAL_AT_SCENARIO = "partial_at_scenario"
PARTIAL_INTERIOR = "partial_interior"
MAX_CAPACITY = "max_capacity"


@dataclass(frozen=True)
class BidCurve:
    steps: tuple
    capacity: float

    def __post_init__(self):
        steps = tuple((float(p), float(q)) for p, q in self.steps)
        capacity = float(self.capacity)
        if capacity < 0:
            raise ValueError("capacity must be non-negative")
        if not steps:
            if capacity != 0.0:
                raise ValueError("an empty curve must have zero capacity")
        else:
            prices = [p for p, _ in steps]
            qs = [q for _, q in steps]
            if any(b >= a for a, b in zip(prices, prices[1:])):
                raise ValueError(f"step prices must be strictly decreasing: {prices}")
            if qs[0] <= 0 or any(b <= a for a, b in zip(qs, qs[1:])):
                raise ValueError(f"step quantities must be positive and strictly increasing: {qs}")
            if qs[-1] != capacity:
                raise ValueError(f"last step ends at {qs[-1]}, expected capacity {capacity}")
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "capacity", capacity)

    @classmethod
    def empty(cls) -> "BidCurve":
        return cls((), 0.0)

    @property
    def prices(self) -> np.ndarray:
        return np.array([p for p, _ in self.steps], dtype=float)

    @property
    def q_upto(self) -> np.ndarray:
        return np.array([q for _, q in self.steps], dtype=float)

    @property
    def step_lengths(self) -> np.ndarray:
        return np.diff(self.q_upto, prepend=0.0)

    def __len__(self):
        return len(self.steps)

    def write_csv(self, path_or_file, extra: dict | None = None):
        """Dump ``price, q_upto`` rows, optionally prefixed by constant columns."""
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
        try:
            extra = extra or {}
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([*extra, "price_eur_mwh", "q_upto_mwh"])
            for p, q in self.steps:
                writer.writerow([*extra.values(), repr(p), repr(q)])
        finally:
            if own:
                fh.close()


@dataclass(frozen=True)
class QuantityDecision:
    q: float
    case_tag: str


def _two_step_curve(level: float, params: EconomicParams) -> BidCurve:
    level = min(max(float(level), 0.0), params.p_h)
    if level <= 0.0:
        return BidCurve(((gray_value(params), params.p_h),), params.p_h)
    if level >= params.p_h:
        return BidCurve(((green_value(params), params.p_h),), params.p_h)
    return BidCurve(((green_value(params), level), (gray_value(params), params.p_h)), params.p_h)


def point_forecast_curve(forecast: float, params: EconomicParams) -> BidCurve:
    """Green value up to the forecast, gray value for the rest of the capacity."""
    if forecast < 0:
        raise ValueError("forecast must be non-negative")
    return _two_step_curve(forecast, params)


def perfect_info_curve(realized: float, params: EconomicParams) -> BidCurve:
    if realized < 0:
        raise ValueError("realized production must be non-negative")
    return _two_step_curve(realized, params)


def step_prices(probs, params: EconomicParams) -> np.ndarray:
    """Price of the step ending at each scenario: gray value plus the subsidy
    weighted by the probability that wind reaches at least that scenario."""
    tail = np.minimum(np.cumsum(np.asarray(probs, dtype=float)[::-1])[::-1], 1.0)
    return params.eta * (params.pi_gray + params.pi_green * tail)


def scenario_curve(scen: ScenarioSet, params: EconomicParams) -> BidCurve:
    values, probs = scen.as_arrays()
    if values[-1] > params.p_h:
        raise ValueError(f"scenario {values[-1]} exceeds capacity {params.p_h}; saturate first")
    prices = step_prices(probs, params)
    steps = [(p, v) for p, v in zip(prices.tolist(), values.tolist()) if v > 0.0]
    if values[-1] < params.p_h:
        steps.append((gray_value(params), params.p_h))
    return BidCurve(tuple(steps), params.p_h)


def clear_price_taker(curve: BidCurve, lambda_da: float) -> float:
    """Quantity bought at a given market price: every step priced at or above it."""
    q = 0.0
    for price, q_upto in curve.steps:
        if price >= lambda_da - PRICE_ATOL:
            q = q_upto
        else:
            break
    return q


def expected_profit(q: float, scen: ScenarioSet, lambda_da: float, params: EconomicParams) -> float:
    if not 0.0 <= q <= params.p_h:
        raise ValueError(f"quantity {q} outside [0, {params.p_h}]")
    lam_green = green_value(params)
    lam_gray = gray_value(params)
    value = 0.0
    for v, rho in zip(scen.values, scen.probs):
        value += rho * min(lam_green * q, lam_gray * q + params.eta * params.pi_green * v)
    return value - lambda_da * q


def _case_tag(q: float, scen: ScenarioSet, p_h: float) -> str:
    if q <= 0.0:
        return NO_BID
    if q >= p_h:
        return MAX_CAPACITY
    if q in scen.values:
        return PARTIAL_AT_SCENARIO
    return PARTIAL_INTERIOR


def optimal_quantity_oracle(scen: ScenarioSet, lambda_da: float, params: EconomicParams) -> QuantityDecision:
    """Brute-force maximiser of the expected profit over the curve's breakpoints.

    The objective is concave and piecewise linear in ``q`` with kinks only at
    the scenario values, so one of ``{0, P_1, ..., P_S, p_h}`` is optimal.  A
    larger breakpoint replaces the incumbent unless it is worse by more than
    ``PRICE_ATOL`` per MWh of extra purchase (largest optimal quantity wins).
    """
    points = sorted({0.0, params.p_h, *(min(v, params.p_h) for v in scen.values)})
    best_q = points[0]
    best = expected_profit(best_q, scen, lambda_da, params)
    for q in points[1:]:
        z = expected_profit(q, scen, lambda_da, params)
        if z - best >= -PRICE_ATOL * (q - best_q):
            best_q, best = q, z
    return QuantityDecision(best_q, _case_tag(best_q, scen, params.p_h))


def optimal_quantity_oracle_batch(scen: ScenarioSet, prices, params: EconomicParams) -> np.ndarray:
    """Same enumeration as :func:`optimal_quantity_oracle` for many prices at once."""
    prices = np.asarray(prices, dtype=float)
    points = sorted({0.0, params.p_h, *(min(v, params.p_h) for v in scen.values)})
    values = [expected_profit(q, scen, 0.0, params) for q in points]
    best_q = np.full(prices.shape, points[0])
    best = values[0] - prices * points[0]
    for q, v in zip(points[1:], values[1:]):
        z = v - prices * q
        take = z - best >= -PRICE_ATOL * (q - best_q)
        best_q = np.where(take, q, best_q)
        best = np.where(take, z, best)
    return best_q


def price_ranges(scen: ScenarioSet, params: EconomicParams) -> list:
    """Closed-form optimal-price interval for each candidate quantity.

    Returns ``(quantity, low, high)`` triples covering the vertical segments of
    the curve: ``q = 0``, every scenario strictly inside ``(0, p_h)`` and
    ``q = p_h``.  Bounds are infinite where the interval is unbounded.
    """
    values, probs = scen.as_arrays()
    lam_gray = gray_value(params)
    k = params.eta * params.pi_green
    S = len(values)
    out = []
    low0 = lam_gray + k * (1.0 - probs[0]) if values[0] == 0.0 else lam_gray + k
    out.append((0.0, low0, float("inf")))
    for s in range(S):
        if 0.0 < values[s] < params.p_h:
            out.append((values[s], lam_gray + k * float(np.sum(probs[s + 1:])),
                        lam_gray + k * float(np.sum(probs[s:]))))
    high_top = lam_gray + k * probs[-1] if values[-1] == params.p_h else lam_gray
    out.append((params.p_h, float("-inf"), high_top))
    return out


def curves_to_rows(curves: Iterable[tuple]) -> list:
    """Flatten ``(label dict, curve)`` pairs into dump rows."""
    rows = []
    for label, curve in curves:
        for i, (p, q) in enumerate(curve.steps):
            rows.append({**label, "step": i, "price_eur_mwh": p, "q_upto_mwh": q})
    return rows
