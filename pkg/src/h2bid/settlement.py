"""Ex-post accounting of cleared hours."""
from __future__ import annotations

import math

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .economics import EconomicParams


@dataclass(frozen=True)
class SettlementResult:
    q: float
    cost: float
    value: float
    profit: float
    green_mwh: float
    gray_mwh: float
    green_kg: float
    gray_kg: float


def settle_hour(q: float, lambda_da: float, realized: float, params: EconomicParams) -> SettlementResult:
    """Value the consumption ``q`` once the wind realization is known.

    Consumption up to the realized production earns the subsidy on top of the
    hydrogen price; the rest is gray.
    """
    if not math.isfinite(lambda_da):
        raise ValueError(f"price must be finite, got {lambda_da!r}")
    if not 0 <= q <= params.p_h:
        raise ValueError(f"quantity {q} outside [0, {params.p_h}]")
    if not realized >= 0:
        raise ValueError("realized production must be non-negative")
    green = min(q, realized)
    gray = q - green
    value = params.eta * params.pi_gray * q + params.eta * params.pi_green * green
    cost = lambda_da * q
    return SettlementResult(
        q=q, cost=cost, value=value, profit=value - cost,
        green_mwh=green, gray_mwh=gray,
        green_kg=params.eta * green, gray_kg=params.eta * gray,
    )


@dataclass(frozen=True)
class YearSummary:
    n_hours: int = 0
    total_profit: float = 0.0
    total_cost: float = 0.0
    total_value: float = 0.0
    q_mwh: float = 0.0
    green_mwh: float = 0.0
    gray_mwh: float = 0.0
    green_t: float = 0.0
    gray_t: float = 0.0
    cumulative_gray_mwh: tuple = field(default=(), repr=False)

    @property
    def total_t(self) -> float:
        return self.green_t + self.gray_t

    @property
    def green_share(self) -> float:
        return self.green_t / self.total_t if self.total_t > 0 else 0.0

    @property
    def gray_share(self) -> float:
        return self.gray_t / self.total_t if self.total_t > 0 else 0.0

    def to_dict(self) -> dict:
        return {
            "n_hours": self.n_hours,
            "total_profit_eur": self.total_profit,
            "total_cost_eur": self.total_cost,
            "total_value_eur": self.total_value,
            "q_mwh": self.q_mwh,
            "green_mwh": self.green_mwh,
            "gray_mwh": self.gray_mwh,
            "green_t": self.green_t,
            "gray_t": self.gray_t,
            "total_t": self.total_t,
            "green_share": self.green_share,
            "gray_share": self.gray_share,
        }


def aggregate_results(hours: Sequence[SettlementResult]) -> YearSummary:
    if len(hours) == 0:
        return YearSummary()
    cols = np.array([(h.profit, h.cost, h.value, h.q, h.green_mwh, h.gray_mwh, h.green_kg, h.gray_kg)
                     for h in hours], dtype=float)
    return summarize_columns(*cols.T)


def summarize_columns(profit, cost, value, q, green_mwh, gray_mwh, green_kg, gray_kg) -> YearSummary:
    """Fold per-hour columns (already in timestamp order) into a summary."""
    gray_mwh = np.asarray(gray_mwh, dtype=float)
    if gray_mwh.size == 0:
        return YearSummary()
    return YearSummary(
        n_hours=int(gray_mwh.size),
        total_profit=float(np.sum(profit)),
        total_cost=float(np.sum(cost)),
        total_value=float(np.sum(value)),
        q_mwh=float(np.sum(q)),
        green_mwh=float(np.sum(green_mwh)),
        gray_mwh=float(np.sum(gray_mwh)),
        green_t=float(np.sum(green_kg)) / 1000.0,
        gray_t=float(np.sum(gray_kg)) / 1000.0,
        cumulative_gray_mwh=tuple(np.cumsum(gray_mwh).tolist()),
    )
