"""Discrete scenarios of the matching wind production.

Scenarios are built from the per-unit forecast errors of the ``k`` past hours
whose day-ahead forecasts were closest to the current one.  ``n - 1`` of those
errors are drawn without replacement and applied to the current forecast; the
point forecast itself is always kept as the last scenario.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Sequence

import numpy as np

from . import _kernels

# forecasts below this fraction of the RES capacity carry no usable per-unit error
ZERO_FORECAST_FLOOR = 1e-6
PROB_ATOL = 1e-12


@dataclass(frozen=True)
class HourRecord:
    t: datetime
    lambda_da: float
    forecast: float
    realized: float


@dataclass(frozen=True)
class ScenarioSet:
    """Unique, increasing green-signal levels with their probabilities."""

    values: tuple
    probs: tuple

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        probs = tuple(float(p) for p in self.probs)
        if not values or len(values) != len(probs):
            raise ValueError("values and probs must be non-empty and of equal length")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError(f"scenario values must be strictly increasing: {values}")
        if values[0] < 0:
            raise ValueError("scenario values must be non-negative")
        if any(not (0.0 < p <= 1.0) for p in probs):
            raise ValueError(f"probabilities must lie in (0, 1]: {probs}")
        if abs(sum(probs) - 1.0) > PROB_ATOL:
            raise ValueError(f"probabilities must sum to one, got {sum(probs)!r}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)

    def __len__(self):
        return len(self.values)

    @classmethod
    def single(cls, value: float) -> "ScenarioSet":
        return cls((value,), (1.0,))

    def as_arrays(self):
        return np.asarray(self.values, dtype=float), np.asarray(self.probs, dtype=float)


@dataclass(frozen=True)
class ErrorPool:
    errors: tuple = ()
    source_hours: tuple = ()

    def __len__(self):
        return len(self.errors)


def eligible_mask(forecasts, res_capacity: float) -> np.ndarray:
    """Hours whose forecast is large enough to define a per-unit error."""
    return np.asarray(forecasts, dtype=float) >= ZERO_FORECAST_FLOOR * res_capacity


def per_unit_errors(forecasts, realized, idx) -> np.ndarray:
    forecasts = np.asarray(forecasts, dtype=float)
    realized = np.asarray(realized, dtype=float)
    idx = np.asarray(idx, dtype=np.int64)
    return (realized[idx] - forecasts[idx]) / forecasts[idx]


def build_error_pool(history: Sequence[HourRecord], t: int, k: int,
                     res_capacity: float | None = None) -> ErrorPool:
    """Per-unit errors of the ``k`` past hours with forecasts closest to hour ``t``.

    Only hours ``j < t`` are candidates.  Ties in forecast distance go to the
    more recent hour.  Returns an empty pool when nothing is eligible.
    """
    if not 0 <= t < len(history):
        raise IndexError(f"hour index {t} outside history of length {len(history)}")
    if k < 1:
        raise ValueError("k must be at least 1")
    forecasts = np.array([h.forecast for h in history], dtype=float)
    realized = np.array([h.realized for h in history], dtype=float)
    if res_capacity is None:
        res_capacity = float(max(forecasts.max(), realized.max(), 0.0))
    eligible = eligible_mask(forecasts, res_capacity)
    idx = _kernels.knn_pools(forecasts, eligible, t, t + 1, k)[0]
    idx = idx[idx >= 0]
    return ErrorPool(tuple(per_unit_errors(forecasts, realized, idx).tolist()), tuple(idx.tolist()))


def hour_seed(base_seed: int, hour_index: int) -> int:
    """Seed of the sampling stream for one hour, independent of processing order."""
    return int(np.random.SeedSequence([int(base_seed), int(hour_index)]).generate_state(1)[0])


def sample_scenario_set(pool: ErrorPool, forecast: float, n: int, rng_seed: int,
                        res_capacity: float, p_h: float) -> ScenarioSet:
    if n < 1:
        raise ValueError("n must be at least 1")
    if forecast < 0:
        raise ValueError("forecast must be non-negative")
    errors = np.asarray(pool.errors, dtype=float)
    m = min(n - 1, errors.size)
    if forecast < ZERO_FORECAST_FLOOR * res_capacity:
        m = 0
    if m > 0:
        rng = np.random.default_rng(rng_seed)
        drawn = errors[rng.choice(errors.size, size=m, replace=False)]
        candidates = np.append(forecast * (1.0 + drawn), forecast)
    else:
        candidates = np.array([forecast], dtype=float)
    candidates = np.minimum(np.clip(candidates, 0.0, res_capacity), p_h)
    values, counts = np.unique(candidates, return_counts=True)
    return ScenarioSet(tuple(values.tolist()), tuple((counts / candidates.size).tolist()))
