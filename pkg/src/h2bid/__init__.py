"""Day-ahead bid curves for a grid-connected electrolyzer under hourly temporal matching."""

__version__ = "0.1.0"

from .economics import EconomicParams, gray_value, green_value
from .scenarios import (ErrorPool, HourRecord, ScenarioSet, build_error_pool, hour_seed,
                        sample_scenario_set)
from .bidcurve import (BidCurve, QuantityDecision, clear_price_taker, expected_profit,
                       optimal_quantity_oracle, perfect_info_curve, point_forecast_curve,
                       scenario_curve)
from .clearing import AggregateCurve, ClearingOutcome, clear, insert_bid, price_impact
from .settlement import SettlementResult, YearSummary, aggregate_results, settle_hour
from .dataio import Dataset, load_aggregate_curves, load_hourly, write_outputs
from .backtest import (BacktestConfig, run_backtest, run_price_impact_study, sweep_hydrogen_prices,
                       sweep_scenario_count)

__all__ = [
    "EconomicParams", "gray_value", "green_value",
    "ErrorPool", "HourRecord", "ScenarioSet", "build_error_pool", "hour_seed", "sample_scenario_set",
    "BidCurve", "QuantityDecision", "clear_price_taker", "expected_profit", "optimal_quantity_oracle",
    "perfect_info_curve", "point_forecast_curve", "scenario_curve",
    "AggregateCurve", "ClearingOutcome", "clear", "insert_bid", "price_impact",
    "SettlementResult", "YearSummary", "aggregate_results", "settle_hour",
    "Dataset", "load_aggregate_curves", "load_hourly", "write_outputs",
    "BacktestConfig", "run_backtest", "run_price_impact_study", "sweep_hydrogen_prices",
    "sweep_scenario_count",
]
