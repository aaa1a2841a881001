"""Command-line entry point.

Subcommands: ``curve``, ``backtest``, ``sweep-n``, ``sweep-prices``,
``price-impact``.  Exit status is 0 on success, 1 on usage or configuration
errors and 2 when input data cannot be loaded.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .backtest import (METHODS, BacktestConfig, cumulative_gray_rows, curve_for_hour, hourly_rows,
                       profit_duration_rows, run_methods, run_price_impact_study, sweep_hydrogen_prices,
                       sweep_scenario_count)
from .bidcurve import curves_to_rows
from .dataio import LoadError, RunOutputs, format_ts, load_aggregate_curves, load_hourly, write_outputs
from .economics import EconomicParams

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

DEFAULTS = {
    "prices": None, "wind": None, "curves": None, "out": None,
    "method": ",".join(METHODS), "n_scenarios": 10, "k_pool": 50, "seed": 0,
    "eta": 18.0, "pi_gray": 2.0, "pi_green": 4.0, "capacity": 50.0, "res_capacity": 66.0,
    "eval_start": None, "workers": 1, "timestamp": None,
    "n_values": "1,2,3,5,10,15,20", "repeats": 10,
    "gray_grid": "1,2,3,4", "green_grid": "1,2,4,6",
    "capacities": "10,50,100",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    prices: str | None
    wind: str | None
    curves: str | None
    out: str | None
    methods: list
    backtest: BacktestConfig
    timestamp: str | None = None
    n_values: list = field(default_factory=list)
    repeats: int = 10
    gray_grid: list = field(default_factory=list)
    green_grid: list = field(default_factory=list)
    capacities: list = field(default_factory=list)

    def echo(self) -> dict:
        """Config as written to summary.json (worker count excluded: it never changes results)."""
        bt = self.backtest.to_dict()
        bt.pop("workers")
        bt.pop("method")
        d = {"command": self.command, "prices": self.prices, "wind": self.wind, "curves": self.curves,
             "methods": self.methods, **bt}
        if self.command == "sweep-n":
            d.update(n_values=self.n_values, repeats=self.repeats)
        if self.command == "sweep-prices":
            d.update(gray_grid=self.gray_grid, green_grid=self.green_grid)
        if self.command == "price-impact":
            d.update(capacities=self.capacities)
        return d


def _csv_list(text, conv, name):
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [x for x in str(text).split(",") if x.strip()]
    try:
        return [conv(x) for x in items]
    except ValueError:
        raise UsageError(f"--{name.replace('_', '-')}: cannot parse {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("inputs and outputs")
    g.add_argument("--config", help="JSON file with any of the options below (flags take precedence)")
    g.add_argument("--prices", help="prices.csv: timestamp_utc, price_eur_mwh")
    g.add_argument("--wind", help="wind.csv: timestamp_utc, forecast_mwh, realized_mwh")
    g.add_argument("--out", help="output directory")
    g = common.add_argument_group("bidding")
    g.add_argument("--method", help="comma-separated subset of point,scenario,perfect (default: all)")
    g.add_argument("--n-scenarios", type=int, help="scenarios per hour, N (default 10)")
    g.add_argument("--k-pool", type=int, help="neighbour error pool size, K (default 50)")
    g.add_argument("--seed", type=int, help="base seed of the scenario sampling (default 0)")
    g.add_argument("--eta", type=float, help="efficiency, kg/MWh (default 18)")
    g.add_argument("--pi-gray", type=float, help="hydrogen price, EUR/kg (default 2)")
    g.add_argument("--pi-green", type=float, help="time-matching subsidy, EUR/kg (default 4)")
    g.add_argument("--capacity", type=float, help="electrolyzer capacity, MW (default 50)")
    g.add_argument("--res-capacity", type=float,
                   help="wind farm capacity, MW; wind data is rescaled so its maximum equals it (default 66)")
    g.add_argument("--eval-start", help="first evaluated hour (ISO-8601); earlier hours only feed the pools")
    g.add_argument("--workers", type=int, help="threads for scenario sampling (default 1)")

    ap = _Parser(prog="h2bid", description="Electrolyzer day-ahead bid curves under hourly temporal matching.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("curve", parents=[common], help="print the bid curve of one hour")
    p.add_argument("--timestamp", help="hour to inspect (ISO-8601, UTC)")
    sub.add_parser("backtest", parents=[common], help="simulate a year of bidding for each method")
    p = sub.add_parser("sweep-n", parents=[common], help="profit versus number of scenarios")
    p.add_argument("--n-values", help="comma-separated scenario counts (default 1,2,3,5,10,15,20)")
    p.add_argument("--repeats", type=int, help="sampling repeats per count (default 10)")
    p = sub.add_parser("sweep-prices", parents=[common], help="sensitivity to hydrogen price and subsidy")
    p.add_argument("--gray-grid", help="comma-separated hydrogen prices, EUR/kg")
    p.add_argument("--green-grid", help="comma-separated subsidies, EUR/kg")
    p = sub.add_parser("price-impact", parents=[common], help="clearing-price change from the bid")
    p.add_argument("--curves", help="curves.csv: timestamp_utc, side, price_eur_mwh, quantity_mwh")
    p.add_argument("--capacities", help="comma-separated electrolyzer capacities, MW (default 10,50,100)")
    return ap


def resolve_config(args: argparse.Namespace) -> RunConfig:
    file_cfg = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise LoadError(f"config file not found: {path}")
        try:
            file_cfg = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(file_cfg, dict):
            raise UsageError(f"{path}: expected a JSON object")
        file_cfg = {k.replace("-", "_"): v for k, v in file_cfg.items()}
        unknown = sorted(set(file_cfg) - set(DEFAULTS))
        if unknown:
            raise UsageError(f"{path}: unknown keys {unknown}")

    def get(key):
        v = getattr(args, key, None)
        if v is not None:
            return v
        return file_cfg.get(key, DEFAULTS[key])

    methods = _csv_list(get("method"), str.strip, "method")
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise UsageError(f"--method: unknown method(s) {bad}; choose from {','.join(METHODS)}")
    try:
        params = EconomicParams(eta=float(get("eta")), pi_gray=float(get("pi_gray")),
                                pi_green=float(get("pi_green")), p_h=float(get("capacity")))
        bt = BacktestConfig(method=methods[0], n_scenarios=int(get("n_scenarios")), k_pool=int(get("k_pool")),
                            base_seed=int(get("seed")), params=params, res_capacity=float(get("res_capacity")),
                            eval_start=get("eval_start"), workers=int(get("workers")))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    cfg = RunConfig(args.command, get("prices"), get("wind"), get("curves"), get("out"), methods, bt,
                    timestamp=get("timestamp"))
    if args.command == "sweep-n":
        cfg.n_values = _csv_list(get("n_values"), int, "n_values")
        cfg.repeats = int(get("repeats"))
        if cfg.repeats < 1 or not cfg.n_values or min(cfg.n_values) < 1:
            raise UsageError("--n-values must be positive integers and --repeats at least 1")
    if args.command == "sweep-prices":
        cfg.gray_grid = _csv_list(get("gray_grid"), float, "gray_grid")
        cfg.green_grid = _csv_list(get("green_grid"), float, "green_grid")
        if not cfg.gray_grid or not cfg.green_grid or min(cfg.gray_grid + cfg.green_grid) <= 0:
            raise UsageError("price grids must be non-empty and strictly positive")
    if args.command == "price-impact":
        cfg.capacities = _csv_list(get("capacities"), float, "capacities")
        if not cfg.capacities or min(cfg.capacities) < 0:
            raise UsageError("--capacities must be non-negative numbers")
        if not cfg.curves:
            raise UsageError("price-impact needs --curves")
    if not cfg.prices or not cfg.wind:
        raise UsageError("--prices and --wind are required")
    if args.command == "curve" and not cfg.timestamp:
        raise UsageError("curve needs --timestamp")
    if args.command != "curve" and not cfg.out:
        raise UsageError(f"{args.command} needs --out")
    return cfg


def _base_summary(cfg: RunConfig, data) -> dict:
    return {"config": cfg.echo(), "data": {"provenance": data.provenance, "hours": len(data),
                                           "diagnostics": data.diagnostics,
                                           "first_hour": format_ts(data.timestamps[0]),
                                           "last_hour": format_ts(data.timestamps[-1])}}


def cmd_curve(cfg: RunConfig, data) -> int:
    try:
        t = data.index_of(cfg.timestamp)
    except (KeyError, ValueError) as exc:
        raise LoadError(str(exc).strip("'\"")) from None
    ts = format_ts(data.timestamps[t])
    labelled = []
    print(f"hour {ts}: price {data.price[t]:.2f} EUR/MWh, forecast {data.forecast[t]:.3f} MWh, "
          f"realized {data.realized[t]:.3f} MWh")
    for m in cfg.methods:
        curve = curve_for_hour(data, t, cfg.backtest.with_(method=m))
        labelled.append(({"timestamp_utc": ts, "method": m}, curve))
        print(f"\n{m} curve")
        print(f"  {'price EUR/MWh':>14}  {'q_upto MWh':>12}")
        for p, q in curve.steps:
            print(f"  {p:14.4f}  {q:12.4f}")
    rows = curves_to_rows(labelled)
    if cfg.out:
        summary = _base_summary(cfg, data)
        summary["curve"] = {m: list(c.steps) for (lab, c), m in zip(labelled, cfg.methods)}
        paths = write_outputs(RunOutputs(summary=summary, curve_dump=rows), cfg.out)
        print(f"\nwrote {paths['curve_dump.csv']}")
    else:
        print("\ntimestamp_utc,method,step,price_eur_mwh,q_upto_mwh")
        for r in rows:
            print(f"{r['timestamp_utc']},{r['method']},{r['step']},{r['price_eur_mwh']!r},{r['q_upto_mwh']!r}")
    return EXIT_OK


def cmd_backtest(cfg: RunConfig, data) -> int:
    results = run_methods(data, cfg.backtest, cfg.methods)
    summary = _base_summary(cfg, data)
    summary["methods"] = {m: r.summary_dict() for m, r in results.items()}
    if "perfect" in results and results["perfect"].summary.total_profit:
        perfect = results["perfect"].summary
        summary["relative_to_perfect"] = {
            m: {"profit_ratio": r.summary.total_profit / perfect.total_profit,
                "gray_increase": (r.summary.gray_mwh / perfect.gray_mwh - 1.0) if perfect.gray_mwh else None}
            for m, r in results.items()}
    out = RunOutputs(summary=summary)
    for r in results.values():
        out.hourly += hourly_rows(r)
        out.profit_duration += profit_duration_rows(r)
        out.cumulative_gray += cumulative_gray_rows(r)
    write_outputs(out, cfg.out)
    for m, r in results.items():
        s = r.summary
        print(f"{m:>9}: profit {s.total_profit:14.2f} EUR  green {s.green_t:10.2f} t  gray {s.gray_t:10.2f} t")
    return EXIT_OK


def cmd_sweep_n(cfg: RunConfig, data) -> int:
    res = sweep_scenario_count(data, cfg.backtest, cfg.n_values, cfg.repeats)
    summary = _base_summary(cfg, data)
    summary["sweep_n"] = res.summary_dict()
    write_outputs(RunOutputs(summary=summary, sweep_n=res.rows()), cfg.out)
    print(f"point forecast: {res.point_ratio:.4f} of perfect")
    for n, mean, lo, hi in zip(res.n_values, res.mean, res.low, res.high):
        print(f"N={n:3d}: mean {mean:.4f}  band [{lo:.4f}, {hi:.4f}]")
    return EXIT_OK


def cmd_sweep_prices(cfg: RunConfig, data) -> int:
    res = sweep_hydrogen_prices(data, cfg.backtest, cfg.gray_grid, cfg.green_grid)
    summary = _base_summary(cfg, data)
    summary["sweep_prices"] = res.summary_dict()
    write_outputs(RunOutputs(summary=summary, sweep_prices=res.rows()), cfg.out)
    for m in ("point", "scenario"):
        print(f"{m} profit ratio (rows: pi_gray {res.gray_grid}, cols: pi_green {res.green_grid})")
        for row in res.ratio[m]:
            print("  " + "  ".join(f"{x:7.4f}" for x in row))
    return EXIT_OK


def cmd_price_impact(cfg: RunConfig, data) -> int:
    curves = load_aggregate_curves(cfg.curves)
    res = run_price_impact_study(data, curves, cfg.capacities, cfg.backtest.params)
    summary = _base_summary(cfg, data)
    summary["data"]["provenance"].update(curves.provenance)
    summary["data"]["curves_dropped"] = curves.dropped
    summary["price_impact"] = res.summary_dict()
    write_outputs(RunOutputs(summary=summary, price_impact=res.rows()), cfg.out)
    if res.diagnostic:
        print(res.diagnostic, file=sys.stderr)
    for c in res.capacities:
        d = res.deltas[c]
        changed = int((d > 0).sum())
        print(f"{c:g} MW: price changed in {changed} of {len(d)} hours")
    return EXIT_OK


COMMANDS = {"curve": cmd_curve, "backtest": cmd_backtest, "sweep-n": cmd_sweep_n,
            "sweep-prices": cmd_sweep_prices, "price-impact": cmd_price_impact}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        data = load_hourly(cfg.prices, cfg.wind, scale_to_capacity=cfg.backtest.res_capacity)
        return COMMANDS[args.command](cfg, data)
    except UsageError as exc:
        print(f"h2bid: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LoadError as exc:
        print(f"h2bid: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"h2bid: I/O error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
