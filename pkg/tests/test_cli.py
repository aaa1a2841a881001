import hashlib
import json
import subprocess
import sys

import pytest

from h2bid.cli import main


def _digests(d):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(d.iterdir())}


@pytest.fixture
def io_args(fixture_paths):
    return ["--prices", fixture_paths["prices"], "--wind", fixture_paths["wind"]]


def test_help_exits_zero():
    out = subprocess.run([sys.executable, "-m", "h2bid", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("curve", "backtest", "sweep-n", "sweep-prices", "price-impact"):
        assert cmd in out.stdout


def test_backtest_writes_three_methods(tmp_path, io_args, capsys):
    assert main(["backtest", *io_args, "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert set(summary["methods"]) == {"point", "scenario", "perfect"}
    assert summary["relative_to_perfect"]["perfect"]["profit_ratio"] == 1.0
    assert summary["config"]["k_pool"] == 50 and "workers" not in summary["config"]
    assert (tmp_path / "hourly_results.csv").read_text().count("\n") == 1 + 3 * 600
    assert "scenario" in capsys.readouterr().out


def test_backtest_is_deterministic(tmp_path, io_args):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["backtest", *io_args, "--out", str(a), "--seed", "7"]) == 0
    assert main(["backtest", *io_args, "--out", str(b), "--seed", "7", "--workers", "3"]) == 0
    assert _digests(a) == _digests(b)


def test_config_file_and_flag_precedence(tmp_path, io_args):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_scenarios": 3, "method": "scenario", "seed": 4}))
    assert main(["backtest", *io_args, "--config", str(cfg), "--seed", "9", "--out", str(tmp_path / "o")]) == 0
    echo = json.loads((tmp_path / "o" / "summary.json").read_text())["config"]
    assert echo["n_scenarios"] == 3 and echo["base_seed"] == 9 and echo["methods"] == ["scenario"]


def test_curve_prints_steps(io_args, capsys):
    assert main(["curve", *io_args, "--timestamp", "2023-01-05T12:00:00Z", "--method", "point"]) == 0
    out = capsys.readouterr().out
    assert "point curve" in out and "2023-01-05T12:00:00Z,point,0," in out


def test_sweeps_and_price_impact(tmp_path, io_args, fixture_paths):
    assert main(["sweep-n", *io_args, "--out", str(tmp_path / "n"), "--n-values", "1,3",
                 "--repeats", "2"]) == 0
    assert (tmp_path / "n" / "sweep_n.csv").read_text().count("\n") == 5
    assert main(["sweep-prices", *io_args, "--out", str(tmp_path / "p"), "--gray-grid", "2",
                 "--green-grid", "2,4"]) == 0
    assert (tmp_path / "p" / "sweep_prices.csv").read_text().count("\n") == 7
    assert main(["price-impact", *io_args, "--curves", fixture_paths["curves"],
                 "--out", str(tmp_path / "i")]) == 0
    s = json.loads((tmp_path / "i" / "summary.json").read_text())
    assert s["price_impact"]["capacities_mw"] == [10.0, 50.0, 100.0]


def test_missing_input_exits_nonzero(tmp_path, fixture_paths, capsys):
    code = main(["backtest", "--prices", str(tmp_path / "missing.csv"), "--wind", fixture_paths["wind"],
                 "--out", str(tmp_path)])
    assert code == 2
    assert "missing.csv" in capsys.readouterr().err


@pytest.mark.parametrize("extra", [["--method", "magic"], ["--n-scenarios", "0"], ["--eta", "-1"],
                                   ["--n-scenarios", "abc"]])
def test_bad_options_exit_one(tmp_path, io_args, extra):
    with pytest.raises(SystemExit) as exc:
        code = main(["backtest", *io_args, "--out", str(tmp_path), *extra])
        raise SystemExit(code)
    assert exc.value.code == 1


def test_missing_required_inputs(tmp_path, io_args):
    assert main(["backtest", "--out", str(tmp_path)]) == 1
    assert main(["backtest", *io_args]) == 1
    assert main(["price-impact", *io_args, "--out", str(tmp_path)]) == 1
    assert main(["curve", *io_args]) == 1


def test_unknown_timestamp(io_args):
    assert main(["curve", *io_args, "--timestamp", "1999-01-01T00:00:00Z"]) == 2
