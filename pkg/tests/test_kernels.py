import os
import subprocess
import sys

import numpy as np
import pytest

from h2bid import _kernels

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")


def _random_batch(rng, hours=300):
    values, probs = [], []
    for _ in range(hours):
        v = np.round(rng.uniform(0, 50, rng.integers(1, 11)), 1)
        if rng.random() < 0.2:
            v[0] = 0.0
        if rng.random() < 0.2:
            v[-1] = 50.0
        v = np.unique(v)
        c = rng.integers(1, 4, v.size).astype(float)
        values.append(v)
        probs.append(c / c.sum())
    offsets = np.concatenate([[0], np.cumsum([v.size for v in values])]).astype(np.int64)
    lam = rng.uniform(-20, 150, hours)
    lam[::7] = 72.0
    return np.concatenate(values), np.concatenate(probs), offsets, lam


@needs_numba
def test_knn_backends_identical():
    rng = np.random.default_rng(0)
    f = np.round(rng.uniform(0, 66, 1500), 0)
    elig = f >= 66e-6
    for k in (1, 10, 50):
        a = _kernels.knn_pools_numba(f, elig, 0, f.size, k)
        b = _kernels.knn_pools_numpy(f, elig, 0, f.size, k)
        assert np.array_equal(a, b)


@needs_numba
def test_clearing_backends_identical():
    args = _random_batch(np.random.default_rng(1))
    a = _kernels.clear_scenario_batch_numba(*args, 18.0, 2.0, 4.0, 50.0, 1e-9)
    b = _kernels.clear_scenario_batch_numpy(*args, 18.0, 2.0, 4.0, 50.0, 1e-9)
    assert np.array_equal(a, b)


@needs_numba
def test_settlement_backends_identical():
    rng = np.random.default_rng(2)
    q, lam, r = rng.uniform(0, 50, 500), rng.uniform(-50, 200, 500), rng.uniform(0, 66, 500)
    a = _kernels.settle_batch_numba(q, lam, r, 18.0, 2.0, 4.0)
    b = _kernels.settle_batch_numpy(q, lam, r, 18.0, 2.0, 4.0)
    assert np.array_equal(a, b)


def test_env_flag_selects_numpy():
    env = dict(os.environ, H2BID_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from h2bid import _kernels; print(_kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_backtest_identical_across_backends(tmp_path, fixture_paths):
    code = ("import sys, numpy as np\n"
            "from h2bid.dataio import load_hourly\n"
            "from h2bid.backtest import run_methods, BacktestConfig\n"
            f"d = load_hourly({fixture_paths['prices']!r}, {fixture_paths['wind']!r}, 66.0)\n"
            "r = run_methods(d, BacktestConfig())\n"
            "np.save(sys.argv[1], np.stack([r[m].q for m in ('point', 'scenario', 'perfect')]))\n")
    outs = []
    for flag in ("0", "1"):
        path = tmp_path / f"q{flag}.npy"
        env = dict(os.environ, H2BID_DISABLE_NUMBA=flag)
        subprocess.run([sys.executable, "-c", code, str(path)], env=env, check=True)
        outs.append(np.load(path))
    assert np.array_equal(outs[0], outs[1])
