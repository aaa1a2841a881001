"""Hot loops of the backtest, compiled with numba when available.

Every kernel exists twice: a ``*_numba`` version (``@njit``) and a ``*_numpy``
version.  Both return bit-identical results; the module-level names without a
suffix point at the selected implementation.  Set ``H2BID_DISABLE_NUMBA=1`` to
force the numpy path (numba is also skipped when it is not installed).
"""
from __future__ import annotations

import os

import numpy as np


def _noop_jit(*args, **kwargs):
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def _numba_requested() -> bool:
    return os.environ.get("H2BID_DISABLE_NUMBA", "").strip().lower() not in ("1", "true", "yes", "on")


try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on the environment
    njit = _noop_jit
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _numba_requested()


# --------------------------------------------------------------------------
# K-nearest-forecast neighbour pools
# --------------------------------------------------------------------------

@njit(cache=True)
def knn_pools_numba(forecasts, eligible, start, stop, k):
    n_out = stop - start
    out = np.full((n_out, k), -1, dtype=np.int64)
    best_d = np.empty(k, dtype=np.float64)
    best_j = np.empty(k, dtype=np.int64)
    for row in range(n_out):
        t = start + row
        ft = forecasts[t]
        m = 0
        for j in range(t):
            if not eligible[j]:
                continue
            d = abs(forecasts[j] - ft)
            # j grows monotonically, so an equal distance means "more recent" and wins
            if m < k:
                pos = m
                m += 1
            elif d <= best_d[k - 1]:
                pos = k - 1
            else:
                continue
            while pos > 0 and best_d[pos - 1] >= d:
                best_d[pos] = best_d[pos - 1]
                best_j[pos] = best_j[pos - 1]
                pos -= 1
            best_d[pos] = d
            best_j[pos] = j
        for i in range(m):
            out[row, i] = best_j[i]
    return out


def _knn_single_numpy(forecasts, cand, ft, k):
    d = np.abs(forecasts[cand] - ft)
    if cand.size > k:
        thr = np.partition(d, k - 1)[k - 1]
        strict = d < thr
        need = k - int(strict.sum())
        ties = np.flatnonzero(d == thr)
        keep = strict.copy()
        keep[ties[ties.size - need:]] = True
        cand = cand[keep]
        d = d[keep]
    order = np.lexsort((-cand, d))
    return cand[order]


def knn_pools_numpy(forecasts, eligible, start, stop, k):
    forecasts = np.asarray(forecasts, dtype=np.float64)
    eligible = np.asarray(eligible, dtype=np.bool_)
    out = np.full((stop - start, k), -1, dtype=np.int64)
    elig_idx = np.flatnonzero(eligible)
    for row, t in enumerate(range(start, stop)):
        cand = elig_idx[: np.searchsorted(elig_idx, t)]
        if cand.size == 0:
            continue
        sel = _knn_single_numpy(forecasts, cand, forecasts[t], k)
        out[row, : sel.size] = sel
    return out


# --------------------------------------------------------------------------
# Price-taker clearing of batches of scenario curves
# --------------------------------------------------------------------------

@njit(cache=True)
def clear_scenario_batch_numba(values, probs, offsets, lam, eta, pi_gray, pi_green, p_h, tol):
    n = offsets.size - 1
    q = np.zeros(n, dtype=np.float64)
    for h in range(n):
        lo = offsets[h]
        hi = offsets[h + 1]
        # walk steps from the cheapest upward; the first accepted one from the top is the answer
        tail = 0.0
        accepted = 0.0
        if values[hi - 1] < p_h and eta * pi_gray >= lam[h] - tol:
            q[h] = p_h
            continue
        for i in range(hi - 1, lo - 1, -1):
            tail = tail + probs[i]
            frac = tail if tail < 1.0 else 1.0
            price = eta * (pi_gray + pi_green * frac)
            if values[i] > 0.0 and price >= lam[h] - tol:
                accepted = values[i]
                break
        q[h] = accepted
    return q


def clear_scenario_batch_numpy(values, probs, offsets, lam, eta, pi_gray, pi_green, p_h, tol):
    n = offsets.size - 1
    q = np.zeros(n, dtype=np.float64)
    lam_gray = eta * pi_gray
    for h in range(n):
        v = values[offsets[h]:offsets[h + 1]]
        if v[-1] < p_h and lam_gray >= lam[h] - tol:
            q[h] = p_h
            continue
        tail = np.minimum(np.cumsum(probs[offsets[h]:offsets[h + 1]][::-1])[::-1], 1.0)
        price = eta * (pi_gray + pi_green * tail)
        ok = np.flatnonzero((price >= lam[h] - tol) & (v > 0.0))
        q[h] = v[ok[-1]] if ok.size else 0.0
    return q


# --------------------------------------------------------------------------
# Vectorised settlement
# --------------------------------------------------------------------------

@njit(cache=True)
def settle_batch_numba(q, lam, realized, eta, pi_gray, pi_green):
    n = q.size
    out = np.empty((n, 5), dtype=np.float64)
    for i in range(n):
        green = q[i] if q[i] < realized[i] else realized[i]
        gray = q[i] - green
        value = eta * pi_gray * q[i] + eta * pi_green * green
        cost = lam[i] * q[i]
        out[i, 0] = green
        out[i, 1] = gray
        out[i, 2] = value
        out[i, 3] = cost
        out[i, 4] = value - cost
    return out


def settle_batch_numpy(q, lam, realized, eta, pi_gray, pi_green):
    green = np.minimum(q, realized)
    gray = q - green
    value = eta * pi_gray * q + eta * pi_green * green
    cost = lam * q
    return np.column_stack([green, gray, value, cost, value - cost])


if USE_NUMBA:
    knn_pools = knn_pools_numba
    clear_scenario_batch = clear_scenario_batch_numba
    settle_batch = settle_batch_numba
else:
    knn_pools = knn_pools_numpy
    clear_scenario_batch = clear_scenario_batch_numpy
    settle_batch = settle_batch_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"
