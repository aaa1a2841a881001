"""Merit-order clearing of aggregate supply and demand curves.

Aggregate curves are sampled points joined by straight lines.  Repeated
quantities form vertical segments, repeated prices flat ones.  A curve is
extended flat from quantity zero to its first point, and ends vertically at its
last point (supply rises to +inf, demand falls to -inf).

The traded volume is the largest quantity at which the highest demand price
still reaches the lowest supply price.  The clearing price is the midpoint of
the price interval the two curves share at that volume.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bidcurve import BidCurve

SUPPLY = "supply"
DEMAND = "demand"


class ClearingError(ValueError):
    """Raised for malformed curves or when a required clearing is infeasible."""


@dataclass(frozen=True)
class AggregateCurve:
    side: str
    prices: np.ndarray
    quantities: np.ndarray

    def __post_init__(self):
        if self.side not in (SUPPLY, DEMAND):
            raise ClearingError(f"side must be 'supply' or 'demand', got {self.side!r}")
        p = np.array(self.prices, dtype=float)
        q = np.array(self.quantities, dtype=float)
        if p.ndim != 1 or p.shape != q.shape or p.size == 0:
            raise ClearingError("prices and quantities must be equal-length non-empty vectors")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
            raise ClearingError("curve points must be finite")
        if q[0] < 0 or np.any(np.diff(q) < 0):
            raise ClearingError("quantities must be non-negative and non-decreasing")
        dp = np.diff(p)
        if self.side == SUPPLY and np.any(dp < 0):
            raise ClearingError("supply prices must be non-decreasing in quantity")
        if self.side == DEMAND and np.any(dp > 0):
            raise ClearingError("demand prices must be non-increasing in quantity")
        if q[0] > 0:
            p = np.insert(p, 0, p[0])
            q = np.insert(q, 0, 0.0)
        p.flags.writeable = False
        q.flags.writeable = False
        object.__setattr__(self, "prices", p)
        object.__setattr__(self, "quantities", q)

    @classmethod
    def from_points(cls, side: str, points) -> "AggregateCurve":
        pts = list(points)
        return cls(side, [p for p, _ in pts], [q for _, q in pts])

    @property
    def max_quantity(self) -> float:
        return float(self.quantities[-1])

    def points(self):
        return list(zip(self.prices.tolist(), self.quantities.tolist()))

    def price_range(self, q: float) -> tuple:
        """Lowest and highest price of the curve at quantity ``q``."""
        qs, ps = self.quantities, self.prices
        if q < 0 or q > qs[-1]:
            return (float("nan"), float("nan"))
        lo_i = int(np.searchsorted(qs, q, side="left"))
        hi_i = int(np.searchsorted(qs, q, side="right"))
        if hi_i > lo_i:
            group = ps[lo_i:hi_i]
            lo, hi = float(group.min()), float(group.max())
        else:
            lo = hi = self._interp(q, lo_i)
        if q == qs[-1]:
            if self.side == SUPPLY:
                hi = float("inf")
            else:
                lo = float("-inf")
        return lo, hi

    def right_limit(self, q: float) -> float:
        i = int(np.searchsorted(self.quantities, q, side="right"))
        if i == 0:
            return float(self.prices[0])
        if i == self.quantities.size:
            raise ClearingError("no right limit past the end of the curve")
        if self.quantities[i - 1] == q:
            return float(self.prices[i - 1])
        return self._interp(q, i)

    def left_limit(self, q: float) -> float:
        i = int(np.searchsorted(self.quantities, q, side="left"))
        if i == 0:
            return float(self.prices[0])
        if i < self.quantities.size and self.quantities[i] == q:
            return float(self.prices[i])
        return self._interp(q, i)

    def _interp(self, q, i):
        x0, x1 = self.quantities[i - 1], self.quantities[i]
        y0, y1 = self.prices[i - 1], self.prices[i]
        return float(y0 + (y1 - y0) * (q - x0) / (x1 - x0))


@dataclass(frozen=True)
class ClearingOutcome:
    price: float
    volume: float
    feasible: bool


def clear(supply: AggregateCurve, demand: AggregateCurve) -> ClearingOutcome:
    if supply.side != SUPPLY or demand.side != DEMAND:
        raise ClearingError("clear() expects a supply curve and a demand curve")
    q_max = min(supply.max_quantity, demand.max_quantity)
    s_lo, _ = supply.price_range(0.0)
    _, d_hi = demand.price_range(0.0)
    if d_hi < s_lo:
        return ClearingOutcome(float("nan"), 0.0, False)

    bps = np.union1d(supply.quantities, demand.quantities)
    bps = bps[bps < q_max]
    bps = np.append(bps, q_max)
    volume = q_max
    for a, b in zip(bps[:-1], bps[1:]):
        g_right = demand.right_limit(a) - supply.right_limit(a)
        if g_right < 0:
            volume = float(a)
            break
        g_left = demand.left_limit(b) - supply.left_limit(b)
        if g_left < 0:
            volume = float(a + (b - a) * g_right / (g_right - g_left))
            break
    s_lo, s_hi = supply.price_range(volume)
    d_lo, d_hi = demand.price_range(volume)
    lo = max(s_lo, d_lo)
    hi = min(s_hi, d_hi)
    return ClearingOutcome(0.5 * (lo + hi), volume, True)


def insert_bid(demand: AggregateCurve, bid: BidCurve) -> AggregateCurve:
    """Add the bid's steps to the demand curve at their prices.

    Segments of the demand curve are split wherever a bid price falls strictly
    inside their price span, then all pieces are ordered by price (highest
    first) and quantities re-accumulated.
    """
    if demand.side != DEMAND:
        raise ClearingError("bids can only be inserted into a demand curve")
    if len(bid) == 0:
        return demand
    bid_prices = bid.prices
    bid_lengths = bid.step_lengths

    qs = list(demand.quantities.tolist())
    ps = list(demand.prices.tolist())
    split_q, split_p = [qs[0]], [ps[0]]
    for i in range(1, len(qs)):
        top, bottom = ps[i - 1], ps[i]
        inner = sorted((b for b in bid_prices.tolist() if bottom < b < top), reverse=True)
        for b in inner:
            frac = (top - b) / (top - bottom)
            split_q.append(qs[i - 1] + frac * (qs[i] - qs[i - 1]))
            split_p.append(b)
        split_q.append(qs[i])
        split_p.append(ps[i])

    # (top, bottom, length, kind, demand end quantity)
    pieces = []
    for i in range(1, len(split_q)):
        pieces.append((split_p[i - 1], split_p[i], split_q[i] - split_q[i - 1], 0, split_q[i]))
    for b, length in zip(bid_prices.tolist(), bid_lengths.tolist()):
        pieces.append((b, b, length, 1, 0.0))
    pieces.sort(key=lambda pc: (-pc[0], -pc[1], pc[3]))

    out_q, out_p = [0.0], [max(ps[0], float(bid_prices[0]))]
    # quantities are always rebuilt as (demand so far) + (bid so far) so rounding stays monotone
    d_last = 0.0
    offset = 0.0
    for top, bottom, length, kind, d_end in pieces:
        if top < out_p[-1]:
            out_q.append(out_q[-1])
            out_p.append(top)
        if kind == 0:
            d_last = d_end
        else:
            offset += length
        out_q.append(d_last + offset)
        out_p.append(bottom)
    return AggregateCurve(DEMAND, out_p, out_q)


def price_impact(supply: AggregateCurve, demand: AggregateCurve, bid: BidCurve) -> float:
    """Rise of the clearing price caused by adding the bid to the demand side."""
    base = clear(supply, demand)
    if not base.feasible:
        raise ClearingError("the unmodified market does not clear")
    new = clear(supply, insert_bid(demand, bid))
    if not new.feasible:
        raise ClearingError("the market does not clear after inserting the bid")
    delta = new.price - base.price
    return 0.0 if abs(delta) < 1e-9 else delta
