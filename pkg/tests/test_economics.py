import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from h2bid.economics import EconomicParams, gray_value, green_value

pos = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)


def test_base_values():
    p = EconomicParams()
    assert gray_value(p) == 36.0
    assert green_value(p) == 108.0
    assert p.lambda_gray == 36.0 and p.lambda_green == 108.0


def test_other_worked_values():
    assert gray_value(EconomicParams(eta=19, pi_gray=2)) == 38.0
    assert green_value(EconomicParams(eta=18, pi_gray=3, pi_green=2)) == 90.0


@pytest.mark.parametrize("field", ["eta", "pi_gray", "pi_green", "p_h"])
@pytest.mark.parametrize("bad", [0, -1.0, math.inf, math.nan, "3", True])
def test_rejects_non_positive(field, bad):
    with pytest.raises(ValueError):
        EconomicParams(**{field: bad})


def test_accepts_numpy_scalars():
    p = EconomicParams(eta=np.float64(18), p_h=np.int64(50))
    assert isinstance(p.p_h, float) and p.p_h == 50.0


def test_with_and_dict():
    p = EconomicParams().with_(pi_green=5.0)
    assert p.to_dict() == {"eta": 18.0, "pi_gray": 2.0, "pi_green": 5.0, "p_h": 50.0}


@given(pos, pos, pos)
def test_green_minus_gray_is_subsidy(eta, g, s):
    p = EconomicParams(eta=eta, pi_gray=g, pi_green=s)
    diff = green_value(p) - gray_value(p)
    assert green_value(p) > gray_value(p) > 0
    assert abs(diff - eta * s) <= 1e-12 * max(1.0, green_value(p))


@given(pos, pos, pos, pos)
def test_monotone_in_every_input(eta, g, s, bump):
    p = EconomicParams(eta=eta, pi_gray=g, pi_green=s)
    for field in ("eta", "pi_gray", "pi_green"):
        q = p.with_(**{field: getattr(p, field) + bump})
        assert green_value(q) >= green_value(p)
        assert gray_value(q) >= gray_value(p)
