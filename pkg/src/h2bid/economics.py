"""Hydrogen prices, electrolyzer efficiency and the two electricity-equivalent utilities."""
from __future__ import annotations

from dataclasses import dataclass, replace
from numbers import Real

# absolute tolerance for money comparisons, EUR
MONEY_ATOL = 1e-9


@dataclass(frozen=True)
class EconomicParams:
    """Economic and technical parameters of one electrolyzer.

    Attributes
    ----------
    eta : float
        Conversion efficiency in kg of hydrogen per MWh of electricity.
    pi_gray : float
        Market price of (gray) hydrogen, EUR/kg.
    pi_green : float
        Compliance subsidy paid on time-matched hydrogen, EUR/kg.
    p_h : float
        Electrolyzer capacity, MWh per hour.
    """

    eta: float = 18.0
    pi_gray: float = 2.0
    pi_green: float = 4.0
    p_h: float = 50.0

    def __post_init__(self):
        for name in ("eta", "pi_gray", "pi_green", "p_h"):
            value = getattr(self, name)
            if isinstance(value, bool) or not (isinstance(value, Real) and 0 < value < float("inf")):
                raise ValueError(f"{name} must be a finite positive number, got {value!r}")
            object.__setattr__(self, name, float(value))

    @property
    def lambda_gray(self) -> float:
        return gray_value(self)

    @property
    def lambda_green(self) -> float:
        return green_value(self)

    def with_(self, **changes) -> "EconomicParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {"eta": self.eta, "pi_gray": self.pi_gray, "pi_green": self.pi_green, "p_h": self.p_h}


def gray_value(params: EconomicParams) -> float:
    """Value of one MWh turned into unsubsidized hydrogen, EUR/MWh."""
    return params.eta * params.pi_gray


def green_value(params: EconomicParams) -> float:
    """Value of one MWh turned into time-matched hydrogen, EUR/MWh."""
    return params.eta * (params.pi_gray + params.pi_green)
