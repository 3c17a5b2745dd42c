"""Net present value of a waterflood rate schedule."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from .case import DAYS_PER_YEAR, Economics


def npv(oil, water, injection, economics: Economics, dt_days: float, to_stb: float = 1.0) -> float:
    """Discounted cash flow of per-step field rates.

    Step ``t`` (1-based) earns ``(oil*r_o - water*r_w - injection*r_i) * dt``
    discounted by ``(1 + b) ** (t * dt / 365)``. ``to_stb`` converts the
    rate volume unit to stock-tank barrels, in which prices are quoted.
    """
    oil, water, injection = (np.asarray(a, dtype=float).ravel() for a in (oil, water, injection))
    if not (len(oil) == len(water) == len(injection)):
        raise ValueError("rate series differ in length")
    e = economics
    if min(e.oil_price, e.water_cost, e.injection_cost) < 0:
        raise ConfigError("prices and costs must be non-negative")
    cash = (oil * e.oil_price - water * e.water_cost - injection * e.injection_cost) * dt_days * to_stb
    years = np.arange(1, len(oil) + 1) * dt_days / DAYS_PER_YEAR
    return float(np.sum(cash / (1.0 + e.discount) ** years))
