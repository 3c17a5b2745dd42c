"""Desk-scale waterflood proxy and NPV objective for well placement/control."""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from ..problem import DecisionSpace, Objective
from .case import (
    CASES,
    DecodeMode,
    Economics,
    Fluid,
    ReservoirCase,
    WellControl,
    WellLayout,
    channelized_permeability,
    decode,
    default_mode,
    elliptical_mask,
    load_case,
    make_case,
    nearest_active,
    save_case,
    TO_STB,
)
from .economics import npv
from .simulator import SimulationResult, Simulator, simulate, write_rates_csv


class ReservoirNPV:
    """Decision vector -> NPV, with a small memo of recent simulations."""

    def __init__(self, case: ReservoirCase, mode: DecodeMode | str, cache_size: int = 4096):
        self.case = case
        self.mode = DecodeMode(mode)
        self.simulator = Simulator(case)
        self.cache_size = cache_size
        self._cache: OrderedDict[bytes, float] = OrderedDict()
        self.n_simulations = 0

    def evaluate(self, x) -> tuple[float, SimulationResult]:
        layout = decode(x, self.case, self.mode)
        result = self.simulator.run(layout)
        self.n_simulations += 1
        value = npv(
            result.oil, result.water, result.injection,
            self.case.economics, self.case.dt_days, TO_STB[self.case.units],
        )
        return value, result

    def __call__(self, x) -> float:
        key = np.asarray(x, dtype=float).tobytes()
        if key in self._cache:
            self._cache.move_to_end(key)
            return self._cache[key]
        value, _ = self.evaluate(x)
        self._cache[key] = value
        if len(self._cache) > self.cache_size:
            self._cache.popitem(last=False)
        return value


def reservoir_problem(name: str, budget: int | None = None, **overrides) -> tuple[Objective, DecisionSpace]:
    """Objective handle and decision space for preset case ``name``."""
    case, space = make_case(name, **overrides)
    fun = ReservoirNPV(case, default_mode(name))
    return Objective(fun, space, budget, name=name), space


__all__ = [
    "CASES",
    "DecodeMode",
    "Economics",
    "Fluid",
    "ReservoirCase",
    "ReservoirNPV",
    "SimulationResult",
    "Simulator",
    "WellControl",
    "WellLayout",
    "channelized_permeability",
    "decode",
    "default_mode",
    "elliptical_mask",
    "load_case",
    "make_case",
    "nearest_active",
    "npv",
    "reservoir_problem",
    "save_case",
    "simulate",
    "write_rates_csv",
]
