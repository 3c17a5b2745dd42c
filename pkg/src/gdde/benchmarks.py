"""Analytic test functions, registered in maximization form (negated)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .problem import DecisionSpace, Objective


def sphere(x):
    x = np.asarray(x, dtype=float)
    return np.sum(x * x, axis=-1)


def ellipsoid(x):
    x = np.asarray(x, dtype=float)
    i = np.arange(1, x.shape[-1] + 1)
    return np.sum(i * x * x, axis=-1)


def rosenbrock(x):
    x = np.asarray(x, dtype=float)
    a, b = x[..., :-1], x[..., 1:]
    return np.sum(100.0 * (b - a * a) ** 2 + (1.0 - a) ** 2, axis=-1)


def ackley(x):
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    r = np.sqrt(np.sum(x * x, axis=-1) / d)
    c = np.sum(np.cos(2.0 * np.pi * x), axis=-1) / d
    # grouped so the optimum evaluates to exactly 0
    return 20.0 * (1.0 - np.exp(-0.2 * r)) + (np.exp(1.0) - np.exp(c))


def rastrigin(x):
    x = np.asarray(x, dtype=float)
    return np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x) + 10.0, axis=-1)


@dataclass(frozen=True)
class Benchmark:
    name: str
    minimize: Callable
    half_width: float
    optimum: float  # coordinate value repeated in every dimension

    def maximize(self, x):
        return -self.minimize(x)

    def space(self, d: int) -> DecisionSpace:
        return DecisionSpace.continuous(-self.half_width, self.half_width, d)

    def optimum_location(self, d: int) -> np.ndarray:
        return np.full(d, self.optimum)


BENCHMARKS = {
    b.name: b
    for b in (
        Benchmark("sphere", sphere, 5.12, 0.0),
        Benchmark("ellipsoid", ellipsoid, 5.12, 0.0),
        Benchmark("rosenbrock", rosenbrock, 2.048, 1.0),
        Benchmark("ackley", ackley, 32.768, 0.0),
        Benchmark("rastrigin", rastrigin, 5.12, 0.0),
    )
}


def get_benchmark(name: str) -> Benchmark:
    try:
        return BENCHMARKS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown benchmark {name!r}; known: {sorted(BENCHMARKS)}") from None


def benchmark(name: str, d: int, budget: int | None = None) -> tuple[Objective, DecisionSpace]:
    """Negated benchmark ``name`` in ``d`` dimensions on its usual box."""
    if d < 2:
        raise ValueError("benchmarks need d >= 2")
    b = get_benchmark(name)
    space = b.space(d)
    return Objective(b.maximize, space, budget, name=b.name), space
