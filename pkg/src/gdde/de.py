"""Differential evolution: DE/best/1 and DE/current-to-best/1 with binomial crossover.

Used three ways: as the plain-DE baseline, as the offspring generator of the
prescreening stage, and as the inner optimizer over a cheap surrogate.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionError
from .problem import (
    DecisionSpace,
    EvaluationDatabase,
    Solution,
    Stage,
    clamp_and_round,
)


class Strategy(enum.Enum):
    BEST1 = "best1"
    CURRENT_TO_BEST1 = "current-to-best1"


@dataclass(frozen=True)
class DeParams:
    population_size: int = 50
    mutation: float = 0.5
    crossover: float = 0.9
    strategy: Strategy = Strategy.BEST1
    rng_seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.population_size < 4:
            raise ValueError("population_size must be at least 4")
        if not 0.0 < self.mutation <= 2.0:
            raise ValueError("mutation must lie in (0, 2]")
        if not 0.0 <= self.crossover <= 1.0:
            raise ValueError("crossover must lie in [0, 1]")


def draw_partners(n: int, i, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Two mutually different member indices, both different from ``i``.

    ``i`` may be a scalar or an array (one pair drawn per entry).
    """
    i = np.asarray(i)
    r1 = rng.integers(0, n - 1, size=i.shape)
    r1 = r1 + (r1 >= i)
    r2 = rng.integers(0, n - 2, size=i.shape)
    lo, hi = np.minimum(i, r1), np.maximum(i, r1)
    r2 = r2 + (r2 >= lo)
    r2 = r2 + (r2 >= hi)
    return r1, r2


def _donor(strategy: Strategy, current, best, a, b, mu: float):
    if strategy is Strategy.BEST1:
        return best + mu * (a - b)
    return current + mu * (best - current) + mu * (a - b)


def mutate(pop, best, i: int, params: DeParams, rng: np.random.Generator | None = None) -> np.ndarray:
    """Donor vector for member ``i``. Not bound-repaired."""
    pop = np.asarray(pop, dtype=float)
    if len(pop) < 4:
        raise ValueError(f"population of {len(pop)} is too small for mutation (need 4)")
    if not 0 <= i < len(pop):
        raise IndexError(i)
    rng = rng if rng is not None else np.random.default_rng(params.rng_seed)
    i1, i2 = draw_partners(len(pop), i, rng)
    return _donor(params.strategy, pop[i], np.asarray(best, dtype=float), pop[i1], pop[i2], params.mutation)


def crossover(target, donor, params: DeParams, rng: np.random.Generator | None = None) -> np.ndarray:
    """Binomial crossover; at least one coordinate always comes from the donor."""
    target = np.asarray(target, dtype=float)
    donor = np.asarray(donor, dtype=float)
    if target.shape != donor.shape:
        raise DimensionError(f"target {target.shape} vs donor {donor.shape}")
    rng = rng if rng is not None else np.random.default_rng(params.rng_seed)
    d = target.shape[-1]
    take = rng.random(d) <= params.crossover
    take[rng.integers(d)] = True
    return np.where(take, donor, target)


def generate_trials(
    pop: np.ndarray,
    best: np.ndarray,
    params: DeParams,
    rng: np.random.Generator,
    space: DecisionSpace | None = None,
) -> np.ndarray:
    """One trial per population member (mutation + crossover, vectorized).

    With ``space`` given, donors and trials are both passed through
    :func:`clamp_and_round`.
    """
    pop = np.asarray(pop, dtype=float)
    n, d = pop.shape
    if n < 4:
        raise ValueError(f"population of {n} is too small for mutation (need 4)")
    idx = np.arange(n)
    i1, i2 = draw_partners(n, idx, rng)
    donors = _donor(params.strategy, pop, np.asarray(best, dtype=float), pop[i1], pop[i2], params.mutation)
    if space is not None:
        donors = clamp_and_round(donors, space)
    take = rng.random((n, d)) <= params.crossover
    take[idx, rng.integers(d, size=n)] = True
    trials = np.where(take, donors, pop)
    if space is not None:
        trials = clamp_and_round(trials, space)
    return trials


def run_de(
    objective: Callable,
    space: DecisionSpace,
    params: DeParams,
    budget: int,
    *,
    vectorized: bool = False,
    db: EvaluationDatabase | None = None,
    stage: Stage = Stage.BASELINE,
    rng: np.random.Generator | None = None,
    init: np.ndarray | None = None,
) -> Solution:
    """Generational DE with greedy one-to-one replacement, maximizing.

    ``objective`` maps one vector to a float, or with ``vectorized=True``
    a 2-D array of rows to a 1-D array. Every evaluated vector is appended
    to ``db`` when one is given. The last generation is truncated so that
    exactly ``budget`` evaluations happen. Rows of ``init`` (at most the
    population size) replace the leading random initial members.
    """
    n = params.population_size
    if budget < n:
        raise ValueError(f"budget {budget} is smaller than the population size {n}")
    rng = rng if rng is not None else np.random.default_rng(params.rng_seed)

    def evaluate(X):
        if vectorized:
            f = np.asarray(objective(X), dtype=float).reshape(len(X))
        else:
            f = np.array([objective(x) for x in X], dtype=float)
        if db is not None:
            for x, fx in zip(X, f):
                db.append(x, fx, stage)
        return f

    pop = clamp_and_round(space.lower + rng.random((n, space.dims)) * space.span, space)
    if init is not None:
        seeds = clamp_and_round(np.atleast_2d(np.asarray(init, dtype=float))[:n], space)
        pop[: len(seeds)] = seeds
    fit = evaluate(pop)
    used = n
    while used < budget:
        best = pop[int(np.argmax(fit))]
        trials = generate_trials(pop, best, params, rng, space)
        m = min(n, budget - used)
        f_trial = evaluate(trials[:m])
        used += m
        better = f_trial >= fit[:m]
        pop[:m][better] = trials[:m][better]
        fit[:m][better] = f_trial[better]
    k = int(np.argmax(fit))
    return Solution(pop[k].copy(), float(fit[k]), stage)
