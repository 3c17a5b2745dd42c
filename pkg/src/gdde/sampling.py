"""Latin hypercube initial designs."""

from __future__ import annotations

import numpy as np
from scipy.stats import qmc

from .problem import DecisionSpace, clamp_and_round


def lhs_unit(n: int, dims: int, rng_seed) -> np.ndarray:
    """Randomized LHS on the unit cube: one point per stratum per dimension."""
    if n <= 0:
        raise ValueError(f"sample count must be positive, got {n}")
    sampler = qmc.LatinHypercube(d=dims, scramble=True, seed=rng_seed)
    return sampler.random(n)


def lhs(space: DecisionSpace, n: int, rng_seed) -> np.ndarray:
    """``n`` feasible points from a Latin hypercube over ``space``.

    Stratification holds before integer rounding; integer coordinates are
    then rounded by :func:`clamp_and_round`.
    """
    unit = lhs_unit(n, space.dims, rng_seed)
    return clamp_and_round(space.lower + unit * space.span, space)
