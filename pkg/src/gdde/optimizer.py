"""The GDDE loop: classifier prescreening alternating with local RBF search.

Each iteration spends one real evaluation on the most isolated offspring
that the PNN calls promising, and one on the optimum of an RBF fitted to
the best points inside their bounding box.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial.distance import cdist

from . import pnn
from .de import DeParams, generate_trials, run_de
from .errors import IllConditionedError, InsufficientDataError
from .problem import (
    DecisionSpace,
    EvaluationDatabase,
    Objective,
    RunTrace,
    Solution,
    Stage,
    clamp_and_round,
    select_best_indices,
)
from .rbf import fit_rbf, predict
from .sampling import lhs
from .tuning import ModelKind, TunerConfig, tune_sigma

logger = logging.getLogger(__name__)

DEGENERATE_WIDTH = 1e-12
WIDENED_WIDTH = 1e-3
PERTURBATION = 1e-6
MAX_RANDOM_DRAWS = 10_000
LATTICE_MAX_MOVES = 3
LATTICE_TRIES = 20


class Mode(enum.Enum):
    GDDE = "gdde"
    CLASSIFIER = "classifier"
    LOCAL = "local"


@dataclass(frozen=True)
class GddeParams:
    """Settings of one GDDE run.

    ``population_size`` is the number of best points forming the population
    and the number of offspring per prescreening step; ``de`` only supplies
    the mutation factor, crossover rate and strategy. ``first_class_size``
    defaults to ``ceil(population_size / 3)``, ``local_size`` to ``tau`` and
    ``inner_budget`` to ``100 * d`` surrogate calls.
    """

    budget: int = 500
    tau: int = 100
    population_size: int = 50
    first_class_size: int | None = None
    local_size: int | None = None
    de: DeParams = field(default_factory=DeParams)
    inner_de: DeParams = field(default_factory=DeParams)
    inner_budget: int | None = None
    tuner: TunerConfig = field(default_factory=TunerConfig)
    mode: Mode = Mode.GDDE
    rng_seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.population_size < 4:
            raise ValueError("population_size must be at least 4")
        if not 1 <= self.lam < self.population_size:
            raise ValueError("first_class_size must satisfy 1 <= lambda < population_size")
        if self.tau < 1 or self.n_local < 2:
            raise ValueError("tau and local_size must be positive (local_size >= 2)")
        if self.budget < self.tau:
            raise ValueError(f"budget {self.budget} is below the initial design size {self.tau}")
        if self.mode is Mode.GDDE and self.budget == self.tau + 1:
            # budget == tau (design only) is allowed; otherwise one full iteration needs two evaluations
            raise ValueError(f"budget {self.budget} leaves room for half an iteration; use tau or at least tau + 2")
        if self.mode is not Mode.LOCAL and self.tau < self.population_size:
            raise ValueError("tau must be at least population_size")
        if self.mode is not Mode.CLASSIFIER and self.n_local > self.tau:
            raise ValueError("local_size cannot exceed tau")

    @property
    def lam(self) -> int:
        if self.first_class_size is not None:
            return self.first_class_size
        return math.ceil(self.population_size / 3)

    @property
    def n_local(self) -> int:
        return self.local_size if self.local_size is not None else self.tau

    def inner_evals(self, dims: int) -> int:
        n = self.inner_budget if self.inner_budget is not None else 100 * dims
        return max(n, self.inner_de.population_size)


@dataclass
class StageOutcome:
    evaluated: Solution
    stage: Stage
    diagnostics: dict = field(default_factory=dict)


def _min_distances(Z: np.ndarray, ref: np.ndarray) -> np.ndarray:
    return np.sqrt(np.min(cdist(Z, ref, "sqeuclidean"), axis=1))


def resolve_duplicate(x, db: EvaluationDatabase, rng: np.random.Generator) -> tuple[np.ndarray, str | None]:
    """Return ``x`` or a nearby/random replacement not yet in ``db``.

    A tiny continuous perturbation is tried first. Rounding undoes it on
    integer coordinates, so unit lattice steps come next, then a random
    feasible point.
    """
    space = db.space
    if not db.contains(x):
        return x, None
    y = clamp_and_round(x + rng.uniform(-1.0, 1.0, space.dims) * PERTURBATION * space.span, space)
    if not db.contains(y):
        return y, "perturbed"
    ints = np.flatnonzero(space.is_integer & (space.span > 0))
    for k in range(1, min(len(ints), LATTICE_MAX_MOVES) + 1):
        for _ in range(LATTICE_TRIES):
            y = x.copy()
            idx = rng.choice(ints, size=k, replace=False)
            y[idx] += rng.choice([-1.0, 1.0], size=k)
            y = clamp_and_round(y, space)
            if not db.contains(y):
                return y, "lattice-step"
    for _ in range(MAX_RANDOM_DRAWS):
        y = clamp_and_round(space.lower + rng.random(space.dims) * space.span, space)
        if not db.contains(y):
            return y, "random"
    raise InsufficientDataError("could not find an unevaluated point in the decision space")


def _evaluate(db, objective, x, stage) -> Solution:
    return db.append(x, objective(x), stage)


def prescreen_stage(
    db: EvaluationDatabase,
    params: GddeParams,
    objective: Objective,
    rng: np.random.Generator,
) -> StageOutcome:
    """Evaluate the most isolated offspring among those the PNN calls promising."""
    space = db.space
    n = params.population_size
    if len(db) < n:
        raise InsufficientDataError(f"prescreening needs {n} evaluated points, have {len(db)}")
    order = select_best_indices(db.fitness, n)
    pop = db.X[order]
    labels = np.full(n, pnn.NOT_PROMISING)
    labels[: params.lam] = pnn.PROMISING

    z_pop = space.to_unit(pop)
    tuning = tune_sigma(z_pop, labels, ModelKind.PNN, params.tuner)
    model = pnn.train_pnn(z_pop, labels, tuning.sigma)

    de = replace(params.de, population_size=n)
    trials = generate_trials(pop, pop[0], de, rng, space)
    z_trials = space.to_unit(trials)
    promising = pnn.classify(model, z_trials) == pnn.PROMISING
    dist = _min_distances(z_trials, space.to_unit(db.X))

    pool = np.flatnonzero(promising)
    fallback = None
    if not len(pool):
        pool = np.arange(n)
        fallback = "no-promising"
    k = int(pool[np.argmax(dist[pool])])
    x, dup = resolve_duplicate(trials[k], db, rng)
    sol = _evaluate(db, objective, x, Stage.PRESCREEN)
    diag = {
        "class1_count": int(promising.sum()),
        "min_distance": float(dist[k]),
        "sigma_pnn": tuning.sigma,
        "sigma_pnn_fallback": tuning.fallback,
        "fallback": dup or fallback,
    }
    return StageOutcome(sol, Stage.PRESCREEN, diag)


def local_box(points: np.ndarray, space: DecisionSpace) -> DecisionSpace:
    """Bounding box of ``points``; near-zero-width continuous sides are widened."""
    lb = points.min(axis=0)
    ub = points.max(axis=0)
    thin = (ub - lb < DEGENERATE_WIDTH * space.span) & ~space.is_integer
    if thin.any():
        mid = 0.5 * (lb + ub)
        half = 0.5 * WIDENED_WIDTH * space.span
        lb = np.where(thin, np.maximum(mid - half, space.lower), lb)
        ub = np.where(thin, np.minimum(mid + half, space.upper), ub)
    return space.with_bounds(lb, ub)


def _fit_local(z, values, sigma, tries: int = 4):
    """Fit the local RBF, halving ``sigma`` while the Gram system is singular."""
    s = sigma
    for _ in range(tries):
        try:
            return fit_rbf(z, values, s, dedupe=True), (None if s == sigma else "halved")
        except IllConditionedError:
            s *= 0.5
    return fit_rbf(z, values, s, dedupe=True, check=False), "unchecked"


def local_stage(
    db: EvaluationDatabase,
    params: GddeParams,
    objective: Objective,
    rng: np.random.Generator,
) -> StageOutcome:
    """Evaluate the maximizer of a local RBF fitted to the best points."""
    space = db.space
    n = params.n_local
    if len(db) < n:
        raise InsufficientDataError(f"local search needs {n} evaluated points, have {len(db)}")
    order = select_best_indices(db.fitness, n)
    pts, vals = db.X[order], db.fitness[order]
    box = local_box(pts, space)

    # Far from the data a Gaussian interpolant decays to its offset, so
    # fit deviations from the mean rather than raw values.
    offset = float(np.mean(vals))
    z = space.to_unit(pts)
    tuning = tune_sigma(z, vals - offset, ModelKind.RBF, params.tuner)
    model, sigma_note = _fit_local(z, vals - offset, tuning.sigma)

    def surrogate(X):
        return predict(model, space.to_unit(X)) + offset

    found = run_de(
        surrogate,
        box,
        params.inner_de,
        params.inner_evals(space.dims),
        vectorized=True,
        rng=rng,
        # starting from the data guarantees a result no worse than the
        # best training point on the surrogate
        init=pts,
    )
    x, dup = resolve_duplicate(clamp_and_round(found.x, space), db, rng)
    sol = _evaluate(db, objective, x, Stage.LOCAL)
    widths = box.span / np.where(space.span > 0, space.span, 1.0)
    diag = {
        "sigma_rbf": tuning.sigma,
        "sigma_rbf_fallback": sigma_note or tuning.fallback,
        "predicted": float(found.fitness),
        "box_widths_summary": {
            "min": float(widths.min()),
            "mean": float(widths.mean()),
            "max": float(widths.max()),
        },
        "fallback": dup,
    }
    return StageOutcome(sol, Stage.LOCAL, diag)


def run_gdde(
    objective: Objective,
    space: DecisionSpace,
    params: GddeParams,
) -> tuple[Solution, RunTrace]:
    """Run GDDE (or one of its single-strategy modes) for ``params.budget`` evaluations.

    The first ``tau`` evaluations are a Latin hypercube design. The full
    algorithm then alternates prescreening and local search, one real
    evaluation each; the classifier/local modes repeat a single stage.
    """
    rng = np.random.default_rng(params.rng_seed)
    db = EvaluationDatabase(space)
    trace = RunTrace(db)
    for x in lhs(space, params.tau, rng):
        x, _ = resolve_duplicate(x, db, rng)
        _evaluate(db, objective, x, Stage.INIT)

    if params.mode is Mode.GDDE:
        stages = (prescreen_stage, local_stage)
    elif params.mode is Mode.CLASSIFIER:
        stages = (prescreen_stage,)
    else:
        stages = (local_stage,)

    iteration = 0
    while len(db) < params.budget:
        for stage_fn in stages:
            if len(db) >= params.budget:
                break
            out = stage_fn(db, params, objective, rng)
            row = {"iteration": iteration, "stage": out.stage.value, "eval_index": len(db) - 1}
            row.update(out.diagnostics)
            trace.diagnostics.append(row)
        iteration += 1
    logger.debug("GDDE finished after %d iterations, best %g", iteration, db.best().fitness)
    return db.best(), trace
