"""Decision spaces, evaluated solutions and the evaluation database.

The whole library maximizes. Minimization benchmarks are negated when they
are registered (see :mod:`gdde.benchmarks`).
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import BudgetExhausted, DimensionError, InsufficientDataError

DUPLICATE_TOL = 1e-12


class VariableKind(enum.Enum):
    INTEGER = "integer"
    CONTINUOUS = "continuous"


class Stage(enum.Enum):
    INIT = "Init"
    PRESCREEN = "Prescreen"
    LOCAL = "LocalSearch"
    BASELINE = "Baseline"


@dataclass(frozen=True)
class DecisionSpace:
    """Box-bounded mixed integer/continuous search space."""

    lower: np.ndarray
    upper: np.ndarray
    kinds: tuple[VariableKind, ...]

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).ravel()
        upper = np.asarray(self.upper, dtype=float).ravel()
        kinds = tuple(VariableKind(k) for k in self.kinds)
        if not (len(lower) == len(upper) == len(kinds)):
            raise DimensionError(
                f"bounds/kinds length mismatch: {len(lower)}, {len(upper)}, {len(kinds)}"
            )
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        is_int = np.array([k is VariableKind.INTEGER for k in kinds], dtype=bool)
        if np.any(lower[is_int] != np.round(lower[is_int])) or np.any(
            upper[is_int] != np.round(upper[is_int])
        ):
            raise ValueError("integer variables need whole-valued bounds")
        lower.flags.writeable = False
        upper.flags.writeable = False
        is_int.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "_is_int", is_int)

    @classmethod
    def continuous(cls, lower, upper, dims: int | None = None) -> "DecisionSpace":
        lower, upper = _broadcast_bounds(lower, upper, dims)
        return cls(lower, upper, (VariableKind.CONTINUOUS,) * len(lower))

    @classmethod
    def integer(cls, lower, upper, dims: int | None = None) -> "DecisionSpace":
        lower, upper = _broadcast_bounds(lower, upper, dims)
        return cls(lower, upper, (VariableKind.INTEGER,) * len(lower))

    @classmethod
    def concat(cls, *spaces: "DecisionSpace") -> "DecisionSpace":
        return cls(
            np.concatenate([s.lower for s in spaces]),
            np.concatenate([s.upper for s in spaces]),
            sum((s.kinds for s in spaces), ()),
        )

    @property
    def dims(self) -> int:
        return len(self.lower)

    @property
    def is_integer(self) -> np.ndarray:
        return self._is_int

    @property
    def n_integer(self) -> int:
        return int(self._is_int.sum())

    @property
    def n_continuous(self) -> int:
        return self.dims - self.n_integer

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def with_bounds(self, lower, upper) -> "DecisionSpace":
        return DecisionSpace(lower, upper, self.kinds)

    def to_unit(self, x: np.ndarray) -> np.ndarray:
        """Map points into the unit cube (zero-width dimensions map to 0)."""
        span = np.where(self.span > 0, self.span, 1.0)
        return (np.asarray(x, dtype=float) - self.lower) / span

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dims,):
            return False
        if np.any(x < self.lower) or np.any(x > self.upper):
            return False
        return bool(np.all(x[self._is_int] == np.round(x[self._is_int])))


def _broadcast_bounds(lower, upper, dims):
    if dims is not None:
        lower = np.broadcast_to(np.asarray(lower, dtype=float), (dims,))
        upper = np.broadcast_to(np.asarray(upper, dtype=float), (dims,))
    return np.array(lower, dtype=float), np.array(upper, dtype=float)


def clamp_and_round(x, space: DecisionSpace) -> np.ndarray:
    """Round integer coordinates (ties to even) and clip into bounds.

    Accepts a single vector or a 2-D array of row vectors.
    """
    x = np.array(x, dtype=float)
    if x.shape[-1:] != (space.dims,) or x.ndim > 2:
        raise DimensionError(f"expected trailing length {space.dims}, got shape {x.shape}")
    if space.n_integer:
        x[..., space.is_integer] = np.rint(x[..., space.is_integer])
    return np.clip(x, space.lower, space.upper)


def is_duplicate(a, b, tol: float = DUPLICATE_TOL) -> bool:
    return bool(np.max(np.abs(np.asarray(a) - np.asarray(b))) <= tol)


@dataclass
class Solution:
    x: np.ndarray
    fitness: float | None = None
    stage: Stage = Stage.INIT
    index: int = -1


class EvaluationDatabase:
    """Append-only store of really-evaluated solutions, in evaluation order."""

    def __init__(self, space: DecisionSpace, allow_duplicates: bool = False):
        self.space = space
        self.allow_duplicates = allow_duplicates
        self._x = np.empty((16, space.dims))
        self._f = np.empty(16)
        self._stages: list[Stage] = []

    def __len__(self) -> int:
        return len(self._stages)

    def __iter__(self) -> Iterator[Solution]:
        return (self[i] for i in range(len(self)))

    def __getitem__(self, i: int) -> Solution:
        n = len(self)
        if i < 0:
            i += n
        if not 0 <= i < n:
            raise IndexError(i)
        return Solution(self._x[i].copy(), float(self._f[i]), self._stages[i], i)

    @property
    def X(self) -> np.ndarray:
        return self._x[: len(self)]

    @property
    def fitness(self) -> np.ndarray:
        return self._f[: len(self)]

    @property
    def stages(self) -> list[Stage]:
        return list(self._stages)

    def contains(self, x, tol: float = DUPLICATE_TOL) -> bool:
        if not len(self):
            return False
        return bool(np.any(np.max(np.abs(self.X - np.asarray(x)), axis=1) <= tol))

    def append(self, x, fitness: float, stage: Stage) -> Solution:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.space.dims,):
            raise DimensionError(f"expected length {self.space.dims}, got {x.shape}")
        if not self.allow_duplicates and self.contains(x):
            raise ValueError("duplicate decision vector")
        n = len(self)
        if n == len(self._f):
            self._x = np.concatenate([self._x, np.empty_like(self._x)])
            self._f = np.concatenate([self._f, np.empty_like(self._f)])
        self._x[n] = x
        self._f[n] = float(fitness)
        self._stages.append(Stage(stage))
        return self[n]

    def best(self) -> Solution:
        if not len(self):
            raise InsufficientDataError("empty database")
        return self[int(select_best_indices(self.fitness, 1)[0])]

    def best_so_far(self) -> np.ndarray:
        return np.maximum.accumulate(self.fitness)

    def write_csv(self, path_or_file) -> None:
        """Write ``eval_index, stage, fitness, x_0 .. x_{d-1}`` rows."""
        if isinstance(path_or_file, (str, Path)):
            with open(path_or_file, "w", newline="") as fh:
                self.write_csv(fh)
            return
        writer = csv.writer(path_or_file, lineterminator="\n")
        writer.writerow(["eval_index", "stage", "fitness"] + [f"x_{j}" for j in range(self.space.dims)])
        for i in range(len(self)):
            writer.writerow(
                [i, self._stages[i].value, repr(float(self._f[i]))]
                + [repr(float(v)) for v in self._x[i]]
            )

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()

    @classmethod
    def read_csv(cls, path_or_file, space: DecisionSpace, allow_duplicates: bool = True):
        if isinstance(path_or_file, (str, Path)):
            with open(path_or_file, newline="") as fh:
                return cls.read_csv(fh, space, allow_duplicates)
        db = cls(space, allow_duplicates=allow_duplicates)
        reader = csv.reader(path_or_file)
        next(reader)
        for row in reader:
            db.append([float(v) for v in row[3:]], float(row[2]), Stage(row[1]))
        return db


def select_best_indices(fitness: Sequence[float], k: int) -> np.ndarray:
    """Indices of the ``k`` largest fitness values; earlier index wins ties."""
    fitness = np.asarray(fitness, dtype=float)
    if k > len(fitness):
        raise InsufficientDataError(f"requested {k} of {len(fitness)} entries")
    if k < 0:
        raise ValueError("k must be non-negative")
    return np.argsort(-fitness, kind="stable")[:k]


def select_best(db: EvaluationDatabase, k: int) -> list[Solution]:
    """The ``k`` best entries of ``db``, fitness descending."""
    return [db[int(i)] for i in select_best_indices(db.fitness, k)]


class Objective:
    """Counting wrapper around an expensive black-box (maximized) function.

    ``budget`` of ``None`` means unlimited.
    """

    def __init__(
        self,
        fun: Callable[[np.ndarray], float],
        space: DecisionSpace,
        budget: int | None = None,
        name: str = "",
    ):
        self.fun = fun
        self.space = space
        self.budget = budget
        self.name = name or getattr(fun, "__name__", "objective")
        self.n_evals = 0

    @property
    def remaining(self) -> float:
        if self.budget is None:
            return float("inf")
        return self.budget - self.n_evals

    def __call__(self, x) -> float:
        if self.budget is not None and self.n_evals >= self.budget:
            raise BudgetExhausted(f"{self.name}: budget of {self.budget} evaluations used")
        x = np.asarray(x, dtype=float)
        if x.shape != (self.space.dims,):
            raise DimensionError(f"expected length {self.space.dims}, got {x.shape}")
        self.n_evals += 1
        return float(self.fun(x))

    def fresh(self, budget: int | None = None) -> "Objective":
        """A new handle on the same function with a zeroed counter."""
        return Objective(self.fun, self.space, budget, self.name)


@dataclass
class RunTrace:
    """Evaluation log plus per-iteration diagnostics of one run."""

    database: EvaluationDatabase
    diagnostics: list[dict] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.database)

    def write_csv(self, path) -> None:
        self.database.write_csv(path)

    def write_diagnostics(self, path) -> None:
        import json

        with open(path, "w") as fh:
            for row in self.diagnostics:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
