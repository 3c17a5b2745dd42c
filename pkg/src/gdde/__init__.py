"""Surrogate-assisted differential evolution with classifier prescreening and local RBF search."""

from .benchmarks import BENCHMARKS, benchmark
from .de import DeParams, Strategy, run_de
from .errors import (
    BudgetExhausted,
    ComparisonError,
    ConfigError,
    DegenerateFoldError,
    DimensionError,
    GddeError,
    IllConditionedError,
    InsufficientDataError,
    SolverError,
)
from .optimizer import GddeParams, Mode, run_gdde
from .pnn import PnnModel, classify, train_pnn
from .problem import (
    DecisionSpace,
    EvaluationDatabase,
    Objective,
    RunTrace,
    Solution,
    Stage,
    VariableKind,
    clamp_and_round,
    select_best,
)
from .rbf import RbfModel, fit_rbf, predict
from .sampling import lhs
from .tuning import ModelKind, TunerConfig, optimal_sigma, tune_sigma

__version__ = "0.1.0"
