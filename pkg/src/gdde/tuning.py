"""Shape-factor selection by leave-one-out error and a quadratic fit.

``e(sigma)`` is sampled at ``m`` evenly spaced shape factors, a quadratic
``b0 + b1*sigma + b11*sigma**2`` is least-squares fitted to the samples,
and its vertex, clipped into ``[sigma_min, sigma_max]``, is returned.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist, pdist
from scipy.special import logsumexp

from . import pnn
from .errors import DegenerateFoldError, IllConditionedError
from .rbf import RIDGE, check_interpolation, fit_rbf, gram_matrix, predict

logger = logging.getLogger(__name__)


class ModelKind(enum.Enum):
    RBF = "rbf"
    PNN = "pnn"


@dataclass(frozen=True)
class TunerConfig:
    """Trial count and bounds for the shape factor.

    Unset bounds default to ``min_factor`` / ``max_factor`` times the mean
    pairwise distance of the training points.
    """

    m: int = 10
    sigma_min: float | None = None
    sigma_max: float | None = None
    min_factor: float = 0.1
    max_factor: float = 2.0

    def __post_init__(self):
        if self.m < 3:
            raise ValueError("at least 3 trial shape factors are needed")
        if self.sigma_min is not None and self.sigma_min <= 0:
            raise ValueError("sigma_min must be positive")
        if (
            self.sigma_min is not None
            and self.sigma_max is not None
            and not self.sigma_min < self.sigma_max
        ):
            raise ValueError("sigma_min must be below sigma_max")
        if not 0 < self.min_factor < self.max_factor:
            raise ValueError("need 0 < min_factor < max_factor")

    def bounds(self, X) -> tuple[float, float]:
        dbar = mean_pairwise_distance(X)
        lo = self.sigma_min if self.sigma_min is not None else self.min_factor * dbar
        hi = self.sigma_max if self.sigma_max is not None else self.max_factor * dbar
        if not lo < hi:
            raise ValueError(f"empty shape factor range [{lo}, {hi}]")
        return lo, hi


def mean_pairwise_distance(X) -> float:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if len(X) < 2:
        return 1.0
    dbar = float(np.mean(pdist(X)))
    return dbar if dbar > 0 else 1.0


@dataclass(frozen=True)
class QuadFit1D:
    b0: float
    b1: float
    b11: float

    def __call__(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        return self.b0 + self.b1 * sigma + self.b11 * sigma * sigma

    @property
    def vertex(self) -> float:
        return -self.b1 / (2.0 * self.b11)


def fit_quadratic(sigmas, errors) -> QuadFit1D:
    """Least-squares quadratic through ``(sigma, error)`` samples."""
    sigmas = np.asarray(sigmas, dtype=float).ravel()
    errors = np.asarray(errors, dtype=float).ravel()
    if len(sigmas) != len(errors):
        raise ValueError("sigmas and errors differ in length")
    if len(np.unique(sigmas)) < 3:
        raise ValueError("need at least 3 distinct shape factors for a quadratic fit")
    design = np.column_stack([np.ones_like(sigmas), sigmas, sigmas * sigmas])
    beta, *_ = np.linalg.lstsq(design, errors, rcond=None)
    return QuadFit1D(*map(float, beta))


# ---------------------------------------------------------------- LOOCV


def _encode(labels) -> np.ndarray:
    return (np.asarray(labels) == pnn.PROMISING).astype(float)


def _check_folds(labels) -> None:
    labels = np.asarray(labels)
    for c in (pnn.PROMISING, pnn.NOT_PROMISING):
        if np.count_nonzero(labels == c) < 2:
            raise DegenerateFoldError(f"class {c} has fewer than 2 points")


def loocv_error(X, values, sigma: float, kind: ModelKind | str, *, method: str = "direct") -> float:
    """Sum of squared leave-one-out prediction errors.

    For PNN ``values`` are class labels (1 or 2), encoded as 1/0, so the
    result is the number of held-out misclassifications. ``method="fast"``
    gives the same quantity without refitting.
    """
    kind = ModelKind(kind)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    values = np.asarray(values).ravel()
    if len(X) < 2:
        raise ValueError("leave-one-out needs at least 2 points")
    if method == "direct":
        return _loocv_direct(X, values, sigma, kind)
    if method == "fast":
        if kind is ModelKind.RBF:
            return _loocv_rbf_fast(X, values.astype(float), sigma)
        return _loocv_pnn_fast(X, values, sigma)
    raise ValueError(f"unknown method {method!r}")


def _loocv_direct(X, values, sigma, kind) -> float:
    n = len(X)
    if kind is ModelKind.PNN:
        _check_folds(values)
    if kind is ModelKind.RBF:
        # the shape factor is only usable if the full-data fit is
        fit_rbf(X, values, sigma)
    err = 0.0
    for i in range(n):
        rest = np.arange(n) != i
        if kind is ModelKind.RBF:
            model = fit_rbf(X[rest], values[rest], sigma, check=False)
            err += (values[i] - predict(model, X[i])) ** 2
        else:
            model = pnn.train_pnn(X[rest], values[rest], sigma)
            err += (_encode(values[i]) - _encode(pnn.classify(model, X[i]))) ** 2
    return float(err)


def _loocv_rbf_fast(X, f, sigma) -> float:
    # Held-out residual_i = c_i / inv(A)_ii with c = inv(A) f (Rippa, 1999).
    # Exact for the shifted system too: the shift is the same on every fold.
    G = gram_matrix(X, sigma)
    A = G + np.eye(len(G)) * (RIDGE * np.trace(G) / len(G))
    try:
        Ainv = np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedError(str(exc)) from exc
    c = Ainv @ f
    try:
        check_interpolation(G, c, f)
    except IllConditionedError:
        fit_rbf(X, f, sigma)
    resid = c / np.diag(Ainv)
    if not np.all(np.isfinite(resid)):
        raise IllConditionedError("non-finite leave-one-out residuals")
    return float(resid @ resid)


def _loocv_pnn_fast(X, labels, sigma) -> float:
    _check_folds(labels)
    L = -cdist(X, X, "sqeuclidean") / (2.0 * sigma * sigma)
    np.fill_diagonal(L, -np.inf)
    logs = []
    for c in (pnn.PROMISING, pnn.NOT_PROMISING):
        member = labels == c
        counts = member.sum() - member
        logs.append(logsumexp(L[:, member], axis=1) - np.log(counts))
    pred = pnn.decide(logs[0], logs[1])
    return float(np.sum((_encode(labels) - _encode(pred)) ** 2))


# ---------------------------------------------------------------- selection


@dataclass
class SigmaTuning:
    sigma: float
    sigmas: np.ndarray
    errors: np.ndarray
    fit: QuadFit1D | None = None
    fallback: str | None = None
    bounds: tuple[float, float] = field(default=(np.nan, np.nan))


def select_sigma(
    error_fn: Callable[[float], float],
    sigma_min: float,
    sigma_max: float,
    m: int = 10,
    default: float | None = None,
) -> SigmaTuning:
    """Minimize ``error_fn`` over ``[sigma_min, sigma_max]`` through a quadratic fit.

    Shape factors whose error cannot be computed are skipped, and the
    vertex is then clipped to the range of those that succeeded. If the fit
    is not convex, or its vertex scores worse than twice the best sample,
    the best sampled shape factor is returned; if no sample succeeds
    ``default`` is returned. ``fallback`` names the branch taken.
    """
    if not 0 < sigma_min < sigma_max:
        raise ValueError(f"invalid shape factor bounds [{sigma_min}, {sigma_max}]")
    sigmas = np.linspace(sigma_min, sigma_max, m)
    errors = np.full(m, np.nan)
    for k, s in enumerate(sigmas):
        try:
            errors[k] = error_fn(float(s))
        except (DegenerateFoldError, IllConditionedError):
            continue
    ok = np.isfinite(errors)
    bounds = (float(sigma_min), float(sigma_max))
    if not ok.any():
        sigma = default if default is not None else 0.5 * (sigma_min + sigma_max)
        logger.debug("no usable leave-one-out error; using default sigma %g", sigma)
        return SigmaTuning(float(sigma), sigmas, errors, None, "default", bounds)
    best_sampled = float(sigmas[ok][np.argmin(errors[ok])])
    if ok.sum() < 3:
        return SigmaTuning(best_sampled, sigmas, errors, None, "best-sampled", bounds)
    fit = fit_quadratic(sigmas[ok], errors[ok])
    if not fit.b11 > 0:
        return SigmaTuning(best_sampled, sigmas, errors, fit, "best-sampled", bounds)
    lo, hi = sigmas[ok].min(), sigmas[ok].max()
    sigma = float(min(max(fit.vertex, lo), hi))
    # e is only roughly quadratic; guard against a vertex far off the samples
    try:
        e_vertex = error_fn(sigma)
    except (DegenerateFoldError, IllConditionedError):
        e_vertex = np.inf
    e_best = errors[ok].min()
    if not e_vertex <= e_best + abs(e_best):
        return SigmaTuning(best_sampled, sigmas, errors, fit, "vertex-rejected", bounds)
    return SigmaTuning(sigma, sigmas, errors, fit, None, bounds)


def tune_sigma(
    X, values, kind: ModelKind | str, cfg: TunerConfig = TunerConfig(), *, method: str = "fast"
) -> SigmaTuning:
    kind = ModelKind(kind)
    lo, hi = cfg.bounds(X)
    return select_sigma(
        lambda s: loocv_error(X, values, s, kind, method=method),
        lo,
        hi,
        cfg.m,
        default=mean_pairwise_distance(X),
    )


def optimal_sigma(X, values, kind: ModelKind | str, cfg: TunerConfig = TunerConfig(), **kw) -> float:
    """Shape factor minimizing the fitted leave-one-out error curve."""
    return tune_sigma(X, values, kind, cfg, **kw).sigma
