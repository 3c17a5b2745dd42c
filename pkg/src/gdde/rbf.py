"""Gaussian radial basis function interpolation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

from .errors import DimensionError, IllConditionedError
from .problem import DUPLICATE_TOL

# Diagonal shift relative to mean Gram diagonal; guards near-singular systems.
RIDGE = 1e-10
# A fit that misses the data by more than this fraction of the value
# range is treated as numerically singular.
INTERP_RTOL = 1e-7


def gaussian_kernel(r, sigma: float):
    """``exp(-r**2 / sigma**2)``, elementwise over ``r``."""
    if not sigma > 0:
        raise ValueError(f"shape factor must be positive, got {sigma}")
    r = np.asarray(r, dtype=float)
    return np.exp(-(r * r) / (sigma * sigma))


def gram_matrix(X: np.ndarray, sigma: float) -> np.ndarray:
    if not sigma > 0:
        raise ValueError(f"shape factor must be positive, got {sigma}")
    return np.exp(-cdist(X, X, "sqeuclidean") / (sigma * sigma))


def unique_rows(X: np.ndarray, tol: float = DUPLICATE_TOL) -> np.ndarray:
    """Indices of rows kept when later near-duplicates are dropped."""
    keep: list[int] = []
    for i, x in enumerate(X):
        if not keep or np.min(np.max(np.abs(X[keep] - x), axis=1)) > tol:
            keep.append(i)
    return np.array(keep, dtype=int)


def solve_gram(G: np.ndarray, f: np.ndarray, ridge: float = RIDGE) -> np.ndarray:
    n = len(G)
    A = G + np.eye(n) * (ridge * np.trace(G) / n)
    # accuracy is judged by the interpolation residual, not by rcond
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        return _solve(A, f)


def _solve(A, f):
    try:
        w = scipy.linalg.solve(A, f, assume_a="pos", check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        try:
            w = scipy.linalg.solve(A, f, check_finite=False)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
            raise IllConditionedError(str(exc)) from exc
    if not np.all(np.isfinite(w)):
        raise IllConditionedError("non-finite RBF weights")
    return w


@dataclass(frozen=True)
class RbfModel:
    centers: np.ndarray
    weights: np.ndarray
    sigma: float

    def __call__(self, x):
        return predict(self, x)


def check_interpolation(G: np.ndarray, w: np.ndarray, f: np.ndarray, rtol: float = INTERP_RTOL) -> None:
    """Raise :class:`IllConditionedError` if ``G @ w`` misses ``f`` by more than ``rtol`` of its range."""
    scale = np.ptp(f) if len(f) > 1 else 0.0
    if scale == 0.0:
        scale = np.max(np.abs(f))
    if scale == 0.0:
        return
    miss = np.max(np.abs(G @ w - f))
    if not miss <= rtol * scale:
        raise IllConditionedError(f"Gram system numerically singular: fit misses data by {miss / scale:.2e} of range")


def fit_rbf(
    X, f, sigma: float, *, dedupe: bool = False, ridge: float = RIDGE, check: bool = True
) -> RbfModel:
    """Interpolate ``f`` at centers ``X`` by solving the Gram system.

    Duplicate centers raise :class:`IllConditionedError` unless ``dedupe``
    is set, in which case the first occurrence is kept. With ``check`` the
    fit must reproduce the data to ``INTERP_RTOL`` of their range, else
    the Gram matrix counts as singular and the same error is raised.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    f = np.asarray(f, dtype=float).ravel()
    if len(X) != len(f):
        raise DimensionError(f"{len(X)} centers but {len(f)} values")
    if len(X) == 0:
        raise ValueError("at least one training point is required")
    keep = unique_rows(X)
    if len(keep) < len(X):
        if not dedupe:
            raise IllConditionedError("duplicate RBF centers")
        X, f = X[keep], f[keep]
    G = gram_matrix(X, sigma)
    if not check:
        return RbfModel(X, solve_gram(G, f, ridge), float(sigma))
    # A backward-stable unshifted solve interpolates even when the weights
    # are inaccurate; the shift is only a fallback for a singular factorization.
    try:
        w = solve_gram(G, f, 0.0)
        check_interpolation(G, w, f)
    except IllConditionedError:
        w = solve_gram(G, f, ridge)
        check_interpolation(G, w, f)
    return RbfModel(X, w, float(sigma))


def predict(model: RbfModel, x) -> float | np.ndarray:
    """Evaluate the interpolant at one point (float) or at rows of a 2-D array."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != model.centers.shape[1]:
        raise DimensionError(f"expected dimension {model.centers.shape[1]}, got {X.shape[1]}")
    K = np.exp(-cdist(X, model.centers, "sqeuclidean") / (model.sigma * model.sigma))
    out = K @ model.weights
    return float(out[0]) if single else out
