"""Two-class probabilistic neural network (Parzen-window classifier).

Class 1 is the "promising" class. Densities are computed in log space and
exponentiated only on request, since ``sigma**-d`` over- or underflows in
high dimensions; the argmax is unaffected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .errors import DimensionError

PROMISING, NOT_PROMISING = 1, 2
_LOG_2PI = np.log(2.0 * np.pi)
_TIE_RTOL = 1e-13


def log_pattern_value(x, center, sigma: float) -> float:
    x = np.asarray(x, dtype=float)
    center = np.asarray(center, dtype=float)
    if x.shape != center.shape:
        raise DimensionError(f"{x.shape} vs {center.shape}")
    if not sigma > 0:
        raise ValueError(f"shape factor must be positive, got {sigma}")
    d = x.size
    r2 = float(np.sum((x - center) ** 2))
    return -0.5 * d * _LOG_2PI - d * np.log(sigma) - r2 / (2.0 * sigma * sigma)


def pattern_value(x, center, sigma: float) -> float:
    """Gaussian pattern-layer response of one neuron centred at ``center``."""
    return float(np.exp(log_pattern_value(x, center, sigma)))


@dataclass(frozen=True)
class PnnModel:
    class1: np.ndarray
    class2: np.ndarray
    sigma: float

    def __post_init__(self):
        c1 = np.atleast_2d(np.asarray(self.class1, dtype=float))
        c2 = np.atleast_2d(np.asarray(self.class2, dtype=float))
        if c1.size == 0 or c2.size == 0:
            raise ValueError("both classes need at least one training point")
        if c1.shape[1] != c2.shape[1]:
            raise DimensionError("classes have different dimensionality")
        if not self.sigma > 0:
            raise ValueError(f"shape factor must be positive, got {self.sigma}")
        object.__setattr__(self, "class1", c1)
        object.__setattr__(self, "class2", c2)

    @property
    def dims(self) -> int:
        return self.class1.shape[1]

    def points(self, label: int) -> np.ndarray:
        if label == PROMISING:
            return self.class1
        if label == NOT_PROMISING:
            return self.class2
        raise ValueError(f"unknown class label {label}")


def train_pnn(X, labels, sigma: float) -> PnnModel:
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels)
    return PnnModel(X[labels == PROMISING], X[labels == NOT_PROMISING], sigma)


def log_class_density(model: PnnModel, x, label: int) -> np.ndarray | float:
    """Log of the averaged pattern responses of class ``label`` (1 or 2)."""
    pts = model.points(label)
    x = np.asarray(x, dtype=float)
    X = np.atleast_2d(x)
    if X.shape[1] != model.dims:
        raise DimensionError(f"expected dimension {model.dims}, got {X.shape[1]}")
    s = model.sigma
    d = model.dims
    expo = -cdist(X, pts, "sqeuclidean") / (2.0 * s * s)
    out = logsumexp(expo, axis=1) - np.log(len(pts)) - 0.5 * d * _LOG_2PI - d * np.log(s)
    return float(out[0]) if x.ndim == 1 else out


def class_density(model: PnnModel, x, label: int):
    return np.exp(log_class_density(model, x, label))


def classify(model: PnnModel, x):
    """Class label(s) with the larger density; ties go to class 2.

    Log-densities equal up to summation round-off count as ties.
    """
    l1 = np.asarray(log_class_density(model, x, PROMISING))
    l2 = np.asarray(log_class_density(model, x, NOT_PROMISING))
    out = decide(l1, l2)
    return int(out) if out.ndim == 0 else out


def decide(log_p1, log_p2) -> np.ndarray:
    log_p1, log_p2 = np.asarray(log_p1), np.asarray(log_p2)
    wins = log_p1 - log_p2 > _TIE_RTOL * np.maximum(1.0, np.abs(log_p2))
    return np.where(wins, PROMISING, NOT_PROMISING)
