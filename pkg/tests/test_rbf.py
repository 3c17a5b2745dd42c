import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gdde.errors import DimensionError, IllConditionedError
from gdde.rbf import fit_rbf, gaussian_kernel, predict
from gdde.tuning import ModelKind, optimal_sigma


def test_kernel_values():
    assert gaussian_kernel(0.0, 1.3) == 1.0
    assert gaussian_kernel(2.0, 2.0) == pytest.approx(np.exp(-1.0))
    assert gaussian_kernel(2.0, 1.0) == pytest.approx(0.018316, abs=1e-6)
    with pytest.raises(ValueError):
        gaussian_kernel(1.0, 0.0)


def test_single_center():
    m = fit_rbf([[0.3, 0.4]], [7.0], 1.0)
    assert m.weights[0] == pytest.approx(7.0)


def test_two_point_weights_and_midpoint():
    m = fit_rbf([[0.0], [1.0]], [0.0, 1.0], 1.0)
    # oracle: 2x2 solve of [[1, e^-1], [e^-1, 1]] w = (0, 1)
    e = np.exp(-1.0)
    w = np.linalg.solve([[1, e], [e, 1]], [0.0, 1.0])
    assert np.allclose(m.weights, w, rtol=1e-8)
    assert predict(m, [0.5]) == pytest.approx(np.exp(-0.25) * w.sum(), rel=1e-8)


def test_far_field_decays():
    m = fit_rbf([[0.0], [1.0]], [3.0, 4.0], 0.5)
    assert abs(predict(m, [40.0])) < 1e-12


def test_duplicates():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]])
    with pytest.raises(IllConditionedError):
        fit_rbf(X, [1.0, 2.0, 3.0], 1.0)
    m = fit_rbf(X, [1.0, 2.0, 3.0], 1.0, dedupe=True)
    assert len(m.centers) == 2 and predict(m, [0.0, 0.0]) == pytest.approx(1.0)


def test_dimension_errors():
    m = fit_rbf([[0.0, 0.0], [1.0, 0.0]], [0.0, 1.0], 1.0)
    with pytest.raises(DimensionError):
        predict(m, [0.0, 0.0, 0.0])
    with pytest.raises(DimensionError):
        fit_rbf([[0.0], [1.0]], [1.0], 1.0)


@given(st.integers(1, 25), st.integers(1, 6), st.integers(0, 10**6))
@settings(max_examples=60, deadline=None)
def test_interpolates_centers(n, d, seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, d))
    f = rng.normal(size=n)
    sigma = optimal_sigma(X, f, ModelKind.RBF) if n >= 3 else 1.0
    m = fit_rbf(X, f, sigma)
    scale = max(np.ptp(f), 1.0)
    assert np.max(np.abs(predict(m, X) - f)) <= 1e-6 * scale


@given(st.integers(0, 10**6))
@settings(max_examples=30)
def test_rigid_motion_invariance(seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (12, 3))
    f = rng.normal(size=12)
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    t = rng.normal(size=3)
    x = rng.uniform(-1, 1, (5, 3))
    a = predict(fit_rbf(X, f, 0.8), x)
    b = predict(fit_rbf(X @ Q.T + t, f, 0.8), x @ Q.T + t)
    assert np.allclose(a, b, atol=1e-8)


def test_prediction_is_lipschitz_on_dense_grid():
    rng = np.random.default_rng(0)
    X = rng.uniform(0, 1, (8, 1))
    m = fit_rbf(X, rng.normal(size=8), 0.3)
    g = np.linspace(0, 1, 2001)[:, None]
    y = predict(m, g)
    # |d/dx exp(-x^2 / 2s^2)| <= 1 / (s sqrt(e)), summed over the kernels
    lip = np.abs(m.weights).sum() / (m.sigma * np.sqrt(np.e))
    assert np.max(np.abs(np.diff(y))) <= lip * (g[1, 0] - g[0, 0]) * (1 + 1e-9)
