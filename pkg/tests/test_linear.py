import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phenosurrogate.surrogate.linear import aic, fit_linear_aic, predict_linear


def brute_best_addition(X, y, selected):
    """AIC after adding each candidate, by direct least squares."""
    n = len(y)
    out = {}
    for j in range(X.shape[1]):
        if j in selected:
            continue
        A = np.column_stack([np.ones(n), X[:, selected + [j]]])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        r = y - A @ coef
        out[j] = aic(float(r @ r), n, len(selected) + 1)
    return out


def test_exact_recovery(rng):
    X = rng.normal(size=(40, 6))
    y = 2.5 * X[:, 3] - 1.0
    m = fit_linear_aic(X, y)
    assert m.selected == (3,)
    assert m.coefficients[0] == pytest.approx(2.5, abs=1e-8)
    assert m.intercept == pytest.approx(-1.0, abs=1e-8)
    assert np.allclose(m.predict(X), y, atol=1e-8)


def test_noise_selects_little(rng):
    X = rng.normal(size=(60, 5))
    y = rng.normal(size=60)
    m = fit_linear_aic(X, y)
    assert m.aic <= m.aic_path[0] + 1e-9


def test_selection_matches_brute_force(rng):
    X = rng.normal(size=(50, 8))
    y = X @ (rng.normal(size=8) * np.array([1, 0, 1, 0, 1, 0, 0, 1])) + 0.5 * rng.normal(size=50)
    m = fit_linear_aic(X, y)
    chosen = []
    for j in m.selected:
        scores = brute_best_addition(X, y, chosen)
        assert j == min(scores, key=scores.get)
        chosen.append(j)
    scores = brute_best_addition(X, y, chosen)
    if scores:
        assert min(scores.values()) >= m.aic - 1e-8


def test_aic_path_non_increasing(rng):
    X = rng.normal(size=(30, 20))
    y = X[:, :5].sum(axis=1) + 0.1 * rng.normal(size=30)
    path = fit_linear_aic(X, y).aic_path
    assert all(b <= a for a, b in zip(path, path[1:]))


def test_cap_at_n_minus_two(rng):
    X = rng.normal(size=(12, 50))
    y = rng.normal(size=12)
    assert fit_linear_aic(X, y).n_coefficients <= 10
    assert fit_linear_aic(X, y, max_steps=3).n_coefficients <= 3


def test_collinear_candidate_skipped(rng):
    x = rng.normal(size=30)
    X = np.column_stack([x, 2 * x, rng.normal(size=30)])
    y = 3 * x + X[:, 2] + 0.01 * rng.normal(size=30)
    m = fit_linear_aic(X, y)
    assert not ({0, 1} <= set(m.selected))


def test_refit_reproduces_coefficients(rng):
    X = rng.normal(size=(40, 10))
    y = X[:, 2] - 2 * X[:, 7] + 0.3 * rng.normal(size=40)
    m = fit_linear_aic(X, y)
    A = np.column_stack([np.ones(40), X[:, list(m.selected)]])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    assert np.allclose(coef, np.r_[m.intercept, m.coefficients], atol=1e-8)


def test_empty_selection_predicts_intercept():
    X = np.zeros((10, 3))
    y = np.arange(10.0)
    m = fit_linear_aic(X, y)
    assert m.selected == ()
    assert predict_linear(m, np.array([5.0, -1.0, 2.0])) == pytest.approx(4.5)


@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_prediction_is_affine(seed, a):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(25, 4))
    m = fit_linear_aic(X, X @ np.array([1.0, -2.0, 0.0, 0.5]) + rng.normal(size=25))
    x1, x2 = rng.normal(size=4), rng.normal(size=4)
    lhs = predict_linear(m, a * x1 + (1 - a) * x2)
    rhs = a * predict_linear(m, x1) + (1 - a) * predict_linear(m, x2)
    assert lhs == pytest.approx(rhs, abs=1e-9)


def test_errors(rng):
    with pytest.raises(ValueError):
        fit_linear_aic(np.zeros((2, 2)), np.zeros(2))
    m = fit_linear_aic(rng.normal(size=(20, 4)), rng.normal(size=20) + np.arange(20))
    X = rng.normal(size=(20, 6))
    m = fit_linear_aic(X, X[:, 5] * 3)
    with pytest.raises(ValueError):
        m.predict(np.zeros((1, 3)))
