import math

import numpy as np
import pytest

from phenosurrogate.surrogate.direct import direct_minimize, grid_golden_minimize


def sphere(x):
    return float((x[0] - 0.3) ** 2 + (x[1] + 0.7) ** 2)


def branin(x):
    a, b, c = 1.0, 5.1 / (4 * math.pi ** 2), 5 / math.pi
    r, s, t = 6.0, 10.0, 1 / (8 * math.pi)
    return a * (x[1] - b * x[0] ** 2 + c * x[0] - r) ** 2 + s * (1 - t) * math.cos(x[0]) + s


def plateau(x):
    # flat outside a disc, a smooth bowl inside it
    d2 = (x[0] - 1.2) ** 2 + (x[1] - 0.4) ** 2
    return 1.0 if d2 > 0.25 else float(d2 - 0.25 + 1.0 - 0.5 * (0.25 - d2) * 4)


def plateau_min():
    return plateau(np.array([1.2, 0.4]))


CASES = [
    (sphere, [(-2, 2), (-2, 2)], 0.0),
    (branin, [(-5, 10), (0, 15)], 0.39788735772973816),
    (plateau, [(-3, 3), (-3, 3)], None),
]


@pytest.mark.parametrize("fun,bounds,fmin", CASES, ids=["sphere", "branin", "plateau"])
def test_direct_finds_minimum(fun, bounds, fmin):
    if fmin is None:
        fmin = plateau_min()
    res = direct_minimize(fun, bounds, max_evals=2000)
    assert res.nfev <= 2000
    assert res.fun - fmin <= 1e-2


@pytest.mark.parametrize("fun,bounds,fmin", CASES, ids=["sphere", "branin", "plateau"])
def test_grid_fallback_finds_minimum(fun, bounds, fmin):
    if fmin is None:
        fmin = plateau_min()
    assert grid_golden_minimize(fun, bounds).fun - fmin <= 1e-2


def test_deterministic():
    a = direct_minimize(branin, [(-5, 10), (0, 15)], max_evals=500)
    b = direct_minimize(branin, [(-5, 10), (0, 15)], max_evals=500)
    assert np.array_equal(a.x, b.x) and a.nfev == b.nfev


def test_budget_respected():
    for budget in (1, 7, 50, 333):
        assert direct_minimize(sphere, [(-2, 2), (-2, 2)], max_evals=budget).nfev <= budget


def test_one_dimensional():
    res = direct_minimize(lambda x: (x[0] - 0.123) ** 2, [(-1, 1)], max_evals=300)
    assert abs(res.x[0] - 0.123) < 1e-3


def test_original_variant_also_works():
    res = direct_minimize(branin, [(-5, 10), (0, 15)], max_evals=2000, locally_biased=False)
    assert res.fun - 0.39788735772973816 <= 1e-2


def test_nonfinite_values_are_avoided():
    def f(x):
        return math.inf if x[0] < 0 else (x[0] - 0.5) ** 2 + x[1] ** 2
    res = direct_minimize(f, [(-1, 1), (-1, 1)], max_evals=500)
    assert res.fun < 1e-3


def test_bad_bounds():
    with pytest.raises(ValueError):
        direct_minimize(sphere, [(1, 0), (0, 1)])
