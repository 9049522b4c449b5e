"""Linear regression with forward selection by AIC (main effects only)."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

# candidate columns whose residual norm falls below this fraction of their
# centred norm are collinear with the current selection and skipped
COLLINEAR_TOL = 1e-10
# residual sum of squares below this fraction of the total counts as an exact fit
EXACT_FIT_TOL = 1e-20


def aic(rss: float, n: int, p: int) -> float:
    """``n ln(RSS/n) + 2(p + 1)`` for ``p`` slopes plus an intercept."""
    if rss <= 0.0:
        return -math.inf
    return n * math.log(rss / n) + 2.0 * (p + 1)


@dataclass(frozen=True)
class LinearModel:
    selected: tuple[int, ...]
    intercept: float
    coefficients: np.ndarray
    aic: float
    aic_path: tuple[float, ...]
    n_features: int

    @property
    def n_coefficients(self) -> int:
        return len(self.selected)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.selected and X.shape[1] <= max(self.selected):
            raise ValueError(f"features must cover index {max(self.selected)}, got width {X.shape[1]}")
        return self.intercept + X[:, list(self.selected)] @ self.coefficients

    def to_json(self) -> dict:
        return {
            "model": "linear",
            "selected": list(self.selected),
            "intercept": self.intercept,
            "coefficients": [float(c) for c in self.coefficients],
            "aic": self.aic,
            "nFeatures": self.n_features,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def fit_linear_aic(X, y, max_steps: int | None = None) -> LinearModel:
    """Greedy forward selection starting from the intercept-only model.

    Each step adds the feature giving the lowest AIC.  Selection stops when no
    addition lowers AIC, after ``max_steps`` additions, when only one residual
    degree of freedom would remain, or on an exact fit.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if n != len(y):
        raise ValueError(f"{n} feature rows but {len(y)} observations")
    if n < 3:
        raise ValueError("linear model needs at least three samples")
    cap = n - 2 if max_steps is None else min(int(max_steps), n - 2)

    Z = X - X.mean(axis=0)
    r = y - y.mean()
    tss = float(r @ r)
    base_norm = np.einsum("ij,ij->j", Z, Z)
    usable = base_norm > 0.0
    rss = tss
    current = aic(rss, n, 0)
    path = [current]
    selected: list[int] = []

    while len(selected) < cap and rss > EXACT_FIT_TOL * tss:
        norm = np.einsum("ij,ij->j", Z, Z)
        ok = usable & (norm > COLLINEAR_TOL * np.where(usable, base_norm, 1.0))
        if not ok.any():
            break
        gain = np.where(ok, (Z.T @ r) ** 2 / np.where(ok, norm, 1.0), -np.inf)
        j = int(np.argmax(gain))
        trial = aic(max(rss - gain[j], 0.0), n, len(selected) + 1)
        if not trial < current:
            break
        q = Z[:, j] / math.sqrt(norm[j])
        r = r - (q @ r) * q
        Z = Z - np.outer(q, q @ Z)
        usable[j] = False
        selected.append(j)
        rss = float(r @ r)
        current = aic(rss, n, len(selected))
        path.append(current)

    A = np.column_stack([np.ones(n), X[:, selected]])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    final = aic(float(resid @ resid), n, len(selected))
    return LinearModel(tuple(selected), float(coef[0]), coef[1:], final, tuple(path), p)


def predict_linear(model: LinearModel, x) -> float | np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = model.predict(x)
    return float(out[0]) if x.ndim == 1 else out
