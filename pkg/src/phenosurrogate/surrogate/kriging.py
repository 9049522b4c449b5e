"""Kriging with an isotropic exponential kernel over Manhattan distances.

Correlations are ``exp(-theta * d)``; a nugget ``lam`` is added to the
diagonal.  The mean and process variance are profiled out of the likelihood,
so maximum-likelihood estimation searches only ``(log10 theta, log10 lam)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .. import _accel
from .._accel import njit
from .direct import direct_minimize, grid_golden_minimize
from .distance import DistanceKind, cross_distances, data_hash, pairwise_distances, typical_theta

LOG10_THETA_BOUNDS = (-6.0, 3.0)
LOG10_NUGGET_BOUNDS = (-12.0, 0.0)
# returned for (theta, lam) where K + lam*I is not numerically positive definite
NLL_PENALTY = 1e10
SIGMA2_FLOOR = 1e-300
# below this size call overhead dominates LAPACK, so a fused compiled kernel wins
FUSED_NLL_MAX_N = 64


class KrigingError(RuntimeError):
    pass


@dataclass(frozen=True)
class KrigingModel:
    X: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    kind: DistanceKind
    theta: float
    nugget: float
    mu: float
    sigma2: float
    chol: np.ndarray = field(repr=False)  # lower Cholesky factor of K + lam*I
    alpha: np.ndarray = field(repr=False)  # (K + lam*I)^-1 (y - mu)
    nll: float = math.nan
    nfev: int = 0

    @property
    def n(self) -> int:
        return len(self.y)

    def predict(self, Xq, return_var: bool = False):
        """Predicted mean (and variance estimate) at the rows of ``Xq``."""
        Xq = np.atleast_2d(np.asarray(Xq, dtype=np.float64))
        if Xq.shape[1] != self.X.shape[1]:
            raise ValueError(f"expected {self.X.shape[1]} features, got {Xq.shape[1]}")
        k = np.exp(-self.theta * cross_distances(Xq, self.X))
        yhat = self.mu + k @ self.alpha
        if not return_var:
            return yhat
        v = linalg.solve_triangular(self.chol, k.T, lower=True, check_finite=False)
        s2 = self.sigma2 * (1.0 - np.einsum("ij,ij->j", v, v))
        return yhat, np.maximum(s2, 0.0)

    def to_json(self, dataset: str | None = None) -> dict:
        return {
            "model": "kriging",
            "distanceKind": DistanceKind(self.kind).value,
            "theta": self.theta,
            "nugget": self.nugget,
            "mu": self.mu,
            "sigma2": self.sigma2,
            "nll": self.nll,
            "nfev": self.nfev,
            "train": {"dataset": dataset, "rows": self.n, "hash": data_hash(np.column_stack([self.X, self.y]))},
        }

    def dumps(self, dataset: str | None = None) -> str:
        return json.dumps(self.to_json(dataset), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, doc: dict, X, y) -> "KrigingModel":
        """Rebuild from stored parameters and the training data they refer to."""
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if data_hash(np.column_stack([X, y])) != doc["train"]["hash"]:
            raise KrigingError("training data does not match the stored hash")
        return fit_kriging(X, y, DistanceKind(doc["distanceKind"]), theta=doc["theta"],
                           nugget=doc["nugget"])


def _factor(D, theta, nugget):
    K = np.exp(-theta * D)
    K.flat[::K.shape[0] + 1] += nugget
    try:
        return linalg.cholesky(K, lower=True, check_finite=False)
    except linalg.LinAlgError:
        return None


def _profile(L, y):
    """mu, sigma2, alpha and 0.5*log|K| from a Cholesky factor."""
    n = len(y)
    ones = np.ones(n)
    ki_one = linalg.cho_solve((L, True), ones, check_finite=False)
    ki_y = linalg.cho_solve((L, True), y, check_finite=False)
    mu = float(ones @ ki_y / (ones @ ki_one))
    alpha = ki_y - mu * ki_one
    r = y - mu
    sigma2 = float(r @ alpha) / n
    half_logdet = float(np.log(np.diag(L)).sum())
    return mu, max(sigma2, 0.0), alpha, half_logdet


@njit
def _fused_nll(D, y, theta, nugget, penalty, floor):
    # kernel matrix, Cholesky and the forward solve of L z = [1, y] in one pass
    n = len(y)
    L = np.empty((n, n))
    for i in range(n):
        for j in range(i + 1):
            L[i, j] = math.exp(-theta * D[i, j])
        L[i, i] += nugget
    half_logdet = 0.0
    for j in range(n):
        s = L[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if not s > 0.0:
            return penalty
        d = math.sqrt(s)
        L[j, j] = d
        half_logdet += math.log(d)
        for i in range(j + 1, n):
            t = L[i, j]
            for k in range(j):
                t -= L[i, k] * L[j, k]
            L[i, j] = t / d
    z1 = np.empty(n)
    zy = np.empty(n)
    for i in range(n):
        a = 1.0
        b = y[i]
        for k in range(i):
            a -= L[i, k] * z1[k]
            b -= L[i, k] * zy[k]
        z1[i] = a / L[i, i]
        zy[i] = b / L[i, i]
    mu = (z1 @ zy) / (z1 @ z1)
    rr = 0.0
    for i in range(n):
        r = zy[i] - mu * z1[i]
        rr += r * r
    value = 0.5 * n * math.log(max(rr / n, floor)) + half_logdet
    return value if math.isfinite(value) else penalty


def concentrated_nll(D: np.ndarray, y: np.ndarray, theta: float, nugget: float) -> float:
    """Negative concentrated log-likelihood (additive constants dropped)."""
    if _accel.numba_enabled() and len(y) <= FUSED_NLL_MAX_N:
        return float(_fused_nll(D, y, float(theta), float(nugget), NLL_PENALTY, SIGMA2_FLOOR))
    L = _factor(D, theta, nugget)
    if L is None:
        return NLL_PENALTY
    # one forward solve suffices: with z = L^-1 [1, y] every quadratic form is a dot product
    z = linalg.solve_triangular(L, np.column_stack([np.ones(len(y)), y]), lower=True,
                                check_finite=False)
    z1, zy = z[:, 0], z[:, 1]
    mu = (z1 @ zy) / (z1 @ z1)
    r = zy - mu * z1
    sigma2 = float(r @ r) / len(y)
    half_logdet = float(np.log(np.diag(L)).sum())
    value = 0.5 * len(y) * math.log(max(sigma2, SIGMA2_FLOOR)) + half_logdet
    return value if math.isfinite(value) else NLL_PENALTY


def nll_objective(D, y, nugget: float | None = None):
    """Objective over ``(log10 theta[, log10 lam])`` as used by the MLE search."""
    if nugget is None:
        return lambda p: concentrated_nll(D, y, 10.0 ** p[0], 10.0 ** p[1])
    return lambda p: concentrated_nll(D, y, 10.0 ** p[0], nugget)


def fit_kriging(X, y, kind: DistanceKind = DistanceKind.PHENOTYPIC, mle_budget: int = 2000,
                ftol_rel: float = 1e-16, theta: float | None = None, nugget: float | None = None,
                optimizer: str = "direct", distances: np.ndarray | None = None,
                theta_bounds=LOG10_THETA_BOUNDS, nugget_bounds=LOG10_NUGGET_BOUNDS) -> KrigingModel:
    """Fit a Kriging model, estimating ``theta`` and ``nugget`` by MLE unless given.

    ``optimizer`` is ``"direct"`` (DIRECT-L) or ``"grid"`` (grid search with
    golden-section refinement).  If the final factorization fails the nugget
    is raised tenfold up to its upper bound before giving up.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != len(y):
        raise ValueError(f"{X.shape[0]} feature rows but {len(y)} observations")
    if len(y) < 2:
        raise ValueError("Kriging needs at least two samples")
    if not np.all(np.isfinite(y)):
        raise ValueError("observations must be finite")
    kind = DistanceKind(kind)
    D = pairwise_distances(X) if distances is None else np.asarray(distances, dtype=np.float64)

    nfev = 0
    if np.ptp(y) == 0.0:
        # nothing to estimate: the predictor is the constant itself
        theta = typical_theta(D) if theta is None else float(theta)
        nugget = 10.0 ** nugget_bounds[0] if nugget is None else float(nugget)
        L = _factor(D, theta, max(nugget, 10.0 ** nugget_bounds[0]))
        if L is None:
            raise KrigingError("kernel matrix is not positive definite")
        return KrigingModel(X, y, kind, theta, nugget, float(y[0]), 0.0, L, np.zeros(len(y)), math.nan, 0)

    if theta is None:
        if optimizer not in ("direct", "grid"):
            raise ValueError(f"unknown optimizer {optimizer!r}")
        bounds = [theta_bounds] if nugget is not None else [theta_bounds, nugget_bounds]
        objective = nll_objective(D, y, nugget)
        if optimizer == "direct":
            res = direct_minimize(objective, bounds, max_evals=mle_budget, ftol_rel=ftol_rel)
        else:
            res = grid_golden_minimize(objective, bounds)
        nfev = res.nfev
        theta = 10.0 ** res.x[0]
        if nugget is None:
            nugget = 10.0 ** res.x[1]
    elif nugget is None:
        res = direct_minimize(lambda p: concentrated_nll(D, y, theta, 10.0 ** p[0]), [nugget_bounds],
                              max_evals=mle_budget, ftol_rel=ftol_rel)
        nfev = res.nfev
        nugget = 10.0 ** res.x[0]
    theta = float(theta)
    nugget = float(nugget)
    if theta <= 0 or nugget < 0:
        raise ValueError("theta must be positive and nugget non-negative")

    L = _factor(D, theta, nugget)
    lam = nugget
    upper = 10.0 ** nugget_bounds[1]
    while L is None and lam < upper:
        lam = min(max(lam * 10.0, 10.0 ** nugget_bounds[0]), upper)
        L = _factor(D, theta, lam)
    if L is None:
        raise KrigingError(
            f"K + lam*I not positive definite for theta={theta:.3g}, lam up to {lam:.3g}; "
            f"condition estimate {np.linalg.cond(np.exp(-theta * D)):.3g}"
        )
    mu, sigma2, alpha, half_logdet = _profile(L, y)
    nll = 0.5 * len(y) * math.log(max(sigma2, SIGMA2_FLOOR)) + half_logdet
    return KrigingModel(X, y, kind, theta, lam, mu, sigma2, L, alpha, nll, nfev)


def predict(model: KrigingModel, x) -> tuple[float, float]:
    """Mean and variance estimate at a single point."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a single feature vector")
    yhat, s2 = model.predict(x[None, :], return_var=True)
    return float(yhat[0]), float(s2[0])
