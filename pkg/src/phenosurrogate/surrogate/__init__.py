"""Similarity-based fitness surrogates: Kriging and AIC-selected linear models."""
from .direct import direct_minimize, grid_golden_minimize
from .distance import DistanceKind, cross_distances, kernel, manhattan, pairwise_distances
from .kriging import KrigingError, KrigingModel, concentrated_nll, fit_kriging, predict
from .linear import LinearModel, aic, fit_linear_aic, predict_linear

__all__ = [
    "DistanceKind", "KrigingError", "KrigingModel", "LinearModel", "aic", "concentrated_nll",
    "cross_distances", "direct_minimize", "fit_kriging", "fit_linear_aic", "grid_golden_minimize",
    "kernel", "manhattan", "pairwise_distances", "predict", "predict_linear",
]
