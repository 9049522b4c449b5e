"""Manhattan distances and the exponential kernel."""
from __future__ import annotations

import enum
import hashlib
from pathlib import Path

import numpy as np

from .. import _accel
from .._accel import njit


class DistanceKind(str, enum.Enum):
    """Which feature vector the distance is computed on; both use Manhattan distance."""

    GENOTYPIC = "genotypicManhattan"
    PHENOTYPIC = "phenotypicManhattan"

    @classmethod
    def for_subset(cls, name: str) -> "DistanceKind":
        return cls.GENOTYPIC if name == "weights" else cls.PHENOTYPIC


def manhattan(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).sum())


def kernel(d, theta: float):
    """exp(-theta * d)."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    return np.exp(-theta * np.asarray(d, dtype=np.float64))


@njit
def _cross_numba(A, B, out):
    for i in range(A.shape[0]):
        for j in range(B.shape[0]):
            s = 0.0
            for k in range(A.shape[1]):
                s += abs(A[i, k] - B[j, k])
            out[i, j] = s


@njit
def _pairwise_numba(A, out):
    n = A.shape[0]
    for i in range(n):
        out[i, i] = 0.0
        for j in range(i + 1, n):
            s = 0.0
            for k in range(A.shape[1]):
                s += abs(A[i, k] - A[j, k])
            out[i, j] = s
            out[j, i] = s


def _cross_numpy(A, B, out, block=64):
    for lo in range(0, A.shape[0], block):
        diff = np.abs(A[lo:lo + block, None, :] - B[None, :, :])
        out[lo:lo + block] = diff.sum(axis=2)


def cross_distances(A, B) -> np.ndarray:
    """Manhattan distances between rows of ``A`` (m, d) and ``B`` (n, d)."""
    A = np.ascontiguousarray(np.atleast_2d(A), dtype=np.float64)
    B = np.ascontiguousarray(np.atleast_2d(B), dtype=np.float64)
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    out = np.empty((A.shape[0], B.shape[0]))
    if _accel.numba_enabled():
        _cross_numba(A, B, out)
    else:
        _cross_numpy(A, B, out)
    return out


def pairwise_distances(A) -> np.ndarray:
    """Symmetric Manhattan distance matrix; each pair is computed once."""
    A = np.ascontiguousarray(np.atleast_2d(A), dtype=np.float64)
    out = np.empty((A.shape[0], A.shape[0]))
    if _accel.numba_enabled():
        _pairwise_numba(A, out)
    else:
        _cross_numpy(A, A, out)
        upper = np.triu_indices(A.shape[0], 1)
        out[(upper[1], upper[0])] = out[upper]
        np.fill_diagonal(out, 0.0)
    return out


def data_hash(X) -> str:
    X = np.ascontiguousarray(X, dtype=np.float64)
    h = hashlib.sha256()
    h.update(str(X.shape).encode())
    h.update(X.tobytes())
    return h.hexdigest()


def cached_pairwise(X, kind: DistanceKind, cache_dir=None) -> np.ndarray:
    """``pairwise_distances`` with an optional ``.npy`` cache keyed by data hash and kind."""
    if cache_dir is None:
        return pairwise_distances(X)
    cache_dir = Path(cache_dir)
    path = cache_dir / f"dist-{DistanceKind(kind).value}-{data_hash(X)[:32]}.npy"
    if path.exists():
        return np.load(path)
    D = pairwise_distances(X)
    cache_dir.mkdir(parents=True, exist_ok=True)
    np.save(path, D)
    return D


def typical_theta(D: np.ndarray) -> float:
    """1 / mean off-diagonal distance; a scale-aware default for fixed-theta fits."""
    n = D.shape[0]
    mean = D.sum() / max(n * (n - 1), 1)
    return 1.0 / mean if mean > 0 else 1.0

