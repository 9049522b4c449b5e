"""DIRECT (dividing rectangles) global minimizer, plus a grid search fallback.

The default is the locally biased variant (DIRECT-L): rectangle size is
measured by the longest side, and at most one rectangle per size class is
divided per iteration.  Division trisects along every longest side, ordered by
the better of the two new samples (the original DIRECT rule).
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import OptimizeResult

# rectangles this finely divided are treated as points
MAX_LEVEL = 30
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class _Rects:
    # values and sizes live in preallocated arrays: one rectangle per evaluation
    def __init__(self, locally_biased: bool, capacity: int):
        self.locally_biased = locally_biased
        self.centers: list[np.ndarray] = []
        self.levels: list[np.ndarray] = []
        self._values = np.empty(capacity)
        self._sizes = np.empty(capacity)
        self.n = 0

    @property
    def values(self) -> np.ndarray:
        return self._values[:self.n]

    @property
    def sizes(self) -> np.ndarray:
        return self._sizes[:self.n]

    def add(self, c, f, lev):
        self.centers.append(c)
        self.levels.append(lev)
        self._values[self.n] = f
        self._sizes[self.n] = _size(lev, self.locally_biased)
        self.n += 1

    def relevel(self, i, lev):
        self.levels[i] = lev
        self._sizes[i] = _size(lev, self.locally_biased)


def _size(levels: np.ndarray, locally_biased: bool) -> float:
    if locally_biased:
        return round(0.5 * 3.0 ** -float(levels.min()), 15)
    sides = 3.0 ** (-levels.astype(float))
    return round(0.5 * float(np.sqrt((sides * sides).sum())), 15)


def _potentially_optimal(sizes, values, locally_biased: bool, eps: float) -> list[int]:
    """Indices of rectangles on the lower-right convex hull of (size, value)."""
    sizes = np.asarray(sizes)
    values = np.asarray(values)
    n = len(sizes)
    order = np.lexsort((np.arange(n), values, sizes))
    s_sorted = sizes[order]
    first = np.flatnonzero(np.r_[True, s_sorted[1:] != s_sorted[:-1]])
    pts = []
    for g, lo in enumerate(first):
        hi = first[g + 1] if g + 1 < len(first) else len(order)
        best = values[order[lo]]
        if locally_biased:
            tied = [int(order[lo])]
        else:
            block = order[lo:hi]
            tied = [int(i) for i in block[values[block] == best]]
        pts.append((float(s_sorted[lo]), float(best), tied))
    fmin = min(p[1] for p in pts)
    # among classes attaining fmin only the largest can satisfy K > 0
    start = max(i for i, p in enumerate(pts) if p[1] == fmin)
    hull: list[int] = []
    for i in range(start, len(pts)):
        while len(hull) >= 2:
            a, b = pts[hull[-2]], pts[hull[-1]]
            c = pts[i]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    chosen = []
    for h, idx in enumerate(hull):
        d, f, members = pts[idx]
        if eps > 0 and h + 1 < len(hull):
            d2, f2, _ = pts[hull[h + 1]]
            k_max = (f2 - f) / (d2 - d)
            if f - k_max * d > fmin - eps * abs(fmin):
                continue
        chosen.extend(members)
    return chosen


def direct_minimize(fun: Callable[[np.ndarray], float], bounds: Sequence[tuple[float, float]],
                    max_evals: int = 2000, ftol_rel: float = 1e-16, locally_biased: bool = True,
                    eps: float = 0.0, max_iter: int | None = None) -> OptimizeResult:
    """Minimize ``fun`` over a box.

    Stops when the next division would exceed ``max_evals`` evaluations, when
    the incumbent improves by a relative amount below ``ftol_rel`` within an
    iteration, after ``max_iter`` iterations, or when no rectangle can be
    divided further.
    """
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    if np.any(hi <= lo):
        raise ValueError("every bound must satisfy lower < upper")
    if max_evals < 1:
        raise ValueError("max_evals must be >= 1")
    dim = len(lo)
    nfev = 0

    def evaluate(u):
        nonlocal nfev
        nfev += 1
        v = float(fun(lo + u * (hi - lo)))
        return v if math.isfinite(v) else np.finfo(float).max

    rects = _Rects(locally_biased, max_evals)
    rects.add(np.full(dim, 0.5), evaluate(np.full(dim, 0.5)), np.zeros(dim, dtype=np.int64))
    best = int(np.argmin(rects.values))
    nit = 0
    message = "evaluation budget exhausted"
    while True:
        if max_iter is not None and nit >= max_iter:
            message = "iteration limit reached"
            break
        f_before = float(rects.values[best])
        candidates = [i for i in _potentially_optimal(rects.sizes, rects.values, locally_biased, eps)
                      if rects.levels[i].min() < MAX_LEVEL]
        if not candidates:
            message = "no divisible rectangle left"
            break
        out_of_budget = False
        for i in candidates:
            lev = rects.levels[i]
            dims = np.flatnonzero(lev == lev.min())
            if nfev + 2 * len(dims) > max_evals:
                out_of_budget = True
                break
            c = rects.centers[i]
            delta = 3.0 ** (-float(lev.min()) - 1.0)
            samples = []
            for d in dims:
                up = c.copy()
                up[d] += delta
                down = c.copy()
                down[d] -= delta
                samples.append((d, up, evaluate(up), down, evaluate(down)))
            samples.sort(key=lambda s: (min(s[2], s[4]), s[0]))
            new_lev = lev.copy()
            for d, up, f_up, down, f_down in samples:
                new_lev[d] += 1
                rects.add(up, f_up, new_lev.copy())
                rects.add(down, f_down, new_lev.copy())
            rects.relevel(i, new_lev)
        nit += 1
        best = int(np.argmin(rects.values))
        f_after = float(rects.values[best])
        if out_of_budget:
            break
        if f_after < f_before and (f_before - f_after) <= ftol_rel * 0.5 * (abs(f_before) + abs(f_after)):
            message = "relative improvement below ftol_rel"
            break
    u = rects.centers[best]
    return OptimizeResult(x=lo + u * (hi - lo), fun=float(rects.values[best]), nfev=nfev, nit=nit,
                          message=message, success=True)


def _golden_section(f, a, b, iters):
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def grid_golden_minimize(fun: Callable[[np.ndarray], float], bounds: Sequence[tuple[float, float]],
                         points_per_dim: int = 33, sweeps: int = 200, golden_iters: int = 40,
                         tol: float = 1e-10) -> OptimizeResult:
    """Exhaustive grid, then cyclic golden-section refinement around the best node.

    Coordinate sweeps repeat until one improves the value by less than ``tol``
    (correlated valleys need many), at most ``sweeps`` times.  Kept as an
    independent check on :func:`direct_minimize`.
    """
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    nfev = 0

    def f(x):
        nonlocal nfev
        nfev += 1
        v = float(fun(x))
        return v if math.isfinite(v) else np.finfo(float).max

    axes = [np.linspace(l, h, points_per_dim) for l, h in zip(lo, hi)]
    best_x, best_f = None, np.inf
    for node in np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(lo), -1).T:
        v = f(node)
        if v < best_f:
            best_x, best_f = node.copy(), v
    spacing = (hi - lo) / (points_per_dim - 1)
    x = best_x
    nit = 0
    for nit in range(1, sweeps + 1):
        f_start = best_f
        for d in range(len(lo)):
            a = max(lo[d], x[d] - spacing[d])
            b = min(hi[d], x[d] + spacing[d])

            def along(t, d=d):
                y = x.copy()
                y[d] = t
                return f(y)

            t, v = _golden_section(along, a, b, golden_iters)
            if v < best_f:
                x = x.copy()
                x[d] = t
                best_f = v
        if f_start - best_f < tol:
            break
    return OptimizeResult(x=x, fun=best_f, nfev=nfev, nit=nit, message="grid + golden section",
                          success=True)
