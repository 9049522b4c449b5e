"""Model-quality evaluation: split, log-scale, fit, rank-correlate, aggregate."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import _accel
from ._accel import njit
from .dataset import Dataset, subset_dim_order
from .surrogate.distance import DistanceKind
from .surrogate.kriging import fit_kriging
from .surrogate.linear import fit_linear_aic

log = logging.getLogger(__name__)

LOG_EPS = 1e-6
MODEL_KINDS = ("kriging", "linear")


# ---------------------------------------------------------------------------
# Kendall tau-b


@njit
def _merge_count(b):
    """Sort ``b`` in place (bottom-up merge sort) and return the number of inversions."""
    n = b.shape[0]
    src = b
    dst = np.empty_like(b)
    swapped = False
    swaps = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i = lo
            j = mid
            k = lo
            while i < mid and j < hi:
                if src[j] < src[i]:
                    dst[k] = src[j]
                    swaps += mid - i
                    j += 1
                else:
                    dst[k] = src[i]
                    i += 1
                k += 1
            while i < mid:
                dst[k] = src[i]
                i += 1
                k += 1
            while j < hi:
                dst[k] = src[j]
                j += 1
                k += 1
        src, dst = dst, src
        swapped = not swapped
        width *= 2
    if swapped:
        b[:] = src
    return swaps


@njit
def _tied_pairs(v):
    total = 0
    run = 1
    for i in range(1, v.shape[0]):
        if v[i] == v[i - 1]:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    return total + run * (run - 1) // 2


@njit
def _kendall_counts_numba(a, b):
    """Counts for (a, b) already sorted lexicographically by (a, b)."""
    n = a.shape[0]
    ties_a = _tied_pairs(a)
    ties_ab = 0
    run = 1
    for i in range(1, n):
        if a[i] == a[i - 1] and b[i] == b[i - 1]:
            run += 1
        else:
            ties_ab += run * (run - 1) // 2
            run = 1
    ties_ab += run * (run - 1) // 2
    work = b.copy()
    swaps = _merge_count(work)
    ties_b = _tied_pairs(work)
    n0 = n * (n - 1) // 2
    s = n0 - ties_a - ties_b + ties_ab - 2 * swaps
    return s, n0, ties_a, ties_b


def _kendall_counts_numpy(a, b, block=256):
    n = len(a)
    s = 0
    ties_a = 0
    ties_b = 0
    for lo in range(0, n, block):
        da = np.sign(a[lo:lo + block, None] - a[None, :])
        db = np.sign(b[lo:lo + block, None] - b[None, :])
        # keep pairs i < j only
        upper = np.arange(lo, min(lo + block, n))[:, None] < np.arange(n)[None, :]
        s += int((da * db)[upper].sum())
        ties_a += int(((da == 0) & upper).sum())
        ties_b += int(((db == 0) & upper).sum())
    return s, n * (n - 1) // 2, ties_a, ties_b


def kendall_counts(a, b) -> tuple[int, int, int, int]:
    """``(concordant - discordant, pairs, pairs tied in a, pairs tied in b)``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("kendall_tau needs two 1-D vectors of equal length")
    if len(a) < 2:
        raise ValueError("kendall_tau needs at least two observations")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("kendall_tau inputs must be finite")
    if _accel.numba_enabled():
        order = np.lexsort((b, a))
        return tuple(int(v) for v in _kendall_counts_numba(a[order], b[order]))
    return _kendall_counts_numpy(a, b)


def kendall_tau(a, b) -> float:
    """Kendall's tau-b."""
    s, n0, ties_a, ties_b = kendall_counts(a, b)
    if n0 == ties_a or n0 == ties_b:
        raise ValueError("kendall_tau is undefined for a constant input")
    return s / math.sqrt(float(n0 - ties_a) * float(n0 - ties_b))


# ---------------------------------------------------------------------------
# PCA


def pca_components90(X, threshold: float = 0.9, mode: str = "covariance") -> int:
    """Smallest number of principal components explaining ``threshold`` of the variance."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] < 2 or X.shape[1] < 1:
        raise ValueError("PCA needs at least two rows and one column")
    Xc = X - X.mean(axis=0)
    if mode == "correlation":
        sd = Xc.std(axis=0)
        Xc = Xc[:, sd > 0] / sd[sd > 0]
    elif mode != "covariance":
        raise ValueError(f"unknown PCA mode {mode!r}")
    if Xc.size == 0:
        raise ValueError("data has zero total variance")
    ev = np.linalg.svd(Xc, compute_uv=False) ** 2
    total = ev.sum()
    if not total > 0:
        raise ValueError("data has zero total variance")
    explained = np.cumsum(ev) / total
    return int(np.searchsorted(explained, threshold * (1 - 1e-12)) + 1)


# ---------------------------------------------------------------------------
# splitting and model runs


@dataclass
class Partition:
    subsets: dict[str, np.ndarray]
    y: np.ndarray  # log-scaled
    rows: np.ndarray


def log_scale(y) -> np.ndarray:
    """Natural log, with values below ``LOG_EPS`` raised to it first (robots that never moved)."""
    return np.log(np.maximum(np.asarray(y, dtype=np.float64), LOG_EPS))


def split_and_scale(data: Dataset, train_size: int, seed: int) -> tuple[Partition, Partition]:
    n = data.n_rows
    if not 0 < train_size < n:
        raise ValueError(f"train_size must lie in (0, {n}), got {train_size}")
    perm = np.random.default_rng(seed).permutation(n)
    parts = []
    for rows in (np.sort(perm[:train_size]), np.sort(perm[train_size:])):
        parts.append(Partition({k: v[rows] for k, v in data.subsets.items()}, log_scale(data.y[rows]), rows))
    return parts[0], parts[1]


@dataclass(frozen=True)
class EvalConfig:
    train_size: int = 400
    seed: int = 0
    subsets: tuple[str, ...] | None = None
    model_kinds: tuple[str, ...] = MODEL_KINDS
    mle_budget: int = 2000
    ftol_rel: float = 1e-16
    optimizer: str = "direct"
    fixed_nugget: float | None = None
    linear_max_steps: int | None = None
    pca_mode: str = "covariance"

    def validate(self) -> None:
        bad = set(self.model_kinds) - set(MODEL_KINDS)
        if bad:
            raise ValueError(f"unknown model kinds {sorted(bad)}")
        if self.train_size < 3:
            raise ValueError("train_size must be >= 3")
        if self.optimizer not in ("direct", "grid"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class EvalResult:
    subset: str
    model: str
    kendall_tau: float
    train_size: int
    test_size: int
    replication: int = 0
    n_hidden: int = 0
    n_coefficients: int | None = None
    dim: int = 0
    theta: float | None = None
    nugget: float | None = None
    status: str = "ok"
    error: str = ""

    def to_row(self) -> dict:
        return asdict(self)


def _score(pred, truth) -> tuple[float, str]:
    if np.ptp(pred) == 0.0:
        # a constant predictor cannot rank anything
        return 0.0, "constant-prediction"
    return kendall_tau(pred, truth), "ok"


def evaluate_subset(train: Partition, test: Partition, subset: str, model: str,
                    config: EvalConfig) -> EvalResult:
    Xtr, Xte = train.subsets[subset], test.subsets[subset]
    res = EvalResult(subset, model, math.nan, len(train.y), len(test.y), dim=Xtr.shape[1])
    try:
        if model == "kriging":
            km = fit_kriging(Xtr, train.y, DistanceKind.for_subset(subset), mle_budget=config.mle_budget,
                             ftol_rel=config.ftol_rel, nugget=config.fixed_nugget,
                             optimizer=config.optimizer)
            pred = km.predict(Xte)
            res.theta, res.nugget = km.theta, km.nugget
        else:
            lm = fit_linear_aic(Xtr, train.y, config.linear_max_steps)
            pred = lm.predict(Xte)
            res.n_coefficients = lm.n_coefficients
        res.kendall_tau, res.status = _score(pred, test.y)
    except Exception as exc:  # one failed cell must not sink the rest
        log.warning("%s/%s failed: %s", subset, model, exc)
        res.status = "failed"
        res.error = f"{type(exc).__name__}: {exc}"
    return res


def evaluate_models(data: Dataset, config: EvalConfig, replication: int = 0,
                    n_hidden: int | None = None) -> list[EvalResult]:
    """Fit every requested subset x model kind on one split and score it on the rest."""
    config.validate()
    if n_hidden is None:
        n_hidden = int(data.meta.get("topology", {}).get("nHidden", 0))
    train, test = split_and_scale(data, config.train_size, config.seed)
    names = data.subset_names if config.subsets is None else sorted(config.subsets, key=subset_dim_order)
    results = []
    for name in names:
        if name not in data.subsets:
            raise KeyError(f"dataset has no subset {name!r}")
        for model in config.model_kinds:
            r = evaluate_subset(train, test, name, model, config)
            r.replication = replication
            r.n_hidden = n_hidden
            log.info("rep %d h%d %-10s %-7s tau=%.4f", replication, n_hidden, name, model, r.kendall_tau)
            results.append(r)
    return results


def pca_rows(data: Dataset, replication: int = 0, n_hidden: int | None = None,
             mode: str = "covariance", subsets=None) -> list[dict]:
    if n_hidden is None:
        n_hidden = int(data.meta.get("topology", {}).get("nHidden", 0))
    names = data.subset_names if subsets is None else sorted(subsets, key=subset_dim_order)
    return [{"replication": replication, "n_hidden": n_hidden, "subset": name,
             "dim": data.subsets[name].shape[1],
             "components": pca_components90(data.subsets[name], mode=mode)} for name in names]


# ---------------------------------------------------------------------------
# aggregation


def bootstrap_ci(values, level: float = 0.9, n_resamples: int = 1000, seed: int = 0,
                 statistic=np.median) -> tuple[float, float]:
    """Percentile bootstrap interval of ``statistic``; degenerate for fewer than two values."""
    values = np.asarray(values, dtype=np.float64)
    if len(values) == 0:
        return math.nan, math.nan
    if len(values) < 2 or np.ptp(values) == 0:
        v = float(statistic(values))
        return v, v
    res = stats.bootstrap((values,), statistic, n_resamples=n_resamples, confidence_level=level,
                          method="percentile", random_state=np.random.default_rng(seed))
    return float(res.confidence_interval.low), float(res.confidence_interval.high)


def _quartiles(v):
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return float(q1), float(med), float(q3)


@dataclass
class Summary:
    tau: list[dict] = field(default_factory=list)
    pca: list[dict] = field(default_factory=list)
    coefficients: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"tau": self.tau, "pca": self.pca, "coefficients": self.coefficients}


def aggregate_replications(results: list[EvalResult], pca: list[dict] | None = None,
                           seed: int = 0, n_resamples: int = 1000) -> Summary:
    """Medians, quartiles and bootstrap CIs per (subset, model, n_hidden)."""
    if not results:
        raise ValueError("no results to aggregate")
    summary = Summary()
    groups: dict[tuple, list[EvalResult]] = {}
    for r in results:
        groups.setdefault((r.n_hidden, r.model, r.subset), []).append(r)
    for (h, model, subset), rs in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1], subset_dim_order(kv[0][2]))):
        taus = np.array([r.kendall_tau for r in rs if r.status != "failed"])
        row = {"nHidden": h, "model": model, "subset": subset, "dim": rs[0].dim,
               "n": len(taus), "failed": len(rs) - len(taus),
               "replications": [r.replication for r in rs if r.status != "failed"],
               "values": [float(t) for t in taus]}
        if len(taus):
            row["q1"], row["median"], row["q3"] = _quartiles(taus)
            row["ciLow"], row["ciHigh"] = bootstrap_ci(taus, seed=seed, n_resamples=n_resamples)
        summary.tau.append(row)
        if model == "linear":
            counts = [r.n_coefficients for r in rs if r.n_coefficients is not None]
            if counts:
                summary.coefficients.append({"nHidden": h, "subset": subset, "dim": rs[0].dim,
                                             "values": counts, "median": float(np.median(counts))})
    pgroups: dict[tuple, list[dict]] = {}
    for row in pca or []:
        pgroups.setdefault((row["n_hidden"], row["subset"]), []).append(row)
    for (h, subset), rows in sorted(pgroups.items(), key=lambda kv: (kv[0][0], subset_dim_order(kv[0][1]))):
        counts = [r["components"] for r in rows]
        summary.pca.append({"nHidden": h, "subset": subset, "dim": rows[0]["dim"], "values": counts,
                            "replications": [r["replication"] for r in rows],
                            "median": float(np.median(counts))})
    return summary


def paired_differences(results: list[EvalResult], a: tuple[str, str], b: tuple[str, str],
                       n_hidden: int) -> np.ndarray:
    """Per-replication tau differences ``a - b``; each side is ``(subset, model)``."""
    def table(subset, model):
        return {r.replication: r.kendall_tau for r in results
                if r.subset == subset and r.model == model and r.n_hidden == n_hidden and r.status != "failed"}

    ta, tb = table(*a), table(*b)
    common = sorted(set(ta) & set(tb))
    return np.array([ta[k] - tb[k] for k in common])
