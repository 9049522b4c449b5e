"""Experiment pipeline: archives -> datasets -> model evaluations -> summaries.

Run directory layout::

    <out>/config.json                resolved configuration
    <out>/data/rep00_h2/             one dataset per (replication, nHidden)
        weights.csv pheno_*.csv fitness.csv meta.json archive.json
    <out>/results/rep00_h2/          replication-private evaluation output
        results.csv pca.csv
    <out>/results.csv pca.csv        merged tables
    <out>/summary.json summary.csv pca_summary.csv fig6.json fig7.json fig8.json

Nothing written carries a timestamp, so identical configurations produce
byte-identical trees.
"""
from __future__ import annotations

import json
import logging
import math
import re
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import rng
from .config import ConfigError, ExperimentConfig
from .controller import NetTopology, draw_probe, harvest_probe
from .dataset import (META_FILE, SchemaError, check_dataset_dir, read_dataset, read_table,
                      subset_dim_order, write_dataset, write_table)
from .evaluation import (EvalResult, aggregate_replications, evaluate_models, evaluate_subset,
                         paired_differences, pca_rows, split_and_scale)
from .maze import build_maze
from .qd import NicheGrid, archive_to_dataset, run_map_elites

log = logging.getLogger(__name__)

CONFIG_FILE = "config.json"
ARCHIVE_FILE = "archive.json"
RESULTS_FILE = "results.csv"
PCA_FILE = "pca.csv"
RESULT_COLUMNS = [f.name for f in fields(EvalResult)]
PCA_COLUMNS = ["replication", "n_hidden", "subset", "dim", "components"]
_REP_DIR = re.compile(r"^rep(\d+)_h(\d+)$")


class PipelineError(RuntimeError):
    pass


def rep_name(replication: int, n_hidden: int) -> str:
    return f"rep{replication:02d}_h{n_hidden}"


def _dump_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_config(cfg: ExperimentConfig, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / CONFIG_FILE).write_text(cfg.dumps())


def _map(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(*it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, *zip(*items)))


# ---------------------------------------------------------------------------
# generate / phenotype


def _probes(cfg: ExperimentConfig, replication: int, topology: NetTopology, maze, genomes, ks):
    if cfg.probe_mode == "trajectory":
        return [harvest_probe(maze, genomes, topology, k, cfg.probe_seed(replication, k)) for k in ks]
    return [draw_probe(topology, k, cfg.probe_seed(replication, k)) for k in ks]


def _dataset_meta(cfg: ExperimentConfig, replication: int, n_hidden: int, qd_seed: int) -> dict:
    return {
        "replication": replication,
        "nHidden": n_hidden,
        "baseSeed": cfg.base_seed,
        "qdSeed": qd_seed,
        "qd": cfg.qd.to_json(),
        "maze": cfg.maze.to_json(),
    }


def _generate_one(cfg: ExperimentConfig, replication: int, n_hidden: int, out: str) -> str:
    directory = Path(out) / "data" / rep_name(replication, n_hidden)
    maze = build_maze(cfg.maze)
    topology = NetTopology(n_hidden=n_hidden)
    seed = cfg.qd_seed(replication, n_hidden)
    qd_cfg = replace(cfg.qd, seed=seed)
    grid = run_map_elites(maze, topology, qd_cfg)
    elites = grid.genomes[grid.occupied()]
    probes = _probes(cfg, replication, topology, maze, elites, cfg.probe_ks)
    data = archive_to_dataset(grid, topology, probes, _dataset_meta(cfg, replication, n_hidden, seed))
    if directory.exists():
        shutil.rmtree(directory)
    write_dataset(data, directory)
    _dump_json(directory / ARCHIVE_FILE, {"seed": seed, "qd": qd_cfg.to_json(),
                                          "digest": grid.digest(), "archive": grid.to_json()})
    log.info("%s: %d elites", directory.name, len(grid))
    return str(directory)


def generate(cfg: ExperimentConfig, out=None, jobs: int = 1) -> list[Path]:
    """Run MAP-Elites for every (replication, nHidden) and write one dataset each."""
    cfg.validate()
    out = Path(out or cfg.out)
    write_config(cfg, out)
    write_config(cfg, out / "data")
    items = [(cfg, r, h, str(out)) for r in range(cfg.replications) for h in cfg.hidden]
    return [Path(p) for p in _map(_generate_one, items, jobs)]


def dataset_dirs(out) -> list[Path]:
    root = Path(out) / "data"
    if not root.is_dir():
        raise SchemaError(f"{root}: no data directory (run generate first)")
    found = sorted((p for p in root.iterdir() if p.is_dir() and _REP_DIR.match(p.name)),
                   key=lambda p: tuple(int(g) for g in _REP_DIR.match(p.name).groups()))
    if not found:
        raise SchemaError(f"{root}: no replication datasets found")
    return found


def _rep_of(directory: Path) -> tuple[int, int]:
    m = _REP_DIR.match(directory.name)
    return int(m.group(1)), int(m.group(2))


def load_archive(directory) -> NicheGrid:
    path = Path(directory) / ARCHIVE_FILE
    if not path.exists():
        raise SchemaError(f"{directory}: missing {ARCHIVE_FILE}")
    return NicheGrid.from_json(json.loads(path.read_text())["archive"])


def resample_phenotypes(cfg: ExperimentConfig, out=None, ks=None) -> list[Path]:
    """Replace every dataset's phenotype files with fresh probes of sizes ``ks``."""
    cfg.validate()
    ks = tuple(ks or cfg.probe_ks)
    if min(ks) < 1 or len(set(ks)) != len(ks):
        raise SchemaError("probe sizes must be distinct positive integers")
    out = Path(out or cfg.out)
    dirs = dataset_dirs(out)
    maze = build_maze(cfg.maze)
    for d in dirs:
        replication, n_hidden = _rep_of(d)
        grid = load_archive(d)
        topology = NetTopology(n_hidden=n_hidden)
        meta = json.loads((d / META_FILE).read_text())
        elites = grid.genomes[grid.occupied()]
        probes = _probes(cfg, replication, topology, maze, elites, ks)
        meta.pop("probes", None)
        data = archive_to_dataset(grid, topology, probes, meta)
        for stale in d.glob("pheno_*.csv"):
            stale.unlink()
        write_dataset(data, d)
    return dirs


# ---------------------------------------------------------------------------
# evaluate / analyze


def _evaluate_one(cfg: ExperimentConfig, directory: str, out: str, subsets, models) -> str:
    d = Path(directory)
    replication, n_hidden = _rep_of(d)
    data = read_dataset(d, list(subsets) if subsets else None)
    ecfg = cfg.eval_config(cfg.split_seed(replication, n_hidden), subsets, models)
    results = evaluate_models(data, ecfg, replication, n_hidden)
    target = Path(out) / "results" / d.name
    target.mkdir(parents=True, exist_ok=True)
    write_table(target / RESULTS_FILE, [r.to_row() for r in results], RESULT_COLUMNS,
                {"table": "results", "replication": replication, "nHidden": n_hidden})
    _write_pca(target, data, replication, n_hidden, cfg.pca_mode)
    return str(target)


def _write_pca(target: Path, data, replication, n_hidden, mode) -> None:
    rows = pca_rows(data, replication, n_hidden, mode)
    write_table(target / PCA_FILE, rows, PCA_COLUMNS,
                {"table": "pca", "replication": replication, "nHidden": n_hidden, "mode": mode})


def _check_all(dirs: list[Path], subsets) -> None:
    problems = []
    for d in dirs:
        problems += [f"{d.name}: {p}" for p in check_dataset_dir(d)]
        for s in subsets or ():
            if not (d / f"{s}.csv").exists():
                problems.append(f"{d.name}: missing {s}.csv")
    if problems:
        raise SchemaError(problems)


def _select(dirs: list[Path], replications: int | None) -> list[Path]:
    if replications is None:
        return dirs
    return [d for d in dirs if _rep_of(d)[0] < replications]


def evaluate(cfg: ExperimentConfig, out=None, subsets=None, models=None, jobs: int = 1,
             replications: int | None = None) -> Path:
    """Fit and score every model on every dataset, then merge and report."""
    cfg.validate()
    try:
        cfg.eval_config(0, subsets, models).validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(out or cfg.out)
    dirs = _select(dataset_dirs(out), replications)
    _check_all(dirs, subsets)
    write_config(cfg, out / "results")
    items = [(cfg, str(d), str(out), tuple(subsets or ()), tuple(models or ())) for d in dirs]
    _map(_evaluate_one, items, jobs)
    merge(out)
    report(out)
    return out


def _analyze_one(cfg: ExperimentConfig, directory: str, out: str) -> str:
    d = Path(directory)
    replication, n_hidden = _rep_of(d)
    target = Path(out) / "results" / d.name
    target.mkdir(parents=True, exist_ok=True)
    _write_pca(target, read_dataset(d), replication, n_hidden, cfg.pca_mode)
    return str(target)


def analyze(cfg: ExperimentConfig, out=None, jobs: int = 1, replications: int | None = None) -> Path:
    """PCA component counts only."""
    cfg.validate()
    out = Path(out or cfg.out)
    dirs = _select(dataset_dirs(out), replications)
    _check_all(dirs, None)
    write_config(cfg, out / "results")
    _map(_analyze_one, [(cfg, str(d), str(out)) for d in dirs], jobs)
    _merge_table(out, PCA_FILE, PCA_COLUMNS, "pca")
    return out / PCA_FILE


def fit_single(cfg: ExperimentConfig, directory, subset: str, model: str) -> EvalResult:
    """One model on one dataset's split."""
    d = Path(directory)
    m = _REP_DIR.match(d.name)
    meta = json.loads((d / META_FILE).read_text()) if (d / META_FILE).exists() else {}
    replication = int(meta.get("replication", m.group(1) if m else 0))
    n_hidden = int(meta.get("nHidden", m.group(2) if m else 0))
    data = read_dataset(d, [subset])
    ecfg = cfg.eval_config(cfg.split_seed(replication, n_hidden), [subset], [model])
    ecfg.validate()
    train, test = split_and_scale(data, ecfg.train_size, ecfg.seed)
    res = evaluate_subset(train, test, subset, model, ecfg)
    res.replication, res.n_hidden = replication, n_hidden
    return res


# ---------------------------------------------------------------------------
# merging and reporting


def _merge_table(out: Path, name: str, columns: list[str], table: str) -> Path:
    parts = sorted((p for p in (out / "results").glob(f"rep*_h*/{name}")),
                   key=lambda p: _rep_of(p.parent))
    rows = []
    for p in parts:
        rows += read_table(p)[0]
    write_table(out / name, rows, columns, {"table": table})
    return out / name


def merge(out) -> None:
    out = Path(out)
    _merge_table(out, RESULTS_FILE, RESULT_COLUMNS, "results")
    _merge_table(out, PCA_FILE, PCA_COLUMNS, "pca")


def _opt_float(v):
    return None if v in (None, "") else float(v)


def _opt_int(v):
    return None if v in (None, "") else int(v)


def results_from_rows(rows: list[dict]) -> list[EvalResult]:
    out = []
    for r in rows:
        try:
            out.append(EvalResult(
                subset=r["subset"], model=r["model"], kendall_tau=float(r["kendall_tau"]),
                train_size=int(r["train_size"]), test_size=int(r["test_size"]),
                replication=int(r["replication"]), n_hidden=int(r["n_hidden"]),
                n_coefficients=_opt_int(r["n_coefficients"]), dim=int(r["dim"]),
                theta=_opt_float(r["theta"]), nugget=_opt_float(r["nugget"]),
                status=r["status"], error=r.get("error") or ""))
        except (KeyError, ValueError) as exc:
            raise SchemaError(f"{RESULTS_FILE}: malformed row {r!r} ({exc})") from None
    return out


def load_results(out) -> tuple[list[EvalResult], list[dict]]:
    out = Path(out)
    results = results_from_rows(read_table(out / RESULTS_FILE)[0])
    pca = []
    if (out / PCA_FILE).exists():
        for r in read_table(out / PCA_FILE)[0]:
            pca.append({"replication": int(r["replication"]), "n_hidden": int(r["n_hidden"]),
                        "subset": r["subset"], "dim": int(r["dim"]), "components": int(r["components"])})
    return results, pca


def _paired(results: list[EvalResult]) -> list[dict]:
    rows = []
    keys = sorted({(r.n_hidden, r.subset) for r in results}, key=lambda k: (k[0], subset_dim_order(k[1])))
    for h, subset in keys:
        diff = paired_differences(results, (subset, "kriging"), (subset, "linear"), h)
        if len(diff):
            rows.append({"nHidden": h, "subset": subset, "comparison": "kriging-linear",
                         "values": [float(v) for v in diff], "median": float(np.median(diff))})
    return rows


def _clean(x):
    # JSON has no NaN
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_clean(v) for v in x]
    return x


SUMMARY_COLUMNS = ["nHidden", "model", "subset", "dim", "n", "failed", "q1", "median", "q3", "ciLow", "ciHigh"]
PCA_SUMMARY_COLUMNS = ["nHidden", "subset", "dim", "median"]


def report(out, n_resamples: int | None = None) -> dict:
    """Aggregate merged results into summary tables and figure data (idempotent)."""
    out = Path(out)
    if not (out / RESULTS_FILE).exists():
        raise PipelineError(f"{out}: no {RESULTS_FILE} (run evaluate first)")
    results, pca = load_results(out)
    if not results:
        raise PipelineError(f"{out / RESULTS_FILE}: no results to report")
    base_seed = 0
    if (out / CONFIG_FILE).exists():
        cfg = ExperimentConfig.load(out / CONFIG_FILE)
        base_seed = cfg.base_seed
        n_resamples = n_resamples or cfg.bootstrap_resamples
    summary = aggregate_replications(results, pca, seed=rng.derive_seed(base_seed, "bootstrap"),
                                     n_resamples=n_resamples or 1000)
    doc = _clean(dict(summary.to_json(), pairedDifferences=_paired(results)))
    _dump_json(out / "summary.json", doc)
    write_table(out / "summary.csv", doc["tau"], SUMMARY_COLUMNS, {"table": "summary"})
    write_table(out / "pca_summary.csv", doc["pca"], PCA_SUMMARY_COLUMNS, {"table": "pca-summary"})
    _dump_json(out / "fig6.json", {"figure": "kendall-tau-by-subset", "y": "kendallTau",
                                   "series": doc["tau"]})
    _dump_json(out / "fig7.json", {"figure": "pca-components-by-subset", "y": "components90",
                                   "series": doc["pca"]})
    _dump_json(out / "fig8.json", {"figure": "linear-coefficients-by-subset", "y": "coefficients",
                                   "series": doc["coefficients"]})
    return doc
