import hashlib
import json
import shutil
from pathlib import Path

import pytest

from phenosurrogate import cli, pipeline
from phenosurrogate.config import ExperimentConfig
from phenosurrogate.dataset import read_dataset, read_table

TINY = {
    "qd": {"generations": 15, "initialRandom": 80},
    "replications": 2,
    "trainSize": 30,
    "mleBudget": 80,
    "bootstrapResamples": 100,
}


def tree_digest(root: Path) -> dict:
    return {str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    base = tmp_path_factory.mktemp("pipe")
    cfg_path = base / "tiny.json"
    cfg_path.write_text(json.dumps(TINY))
    out = base / "run"
    assert cli.main(["generate", "--config", str(cfg_path), "--out", str(out)]) == 0
    assert cli.main(["evaluate", "--out", str(out)]) == 0
    return base, cfg_path, out


def test_generate_layout(run_dir):
    _, _, out = run_dir
    names = sorted(p.name for p in (out / "data").iterdir() if p.is_dir())
    assert names == ["rep00_h2", "rep00_h5", "rep01_h2", "rep01_h5"]
    for d in ("", "data", "results"):
        assert (out / d / "config.json").exists()
    ds = read_dataset(out / "data" / "rep01_h5")
    assert ds.subset_names == ["weights"] + [f"pheno_{2 * k}" for k in (2, 4, 8, 16, 32, 64, 128, 256)]


def test_meta_echoes_probe_seeds(run_dir):
    _, cfg_path, out = run_dir
    cfg = ExperimentConfig.load(cfg_path)
    for rep in (0, 1):
        seeds = {}
        for h in (2, 5):
            meta = json.loads((out / "data" / f"rep{rep:02d}_h{h}" / "meta.json").read_text())
            assert meta["replication"] == rep and meta["nHidden"] == h
            seeds[h] = [p["seed"] for p in meta["probes"]]
            assert seeds[h] == [cfg.probe_seed(rep, k) for k in cfg.probe_ks]
        assert seeds[2] == seeds[5]  # one probe per replication, shared by both topologies


def test_archive_bundle(run_dir):
    _, _, out = run_dir
    doc = json.loads((out / "data" / "rep00_h2" / "archive.json").read_text())
    grid = pipeline.load_archive(out / "data" / "rep00_h2")
    assert doc["digest"] == grid.digest()
    assert {"seed", "qd", "archive"} <= set(doc)


def test_results_rows(run_dir):
    _, _, out = run_dir
    rows, meta = read_table(out / "results.csv")
    assert meta["table"] == "results"
    assert len(rows) == 4 * 18
    per_dir, _ = read_table(out / "results" / "rep00_h2" / "results.csv")
    assert len(per_dir) == 18
    assert {r["status"] for r in rows} <= {"ok", "constant-prediction"}


def test_report_outputs(run_dir):
    _, _, out = run_dir
    fig7 = json.loads((out / "fig7.json").read_text())
    subsets = {s["subset"] for s in fig7["series"]}
    assert "weights" in subsets and "pheno_512" in subsets
    summary = json.loads((out / "summary.json").read_text())
    row = summary["tau"][0]
    assert len(row["values"]) == 2 and row["median"] == pytest.approx(sum(row["values"]) / 2)
    fig8 = json.loads((out / "fig8.json").read_text())
    assert all(s["median"] <= 28 for s in fig8["series"])


def test_report_idempotent(run_dir):
    _, _, out = run_dir
    before = tree_digest(out)
    assert cli.main(["report", "--out", str(out)]) == 0
    assert tree_digest(out) == before


def test_full_pipeline_reproducible(run_dir, tmp_path):
    _, cfg_path, out = run_dir
    first = tree_digest(out)
    shutil.rmtree(out)
    assert cli.main(["generate", "--config", str(cfg_path), "--out", str(out), "--jobs", "2"]) == 0
    assert cli.main(["evaluate", "--out", str(out), "--jobs", "2"]) == 0
    assert tree_digest(out) == first


def test_subset_model_filter(run_dir, tmp_path):
    _, _, out = run_dir
    copy = tmp_path / "copy"
    shutil.copytree(out, copy)
    assert cli.main(["evaluate", "--out", str(copy), "--subset", "pheno_64", "--model", "kriging"]) == 0
    rows, _ = read_table(copy / "results.csv")
    assert len(rows) == 4
    assert {(r["subset"], r["model"]) for r in rows} == {("pheno_64", "kriging")}


def test_fit_prints_tau(run_dir, capsys):
    _, _, out = run_dir
    assert cli.main(["fit", "--out", str(out), "--subset", "pheno_8", "--model", "linear"]) == 0
    assert "tau=" in capsys.readouterr().out


def test_phenotype_and_analyze(run_dir, tmp_path):
    _, _, out = run_dir
    copy = tmp_path / "copy"
    shutil.copytree(out, copy)
    assert cli.main(["phenotype", "--out", str(copy), "--ks", "3,6"]) == 0
    ds = read_dataset(copy / "data" / "rep00_h2")
    assert ds.subset_names == ["weights", "pheno_6", "pheno_12"]
    meta = json.loads((copy / "data" / "rep00_h2" / "meta.json").read_text())
    assert [p["k"] for p in meta["probes"]] == [3, 6]
    assert cli.main(["analyze", "--out", str(copy)]) == 0
    rows, _ = read_table(copy / "pca.csv")
    assert len(rows) == 4 * 3


def test_missing_fitness_is_validation_error(run_dir, tmp_path, capsys):
    _, _, out = run_dir
    copy = tmp_path / "copy"
    shutil.copytree(out / "data", copy / "data")
    shutil.copy(out / "config.json", copy / "config.json")
    (copy / "data" / "rep01_h5" / "fitness.csv").unlink()
    assert cli.main(["evaluate", "--out", str(copy)]) == 1
    assert "fitness.csv" in capsys.readouterr().err


def test_exit_codes(tmp_path, capsys):
    assert cli.main(["report", "--out", str(tmp_path)]) == 2  # nothing to report
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"replications": -1}))
    assert cli.main(["generate", "--config", str(bad), "--out", str(tmp_path / "x")]) == 1
    assert not (tmp_path / "x").exists()  # rejected before any compute
    assert cli.main(["evaluate", "--out", str(tmp_path / "none")]) == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["generate", "--jobs", "many"])
    assert exc.value.code == 1


def test_empty_results_rejected(tmp_path):
    from phenosurrogate.dataset import write_table

    write_table(tmp_path / "results.csv", [], pipeline.RESULT_COLUMNS, {"table": "results"})
    assert cli.main(["report", "--out", str(tmp_path)]) == 2


def test_seed_override_changes_data(run_dir, tmp_path):
    _, cfg_path, out = run_dir
    other = tmp_path / "other"
    assert cli.main(["generate", "--config", str(cfg_path), "--out", str(other), "--seed", "7",
                     "--replications", "1"]) == 0
    assert sorted(p.name for p in (other / "data").iterdir() if p.is_dir()) == ["rep00_h2", "rep00_h5"]
    a = (out / "data" / "rep00_h2" / "fitness.csv").read_bytes()
    b = (other / "data" / "rep00_h2" / "fitness.csv").read_bytes()
    assert a != b
