import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from phenosurrogate.dataset import (CSV_MAGIC, Dataset, SchemaError, read_csv, read_dataset, read_table,
                                    write_csv, write_dataset, write_table)


def _dataset(rng, n=7):
    return Dataset({"weights": rng.normal(size=(n, 22)), "pheno_4": rng.uniform(-1, 1, (n, 4))},
                   rng.uniform(0, 100, n),
                   {"topology": {"nInputs": 7, "nHidden": 2, "nOutputs": 2},
                    "probes": [{"k": 2, "seed": 99, "mode": "uniform"}]})


def test_round_trip(tmp_path, rng):
    ds = _dataset(rng)
    write_dataset(ds, tmp_path)
    back = read_dataset(tmp_path)
    assert back.subset_names == ["weights", "pheno_4"]
    for k in ds.subsets:
        assert np.array_equal(back.subsets[k], ds.subsets[k])
    assert np.array_equal(back.y, ds.y)
    assert back.meta == ds.meta
    header = json.loads((tmp_path / "pheno_4.csv").read_text().splitlines()[0][len(CSV_MAGIC) + 1:])
    assert header["probe"]["seed"] == 99 and header["schema"] == "1.0"


@given(arrays(np.float64, (3, 4), elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_csv_floats_exact(tmp_path_factory, M):
    path = tmp_path_factory.mktemp("csv") / "m.csv"
    write_csv(path, M, list("abcd"), {})
    back, cols, _ = read_csv(path)
    assert cols == list("abcd") and np.array_equal(back, M)


def test_missing_fitness_named(tmp_path, rng):
    write_dataset(_dataset(rng), tmp_path)
    (tmp_path / "fitness.csv").unlink()
    with pytest.raises(SchemaError) as err:
        read_dataset(tmp_path)
    assert any("fitness.csv" in p for p in err.value.problems)


def test_unknown_major_version_rejected(tmp_path, rng):
    write_dataset(_dataset(rng), tmp_path)
    path = tmp_path / "weights.csv"
    path.write_text(path.read_text().replace('"schema": "1.0"', '"schema": "2.0"', 1))
    with pytest.raises(SchemaError, match="version"):
        read_dataset(tmp_path)


def test_missing_header_rejected(tmp_path):
    (tmp_path / "x.csv").write_text("a,b\n1,2\n")
    with pytest.raises(SchemaError):
        read_csv(tmp_path / "x.csv")


def test_row_mismatch_reported(tmp_path, rng):
    write_dataset(_dataset(rng), tmp_path)
    write_csv(tmp_path / "pheno_4.csv", np.zeros((3, 4)), list("abcd"), {})
    with pytest.raises(SchemaError, match="rows"):
        read_dataset(tmp_path)


def test_subset_selection(tmp_path, rng):
    write_dataset(_dataset(rng), tmp_path)
    assert read_dataset(tmp_path, ["pheno_4"]).subset_names == ["pheno_4"]
    with pytest.raises(SchemaError, match="pheno_64"):
        read_dataset(tmp_path, ["pheno_64"])


def test_dataset_invariants(rng):
    with pytest.raises(SchemaError):
        Dataset({"weights": np.zeros((3, 2))}, np.ones(4))
    with pytest.raises(SchemaError):
        Dataset({"weights": np.zeros((2, 2))}, np.array([1.0, -1.0]))


def test_table_round_trip(tmp_path):
    rows = [{"a": 1, "b": 0.1, "c": None}, {"a": 2, "b": 1e-300, "c": "x"}]
    write_table(tmp_path / "t.csv", rows, ["a", "b", "c"], {"table": "t"})
    back, meta = read_table(tmp_path / "t.csv")
    assert meta["table"] == "t"
    assert back == [{"a": "1", "b": "0.1", "c": ""}, {"a": "2", "b": "1e-300", "c": "x"}]
