"""Datasets of controllers and their on-disk layout.

A dataset directory holds ``weights.csv``, ``pheno_<dim>.csv`` (one per probe
size), ``fitness.csv`` and ``meta.json``.  Every CSV starts with a versioned
comment line carrying JSON metadata, then a column header, then one row per
controller.  Floats are written with ``repr`` so they round-trip exactly.
"""
from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CSV_MAGIC = "# phenosurrogate-csv"
CSV_VERSION = "1.0"
FITNESS_FILE = "fitness.csv"
META_FILE = "meta.json"
_PHENO = re.compile(r"^pheno_(\d+)$")


class SchemaError(ValueError):
    """Raised for malformed dataset files; ``problems`` itemizes every finding."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def phenotype_subset_name(dim: int) -> str:
    return f"pheno_{int(dim)}"


def subset_dim_order(name: str) -> tuple[int, int]:
    """Sort key: ``weights`` first, then phenotypes by dimension."""
    m = _PHENO.match(name)
    return (1, int(m.group(1))) if m else (0, 0)


@dataclass
class Dataset:
    subsets: dict[str, np.ndarray]
    y: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.float64)
        rows = len(self.y)
        for name, X in self.subsets.items():
            if X.ndim != 2 or X.shape[0] != rows:
                raise SchemaError(f"subset {name} has shape {X.shape}, expected {rows} rows")
        if not np.all(np.isfinite(self.y)) or np.any(self.y < 0):
            raise SchemaError("fitness values must be finite and non-negative")

    @property
    def n_rows(self) -> int:
        return len(self.y)

    @property
    def subset_names(self) -> list[str]:
        return sorted(self.subsets, key=subset_dim_order)


def write_csv(path, matrix: np.ndarray, columns: list[str], meta: dict) -> None:
    header = dict(meta)
    header["schema"] = CSV_VERSION
    with open(path, "w", newline="") as fh:
        fh.write(f"{CSV_MAGIC} {json.dumps(header, sort_keys=True)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in np.atleast_2d(matrix):
            writer.writerow([repr(float(v)) for v in row])


def read_csv(path) -> tuple[np.ndarray, list[str], dict]:
    path = Path(path)
    with open(path, newline="") as fh:
        first = fh.readline().rstrip("\n")
        if not first.startswith(CSV_MAGIC + " "):
            raise SchemaError(f"{path.name}: missing '{CSV_MAGIC}' header line")
        try:
            meta = json.loads(first[len(CSV_MAGIC) + 1:])
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path.name}: unreadable header metadata ({exc})") from None
        version = str(meta.get("schema", ""))
        if version.split(".")[0] != CSV_VERSION.split(".")[0]:
            raise SchemaError(f"{path.name}: unsupported schema version {version!r}")
        reader = csv.reader(fh)
        columns = next(reader, None)
        if columns is None:
            raise SchemaError(f"{path.name}: missing column header")
        rows = [[float(v) for v in r] for r in reader if r]
    data = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(columns))
    return data, columns, meta


def write_dataset(ds: Dataset, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    common = {"topology": ds.meta.get("topology"), "rows": ds.n_rows}
    probes = {phenotype_subset_name(p["k"] * ds.meta["topology"]["nOutputs"]): p
              for p in ds.meta.get("probes", [])} if ds.meta.get("topology") else {}
    for name in ds.subset_names:
        X = ds.subsets[name]
        prefix = "w" if name == "weights" else "o"
        meta = dict(common, subset=name)
        if name in probes:
            meta["probe"] = probes[name]
        write_csv(directory / f"{name}.csv", X, [f"{prefix}{i}" for i in range(X.shape[1])], meta)
    write_csv(directory / FITNESS_FILE, ds.y[:, None], ["fitness"], dict(common, subset="fitness"))
    (directory / META_FILE).write_text(json.dumps(ds.meta, indent=2, sort_keys=True) + "\n")


def check_dataset_dir(directory) -> list[str]:
    """Itemized list of schema problems (empty when the directory is usable)."""
    directory = Path(directory)
    problems = []
    if not directory.is_dir():
        return [f"{directory}: not a directory"]
    for required in (FITNESS_FILE, META_FILE, "weights.csv"):
        if not (directory / required).exists():
            problems.append(f"missing {required}")
    if (directory / META_FILE).exists():
        try:
            json.loads((directory / META_FILE).read_text())
        except json.JSONDecodeError as exc:
            problems.append(f"{META_FILE}: invalid JSON ({exc})")
    return problems


def read_dataset(directory, subsets: list[str] | None = None) -> Dataset:
    directory = Path(directory)
    problems = check_dataset_dir(directory)
    if problems:
        raise SchemaError([f"{directory}: {p}" for p in problems])
    meta = json.loads((directory / META_FILE).read_text())
    y, _, _ = read_csv(directory / FITNESS_FILE)
    available = [p.stem for p in directory.glob("*.csv") if p.stem == "weights" or _PHENO.match(p.stem)]
    wanted = available if subsets is None else subsets
    missing = [s for s in wanted if s not in available]
    if missing:
        raise SchemaError([f"{directory}: missing {s}.csv" for s in missing])
    data = {}
    for name in wanted:
        X, _, _ = read_csv(directory / f"{name}.csv")
        if X.shape[0] != y.shape[0]:
            problems.append(f"{name}.csv has {X.shape[0]} rows, {FITNESS_FILE} has {y.shape[0]}")
        data[name] = X
    if problems:
        raise SchemaError([f"{directory}: {p}" for p in problems])
    return Dataset(data, y[:, 0], meta)


def write_table(path, rows: list[dict], columns: list[str], meta: dict) -> None:
    """Mixed-type table with the same versioned header line as the matrix files."""
    header = dict(meta)
    header["schema"] = CSV_VERSION
    with open(path, "w", newline="") as fh:
        fh.write(f"{CSV_MAGIC} {json.dumps(header, sort_keys=True)}\n")
        writer = csv.DictWriter(fh, columns, lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(row.get(k)) for k in columns})


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def read_table(path) -> tuple[list[dict], dict]:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"missing {path.name}")
    with open(path, newline="") as fh:
        first = fh.readline().rstrip("\n")
        if not first.startswith(CSV_MAGIC + " "):
            raise SchemaError(f"{path.name}: missing '{CSV_MAGIC}' header line")
        meta = json.loads(first[len(CSV_MAGIC) + 1:])
        version = str(meta.get("schema", ""))
        if version.split(".")[0] != CSV_VERSION.split(".")[0]:
            raise SchemaError(f"{path.name}: unsupported schema version {version!r}")
        return list(csv.DictReader(fh)), meta
