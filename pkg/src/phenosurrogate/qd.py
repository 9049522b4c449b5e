"""MAP-Elites over end-position niches.

The archive is a ``rows x cols`` grid laid over the maze bounding box.  A
controller's niche is the cell holding its end position; its fitness is the
path length it travelled (lower is better).
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy import ndimage

from . import rng as rngs
from .controller import NetTopology, ProbeSequence, mutate, random_genome, sample_phenotypes
from .dataset import Dataset, phenotype_subset_name
from .maze import MazeMap, clearance, rollout_batch

log = logging.getLogger(__name__)


class QdError(RuntimeError):
    pass


@dataclass(frozen=True)
class QdConfig:
    generations: int = 5000
    batch_size: int = 16
    mutation_rate: float = 0.05
    mutation_sigma: float = 0.2
    initial_random: int = 200
    grid_rows: int = 20
    grid_cols: int = 20
    seed: int = 0

    def validate(self) -> None:
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if self.mutation_sigma <= 0:
            raise ValueError("mutation_sigma must be positive")
        if self.initial_random < 1:
            raise ValueError("initial_random must be >= 1")
        if self.grid_rows < 1 or self.grid_cols < 1:
            raise ValueError("grid must have at least one cell")

    def to_json(self) -> dict:
        return {_CAMEL[k]: v for k, v in asdict(self).items()}

    @classmethod
    def from_json(cls, doc: dict) -> "QdConfig":
        snake = {v: k for k, v in _CAMEL.items()}
        unknown = set(doc) - set(snake)
        if unknown:
            raise ValueError(f"unknown qd config keys: {sorted(unknown)}")
        return cls(**{snake[k]: v for k, v in doc.items()})


_CAMEL = {
    "generations": "generations",
    "batch_size": "batchSize",
    "mutation_rate": "mutationRate",
    "mutation_sigma": "mutationSigma",
    "initial_random": "initialRandom",
    "grid_rows": "gridRows",
    "grid_cols": "gridCols",
    "seed": "seed",
}


class NicheGrid:
    """Grid archive holding at most one elite per cell."""

    def __init__(self, rows: int, cols: int, bounds, weight_count: int):
        self.rows = int(rows)
        self.cols = int(cols)
        self.bounds = tuple(float(b) for b in bounds)
        n = self.rows * self.cols
        self.genomes = np.full((n, weight_count), np.nan)
        self.fitness = np.full(n, np.inf)
        self.end_positions = np.full((n, 2), np.nan)
        self.filled = np.zeros(n, dtype=bool)

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    def __len__(self) -> int:
        return int(self.filled.sum())

    def cell_of(self, position) -> int:
        xmin, ymin, xmax, ymax = self.bounds
        x, y = float(position[0]), float(position[1])
        col = int(np.floor((x - xmin) / (xmax - xmin) * self.cols))
        row = int(np.floor((y - ymin) / (ymax - ymin) * self.rows))
        col = min(max(col, 0), self.cols - 1)
        row = min(max(row, 0), self.rows - 1)
        return row * self.cols + col

    def insert(self, genome, fitness: float, end_position) -> bool:
        """Store the candidate if its cell is empty or it is strictly shorter."""
        cell = self.cell_of(end_position)
        if self.filled[cell] and not fitness < self.fitness[cell]:
            return False
        self.genomes[cell] = genome
        self.fitness[cell] = fitness
        self.end_positions[cell] = end_position
        self.filled[cell] = True
        return True

    def occupied(self) -> np.ndarray:
        return np.flatnonzero(self.filled)

    def to_json(self) -> dict:
        cells = []
        for c in self.occupied():
            cells.append({
                "cell": int(c),
                "endPosition": [float(v) for v in self.end_positions[c]],
                "fitness": float(self.fitness[c]),
                "weights": [float(w) for w in self.genomes[c]],
            })
        return {"rows": self.rows, "cols": self.cols, "bounds": list(self.bounds),
                "weightCount": self.genomes.shape[1], "cells": cells}

    @classmethod
    def from_json(cls, doc: dict) -> "NicheGrid":
        grid = cls(doc["rows"], doc["cols"], doc["bounds"], doc["weightCount"])
        for item in doc["cells"]:
            c = int(item["cell"])
            grid.genomes[c] = item["weights"]
            grid.fitness[c] = item["fitness"]
            grid.end_positions[c] = item["endPosition"]
            grid.filled[c] = True
        return grid

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps(self.to_json(), sort_keys=True).encode())
        return h.hexdigest()


def run_map_elites(maze: MazeMap, topology: NetTopology, config: QdConfig,
                   history: list | None = None,
                   on_generation: Callable[[int, NicheGrid], None] | None = None) -> NicheGrid:
    """Fill the niche grid; deterministic given ``config.seed``.

    ``history``, when given, receives one ``(generation, cell, fitness)`` tuple
    per successful insertion (generation 0 is the random seeding).
    """
    config.validate()
    grid = NicheGrid(config.grid_rows, config.grid_cols, maze.bounds, topology.weight_count)
    init_rng = rngs.stream(config.seed, "qd-init")
    select_rng = rngs.stream(config.seed, "qd-select")
    mutation_rng = rngs.stream(config.seed, "mutation")

    def commit(generation, genomes, ends, paths):
        # fixed child order keeps the archive deterministic
        for g, e, p in zip(genomes, ends, paths):
            if grid.insert(g, float(p), e) and history is not None:
                history.append((generation, grid.cell_of(e), float(p)))

    seeds = random_genome(topology, init_rng, config.initial_random)
    ends, paths = rollout_batch(maze, seeds, topology)
    commit(0, seeds, ends, paths)
    if len(grid) == 0:
        raise QdError("no niche filled after random seeding")

    for gen in range(1, config.generations + 1):
        occupied = grid.occupied()
        picks = occupied[select_rng.integers(0, len(occupied), config.batch_size)]
        children = np.stack([
            mutate(grid.genomes[c], config.mutation_rate, config.mutation_sigma, mutation_rng)
            for c in picks
        ])
        ends, paths = rollout_batch(maze, children, topology)
        commit(gen, children, ends, paths)
        if on_generation is not None:
            on_generation(gen, grid)
        if gen % 500 == 0:
            log.debug("generation %d: %d elites", gen, len(grid))
    return grid


def reachable_cells(maze: MazeMap, rows: int, cols: int, resolution: float = 0.25) -> np.ndarray:
    """Cells containing free space connected to the start, as a boolean mask.

    Free space is sampled on a lattice of spacing ``resolution``: a lattice
    point is free if its clearance is at least the robot radius.  The free
    component containing the start is found by 4-connected flood fill.
    """
    xmin, ymin, xmax, ymax = maze.bounds
    xs = np.arange(xmin + 0.5 * resolution, xmax, resolution)
    ys = np.arange(ymin + 0.5 * resolution, ymax, resolution)
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    free = (clearance(maze, pts) >= maze.config.robot_radius).reshape(X.shape)
    labels, _ = ndimage.label(free)
    si = int(np.argmin(np.abs(ys - maze.start[1])))
    sj = int(np.argmin(np.abs(xs - maze.start[0])))
    if labels[si, sj] == 0:
        raise QdError("start position is not in free space")
    reach = labels == labels[si, sj]
    col = np.minimum(((X - xmin) / (xmax - xmin) * cols).astype(int), cols - 1)
    row = np.minimum(((Y - ymin) / (ymax - ymin) * rows).astype(int), rows - 1)
    mask = np.zeros(rows * cols, dtype=bool)
    mask[(row * cols + col)[reach]] = True
    return mask


def coverage(grid: NicheGrid, reachable: np.ndarray) -> float:
    """Fraction of reachable cells holding an elite."""
    return float((grid.filled & reachable).sum() / reachable.sum())


def archive_to_dataset(grid: NicheGrid, topology: NetTopology, probes: list[ProbeSequence],
                       meta: dict | None = None) -> Dataset:
    """One row per elite (ascending cell index) across weights and every phenotype subset."""
    cells = grid.occupied()
    if len(cells) == 0:
        raise QdError("archive is empty")
    weights = grid.genomes[cells].copy()
    subsets = {"weights": weights}
    for probe in probes:
        name = phenotype_subset_name(probe.k * topology.n_outputs)
        if name in subsets:
            raise ValueError(f"duplicate phenotype size {name}")
        subsets[name] = sample_phenotypes(weights, topology, probe)
    info = dict(meta or {})
    info.setdefault("topology", topology.to_json())
    info.setdefault("probes", [{"k": p.k, "seed": p.seed, "mode": p.mode} for p in probes])
    info["cells"] = [int(c) for c in cells]
    return Dataset(subsets, grid.fitness[cells].copy(), info)
