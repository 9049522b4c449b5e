"""Fixed-topology feed-forward controllers and their sampled phenotypes.

Genome layout (flat float64 vector): the hidden layer first, one row per hidden
unit holding ``n_inputs`` input weights followed by the bias; then the output
layer, one row per output unit holding ``n_hidden`` weights followed by the
bias.  Both layers use tanh.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .maze import N_BEACON, N_RANGEFINDERS, N_SENSORS, RobotState, rollout_batch, sense

WEIGHT_BOUND = 4.0
INIT_BOUND = 1.0


@dataclass(frozen=True)
class NetTopology:
    n_inputs: int = N_SENSORS
    n_hidden: int = 2
    n_outputs: int = 2

    def __post_init__(self):
        if min(self.n_inputs, self.n_hidden, self.n_outputs) < 1:
            raise ValueError(f"all layer sizes must be >= 1, got {self}")

    @property
    def weight_count(self) -> int:
        return (self.n_inputs + 1) * self.n_hidden + (self.n_hidden + 1) * self.n_outputs

    def unpack(self, genome: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Split a genome into ``(W1, W2)`` with the bias as the last column."""
        g = check_genome(genome, self)
        split = (self.n_inputs + 1) * self.n_hidden
        w1 = g[:split].reshape(self.n_hidden, self.n_inputs + 1)
        w2 = g[split:].reshape(self.n_outputs, self.n_hidden + 1)
        return w1, w2

    def to_json(self) -> dict:
        return {"nInputs": self.n_inputs, "nHidden": self.n_hidden, "nOutputs": self.n_outputs}

    @classmethod
    def from_json(cls, doc: dict) -> "NetTopology":
        return cls(int(doc["nInputs"]), int(doc["nHidden"]), int(doc["nOutputs"]))


@dataclass(frozen=True)
class ProbeSequence:
    inputs: np.ndarray  # (k, n_inputs)
    seed: int | None = None
    mode: str = "uniform"

    @property
    def k(self) -> int:
        return self.inputs.shape[0]


def check_genome(genome, topology: NetTopology) -> np.ndarray:
    g = np.asarray(genome, dtype=np.float64)
    if g.ndim != 1 or g.shape[0] != topology.weight_count:
        raise ValueError(f"genome must have {topology.weight_count} weights, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise ValueError("genome contains non-finite weights")
    return g


def random_genome(topology: NetTopology, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    shape = topology.weight_count if size is None else (size, topology.weight_count)
    return rng.uniform(-INIT_BOUND, INIT_BOUND, shape)


def forward(genome, topology: NetTopology, x) -> np.ndarray:
    w1, w2 = topology.unpack(genome)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (topology.n_inputs,):
        raise ValueError(f"input must have length {topology.n_inputs}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite values")
    hidden = np.tanh(w1[:, :-1] @ x + w1[:, -1])
    return np.tanh(w2[:, :-1] @ hidden + w2[:, -1])


def sample_phenotype(genome, topology: NetTopology, probe: ProbeSequence) -> np.ndarray:
    """Concatenated outputs over the probe inputs, length ``k * n_outputs``."""
    if probe.inputs.shape[1] != topology.n_inputs:
        raise ValueError(f"probe width {probe.inputs.shape[1]} != {topology.n_inputs} inputs")
    w1, w2 = topology.unpack(genome)
    hidden = np.tanh(probe.inputs @ w1[:, :-1].T + w1[:, -1])
    out = np.tanh(hidden @ w2[:, :-1].T + w2[:, -1])
    return out.reshape(-1)


def sample_phenotypes(genomes, topology: NetTopology, probe: ProbeSequence) -> np.ndarray:
    # one genome at a time so a row never depends on the rest of the batch
    out = np.empty((len(genomes), probe.k * topology.n_outputs))
    for i, g in enumerate(genomes):
        out[i] = sample_phenotype(g, topology, probe)
    return out


def _sensor_box(rng: np.random.Generator, k: int) -> np.ndarray:
    inputs = np.zeros((k, N_SENSORS))
    inputs[:, :N_RANGEFINDERS] = rng.uniform(0.0, 1.0, (k, N_RANGEFINDERS))
    quadrant = rng.integers(0, N_BEACON, k)
    inputs[np.arange(k), N_RANGEFINDERS + quadrant] = 1.0
    return inputs


def draw_probe(topology: NetTopology, k: int, seed: int) -> ProbeSequence:
    """Uniform probe over the sensor box: rangefinders in [0, 1], one-hot beacon."""
    if k < 1:
        raise ValueError("probe length k must be >= 1")
    if topology.n_inputs != N_SENSORS:
        raise ValueError(f"sensor probes need {N_SENSORS} inputs, topology has {topology.n_inputs}")
    inputs = _sensor_box(np.random.default_rng(seed), k)
    inputs.setflags(write=False)
    return ProbeSequence(inputs, int(seed), "uniform")


def harvest_probe(maze, genomes, topology: NetTopology, k: int, seed: int) -> ProbeSequence:
    """Probe made of sensor readings actually visited by ``genomes`` in ``maze``.

    Readings are collected along every trajectory and ``k`` of them are drawn
    without replacement (with replacement if fewer are available).
    """
    if k < 1:
        raise ValueError("probe length k must be >= 1")
    _, _, traj, heads = rollout_batch(maze, np.atleast_2d(genomes), topology, keep_trajectories=True)
    readings = []
    for b in range(traj.shape[0]):
        for t in range(traj.shape[1] - 1):
            readings.append(sense(maze, RobotState(traj[b, t], float(heads[b, t]))).as_vector())
    pool = np.asarray(readings)
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(pool), size=k, replace=len(pool) < k)
    inputs = pool[idx]
    inputs.setflags(write=False)
    return ProbeSequence(inputs, int(seed), "trajectory")


def mutate(genome, rate: float, sigma: float, rng: np.random.Generator,
           bound: float = WEIGHT_BOUND) -> np.ndarray:
    """Gaussian per-gene mutation with probability ``rate``, clamped to ``[-bound, bound]``."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError("mutation rate must lie in [0, 1]")
    if sigma <= 0:
        raise ValueError("mutation sigma must be positive")
    g = np.asarray(genome, dtype=np.float64)
    mask = rng.random(g.shape) < rate
    noise = rng.normal(0.0, sigma, g.shape)
    return np.where(mask, np.clip(g + noise, -bound, bound), g)
