"""Named random streams.

Every stochastic stage draws from its own stream so that changing how much
randomness one stage consumes never perturbs another.  A stream is
``SeedSequence(seed, spawn_key=(STREAMS[name], *extra))``; for experiment runs
``extra`` starts with the replication index.
"""
from __future__ import annotations

import numpy as np

STREAMS = {
    "replication": 1,
    "qd-init": 2,
    "qd-select": 3,
    "mutation": 4,
    "probe": 5,
    "split": 6,
    "bootstrap": 7,
}


def _sequence(seed: int, name: str, extra) -> np.random.SeedSequence:
    try:
        code = STREAMS[name]
    except KeyError:
        raise ValueError(f"unknown random stream {name!r}") from None
    return np.random.SeedSequence(int(seed), spawn_key=(code, *(int(e) for e in extra)))


def stream(seed: int, name: str, *extra: int) -> np.random.Generator:
    return np.random.default_rng(_sequence(seed, name, extra))


def derive_seed(seed: int, name: str, *extra: int) -> int:
    """A 32-bit integer seed for ``name``; handy where a plain int must be stored."""
    return int(_sequence(seed, name, extra).generate_state(1)[0])
