"""Experiment configuration (JSON) and per-replication seed derivation."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import rng
from .controller import NetTopology
from .evaluation import MODEL_KINDS, EvalConfig
from .maze import MazeConfig
from .qd import QdConfig

PAPER_PROBE_KS = (2, 4, 8, 16, 32, 64, 128, 256)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    maze: MazeConfig = field(default_factory=MazeConfig)
    hidden: tuple[int, ...] = (2, 5)
    qd: QdConfig = field(default_factory=QdConfig)
    probe_ks: tuple[int, ...] = PAPER_PROBE_KS
    probe_mode: str = "uniform"
    replications: int = 20
    base_seed: int = 0
    train_size: int = 400
    models: tuple[str, ...] = MODEL_KINDS
    mle_budget: int = 2000
    ftol_rel: float = 1e-16
    optimizer: str = "direct"
    fixed_nugget: float | None = None
    pca_mode: str = "covariance"
    bootstrap_resamples: int = 1000
    out: str = "runs"

    def validate(self) -> None:
        try:
            self.maze.validate()
            self.qd.validate()
            for h in self.hidden:
                NetTopology(n_hidden=h)
            self.eval_config(0).validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not self.hidden:
            raise ConfigError("need at least one hidden-layer size")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not self.probe_ks or min(self.probe_ks) < 1:
            raise ConfigError("probe sizes must be positive")
        if len(set(self.probe_ks)) != len(self.probe_ks):
            raise ConfigError("probe sizes must be distinct")
        if self.probe_mode not in ("uniform", "trajectory"):
            raise ConfigError(f"unknown probe mode {self.probe_mode!r}")
        if self.pca_mode not in ("covariance", "correlation"):
            raise ConfigError(f"unknown PCA mode {self.pca_mode!r}")

    # seeds -----------------------------------------------------------------

    def qd_seed(self, replication: int, n_hidden: int) -> int:
        return rng.derive_seed(self.base_seed, "replication", replication, n_hidden)

    def probe_seed(self, replication: int, k: int) -> int:
        # shared by both topologies of a replication
        return rng.derive_seed(self.base_seed, "probe", replication, k)

    def split_seed(self, replication: int, n_hidden: int) -> int:
        return rng.derive_seed(self.base_seed, "split", replication, n_hidden)

    def eval_config(self, seed: int, subsets=None, models=None) -> EvalConfig:
        return EvalConfig(
            train_size=self.train_size,
            seed=seed,
            subsets=tuple(subsets) if subsets else None,
            model_kinds=tuple(models) if models else self.models,
            mle_budget=self.mle_budget,
            ftol_rel=self.ftol_rel,
            optimizer=self.optimizer,
            fixed_nugget=self.fixed_nugget,
            pca_mode=self.pca_mode,
        )

    # JSON --------------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "maze": self.maze.to_json(),
            "hidden": list(self.hidden),
            "qd": self.qd.to_json(),
            "probeKs": list(self.probe_ks),
            "probeMode": self.probe_mode,
            "replications": self.replications,
            "baseSeed": self.base_seed,
            "trainSize": self.train_size,
            "models": list(self.models),
            "mleBudget": self.mle_budget,
            "ftolRel": self.ftol_rel,
            "optimizer": self.optimizer,
            "fixedNugget": self.fixed_nugget,
            "pcaMode": self.pca_mode,
            "bootstrapResamples": self.bootstrap_resamples,
            "out": self.out,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentConfig":
        simple = {
            "probeMode": "probe_mode",
            "replications": "replications",
            "baseSeed": "base_seed",
            "trainSize": "train_size",
            "mleBudget": "mle_budget",
            "ftolRel": "ftol_rel",
            "optimizer": "optimizer",
            "fixedNugget": "fixed_nugget",
            "pcaMode": "pca_mode",
            "bootstrapResamples": "bootstrap_resamples",
            "out": "out",
        }
        tuples = {"hidden": "hidden", "probeKs": "probe_ks", "models": "models"}
        unknown = set(doc) - set(simple) - set(tuples) - {"maze", "qd"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {simple[k]: v for k, v in doc.items() if k in simple}
        kwargs.update({tuples[k]: tuple(v) for k, v in doc.items() if k in tuples})
        try:
            if "maze" in doc:
                kwargs["maze"] = MazeConfig.from_json(doc["maze"])
            if "qd" in doc:
                kwargs["qd"] = QdConfig.from_json(doc["qd"])
            cfg = cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_json(doc)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        cfg = replace(self, **kw)
        cfg.validate()
        return cfg
