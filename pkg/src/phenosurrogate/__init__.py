"""Phenotypic distances for surrogate models of evolved maze controllers."""
from ._accel import backend_name, use_backend
from .config import ExperimentConfig
from .controller import NetTopology, ProbeSequence, draw_probe, forward, mutate, sample_phenotype
from .dataset import Dataset, SchemaError, read_dataset, write_dataset
from .evaluation import EvalConfig, EvalResult, evaluate_models, kendall_tau, pca_components90
from .maze import MazeConfig, RobotState, build_maze, rollout, sense, step
from .qd import NicheGrid, QdConfig, run_map_elites

__version__ = "0.1.0"

__all__ = [
    "Dataset", "EvalConfig", "EvalResult", "ExperimentConfig", "MazeConfig", "NetTopology",
    "NicheGrid", "ProbeSequence", "QdConfig", "RobotState", "SchemaError", "backend_name",
    "build_maze", "draw_probe", "evaluate_models", "forward", "kendall_tau", "mutate",
    "pca_components90", "read_dataset", "rollout", "run_map_elites", "sample_phenotype", "sense",
    "step", "use_backend", "write_dataset",
]
