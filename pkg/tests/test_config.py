import json

import pytest

from phenosurrogate.config import ConfigError, ExperimentConfig
from phenosurrogate.rng import STREAMS, derive_seed, stream


def test_defaults_validate():
    cfg = ExperimentConfig()
    cfg.validate()
    assert cfg.hidden == (2, 5) and cfg.train_size == 400 and cfg.replications == 20
    assert [2 * k for k in cfg.probe_ks] == [4, 8, 16, 32, 64, 128, 256, 512]


def test_json_round_trip(tmp_path):
    cfg = ExperimentConfig(replications=3, base_seed=11, probe_ks=(2, 4), fixed_nugget=1e-6)
    path = tmp_path / "c.json"
    path.write_text(cfg.dumps())
    assert ExperimentConfig.load(path) == cfg


@pytest.mark.parametrize("doc", [
    {"replications": 0},
    {"hidden": []},
    {"probeKs": [2, 2]},
    {"models": ["svm"]},
    {"probeMode": "magic"},
    {"qd": {"batchSize": 0}},
    {"maze": {"radii": [10, 5, 30]}},
    {"bogus": 1},
    {"qd": {"speed": 3}},
])
def test_invalid_configs(doc):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(doc)


def test_invalid_json(tmp_path):
    (tmp_path / "c.json").write_text("{nope")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "c.json")


def test_seed_derivation():
    cfg = ExperimentConfig(base_seed=5)
    seeds = {cfg.qd_seed(r, h) for r in range(4) for h in (2, 5)}
    assert len(seeds) == 8
    assert cfg.probe_seed(1, 8) == ExperimentConfig(base_seed=5).probe_seed(1, 8)
    assert cfg.probe_seed(1, 8) != ExperimentConfig(base_seed=6).probe_seed(1, 8)
    assert cfg.split_seed(0, 2) != cfg.split_seed(0, 5)


def test_streams_independent():
    a = stream(1, "mutation").random(3)
    b = stream(1, "qd-select").random(3)
    assert not (a == b).all()
    assert (stream(1, "mutation").random(3) == a).all()
    assert derive_seed(0, "probe", 0, 2) != derive_seed(0, "probe", 0, 4)
    with pytest.raises(ValueError):
        stream(0, "nope")
    assert len(set(STREAMS.values())) == len(STREAMS)
