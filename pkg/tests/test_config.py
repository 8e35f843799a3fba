import pytest

from aerial_ris.config import ConfigError, ExperimentConfig, parse_seeds
from aerial_ris.schemes import DEFAULT_SOLVER


def test_empty_config_is_the_default_experiment(tmp_path):
    p = tmp_path / "empty.yaml"
    p.write_text("")
    cfg = ExperimentConfig.load(p)
    assert cfg == ExperimentConfig()
    assert cfg.seeds == tuple(range(10))
    assert [s.kind for s in cfg.schemes] == ["PLO", "PL", "PO"]
    assert cfg.solver == DEFAULT_SOLVER
    assert cfg.smoothing.p == -8.0
    assert cfg.scenario.n_users == 10 and cfg.scenario.z_bounds == (150.0, 300.0)


def test_nested_overrides(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(
        "scenario:\n  n_users: 4\n  z_bounds: [160, 250]\n"
        "solver:\n  max_iters: 20\n  tau: [1, 2, 3]\n"
        "smoothing:\n  p: -16\n"
        "schemes:\n  - PLO\n  - kind: pl\n    fixed_orientation: [0, 0.5, 0]\n"
        "seeds: [3, 1]\n"
    )
    cfg = ExperimentConfig.load(p)
    assert cfg.scenario.n_users == 4 and cfg.scenario.z_bounds == (160.0, 250.0)
    assert cfg.solver.max_iters == 20 and cfg.solver.tau == (1.0, 2.0, 3.0)
    assert cfg.solver.schedule == DEFAULT_SOLVER.schedule
    assert cfg.smoothing.p == -16.0
    assert [s.kind for s in cfg.schemes] == ["PLO", "PL"]
    assert cfg.schemes[1].fixed_orientation == (0.0, 0.5, 0.0)
    assert cfg.seeds == (3, 1)
    snap = cfg.snapshot()
    assert ExperimentConfig.from_mapping(snap) == cfg


@pytest.mark.parametrize(
    "text",
    [
        "bogus: 1\n",
        "scenario:\n  n_userz: 3\n",
        "scenario:\n  z_bounds: [300, 150]\n",
        "solver:\n  schedule: cosine\n",
        "smoothing:\n  p: 2\n",
        "schemes: []\n",
        "schemes:\n  - kind: PX\n",
        "seeds: 0\n",
        "starts: 0\n",
        "workers: two\n",
        "- just\n- a list\n",
        "scenario: [unclosed\n",
    ],
)
def test_bad_configs(tmp_path, text):
    p = tmp_path / "bad.yaml"
    p.write_text(text)
    with pytest.raises(ConfigError):
        ExperimentConfig.load(p)


def test_missing_file():
    with pytest.raises(ConfigError):
        ExperimentConfig.load("/nonexistent/config.yaml")


def test_parse_seeds():
    assert parse_seeds(3) == (0, 1, 2)
    assert parse_seeds("4,2, 7") == (4, 2, 7)
    assert parse_seeds([1, 1]) == (1, 1)
    for bad in ("", "a,b", -1, [-2], True):
        with pytest.raises(ConfigError):
            parse_seeds(bad)
