import pytest
from conftest import make_config

from driftlab.config import ConfigError, ExperimentConfig, SeriesConfig, load_config, preset_path
from driftlab.constants import PRESETS
from driftlab.drift import DriftMode
from driftlab.learners import Algorithm


def write_toml(tmp_path, text):
    path = tmp_path / "experiment.toml"
    path.write_text(text)
    return path


def test_minimal_config(tmp_path):
    cfg = load_config(write_toml(tmp_path, '[learner]\nalgorithm = "lms"\nstep_size = 0.01\n'))
    assert cfg.algorithm is Algorithm.LMS
    assert cfg.step_size() == 0.01
    assert cfg.environment.agents == 1
    assert cfg.drift.mode is DriftMode.COMMON
    assert cfg.source == str(tmp_path / "experiment.toml")


@pytest.mark.parametrize(
    "text, message",
    [
        ("[learner]\nstep_size = 0.01\n", "Missing required key 'learner.algorithm'"),
        ("[harness]\niterations = 10\n", "Missing required key 'learner.algorithm'"),
        ('[learner]\nalgorithm = "lms"\nstepsize = 0.1\n', "Unknown key 'learner.stepsize'"),
        ('[learner]\nalgorithm = "lms"\n[plots]\nsvg = true\n', "Unknown section 'plots'"),
        ('[learner]\nalgorithm = "newton"\n', "'learner.algorithm' must be one of"),
        ('[learner]\nalgorithm = "lms"\n[harness]\nwindow = 1.5\n', "'harness.window' must lie in"),
        ('[learner]\nalgorithm = "lms"\n[environment]\nagents = 3\n', "must be 1 for lms"),
        ('[learner]\nalgorithm = "lms"\n[environment]\nkind = "logistic"\n', "must be 'regression' for lms"),
        ('[learner]\nalgorithm = "lms"\n[drift]\nmean = [1.0, 2.0, 3.0]\n', "list of 2 values"),
        ('[learner]\nalgorithm = "lms"\nstep_size = -1.0\n', "'learner.step_size' must be positive"),
        ("[learner\n", "experiment.toml"),
    ],
)
def test_invalid_configs(tmp_path, text, message):
    with pytest.raises(ConfigError, match=message):
        cfg = load_config(write_toml(tmp_path, text))
        cfg.drift.to_spec(cfg.environment.dimension)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="Config file not found"):
        load_config(tmp_path / "nope.toml")


def test_missing_step_size():
    cfg = make_config(learner={"algorithm": "lms", "step_size": None})
    with pytest.raises(ConfigError, match="learner.step_size"):
        cfg.step_size()


@pytest.mark.parametrize("name", PRESETS)
def test_presets_load(name):
    assert preset_path(name).exists()
    cfg = load_config(name)
    assert cfg.source == str(preset_path(name))
    assert cfg.sweep.grid()


def test_fig2_preset():
    cfg = load_config("fig2")
    assert cfg.algorithm is Algorithm.DIFFUSION
    assert (cfg.environment.agents, cfg.environment.dimension) == (5, 3)
    assert [s.label for s in cfg.series] == ["zero_mean", "biased"]
    assert set(cfg.sweep.ranges) == {"small", "large"}


def test_fig1_preset():
    cfg = load_config("fig1")
    assert cfg.algorithm is Algorithm.MULTITASK
    assert cfg.environment.agents == 20
    low, high = (cfg.with_series(s).drift.variance for s in cfg.series)
    assert high == pytest.approx(10 * low)


def test_iterations_for():
    cfg = make_config(harness={"iterations": 100, "horizon": 5.0})
    assert cfg.harness.iterations_for(0.1) == 100
    assert cfg.harness.iterations_for(0.01) == 500
    assert make_config().harness.iterations_for(1e-6) == 200


def test_sweep_grid():
    assert make_config(sweep={"mu": [0.1, 0.01]}).sweep.grid() == [0.1, 0.01]
    grid = make_config(sweep={"mu_min": 1e-3, "mu_max": 1e-1, "points": 3}).sweep.grid()
    assert grid == pytest.approx([1e-3, 1e-2, 1e-1])
    with pytest.raises(ConfigError, match="needs either 'mu'"):
        make_config().sweep.grid()
    with pytest.raises(ConfigError, match="Invalid grid range"):
        make_config(sweep={"mu_min": 1e-1, "mu_max": 1e-3}).sweep.grid()


def test_series_apply():
    cfg = make_config(drift={"mean": 0.5, "variance": 1e-4})
    moved = cfg.with_series(SeriesConfig("biased", mean=0.1))
    assert moved.drift.mean == 0.1
    assert moved.drift.variance == 1e-4
    with pytest.raises(ConfigError, match="'series.label' must be unique"):
        make_config(series=[{"label": "a"}, {"label": "a"}])


def test_with_harness():
    cfg = make_config()
    assert cfg.with_harness(seed=None, workers=None) is cfg
    assert cfg.with_harness(seed=9).harness.seed == 9
    with pytest.raises(ConfigError, match="'harness.workers' must be at least 1"):
        cfg.with_harness(workers=0)


def test_hash_and_round_trip():
    cfg = make_config(series=[{"label": "slow", "variance": 1e-6}])
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert again == cfg
    assert again.hash() == cfg.hash()
    assert cfg.with_harness(seed=4).hash() != cfg.hash()
    assert "step_size" in cfg.to_dict()["learner"]
    assert "bandwidth" not in cfg.to_dict()["environment"]
