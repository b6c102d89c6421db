import numpy as np
import pytest
from conftest import make_config

import driftlab
from driftlab.bounds import NonContractiveError
from driftlab.lab import Lab


def get_test_lab() -> Lab:
    return Lab()


def test_set_workers():
    lab = get_test_lab()
    assert lab.workers is None
    lab.set_workers(3)
    assert lab.workers == 3
    assert get_test_lab().workers is None
    with pytest.raises(ValueError, match="at least 1"):
        lab.set_workers(0)


def test_run_with_seed_override(lms_config):
    lab = get_test_lab()
    base = lab.run(lms_config)
    assert base.seed == 3
    reseeded = lab.run(lms_config, seed=8)
    assert reseeded.seed == 8
    assert not np.array_equal(base.values, reseeded.values)


def test_run_from_path(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text('[learner]\nalgorithm = "sgd"\nstep_size = 0.05\n[harness]\niterations = 50\nreplicas = 2\n')
    traj = get_test_lab().run(path)
    assert len(traj) == 50
    assert traj.replicas == 2


def test_sweep():
    results = get_test_lab().sweep(make_config(sweep={"mu": [0.01, 0.02]}))
    assert [row.mu for row in results["msd"]] == [0.01, 0.02]


def test_bounds_grids():
    cfg = make_config(
        learner={"algorithm": "multitask", "step_size": 0.01, "eta": 0.1},
        environment={"agents": 4},
        network={"edge_probability": 1.0},
        bounds={"eta": [0.0, 0.5]},
        sweep={"mu": [0.01, 0.02, 0.04]},
    )
    rows = get_test_lab().bounds(cfg)
    assert [(r.mu, r.eta) for r in rows] == [(mu, eta) for mu in (0.01, 0.02, 0.04) for eta in (0.0, 0.5)]
    assert all(r.algorithm == "multitask" for r in rows)

    single = get_test_lab().bounds(make_config())
    assert [(r.mu, r.eta) for r in single] == [(0.01, 0.0)]


def test_bounds_unstable():
    cfg = make_config(sweep={"mu": [0.01, 5.0]})
    with pytest.raises(NonContractiveError, match="mu=5"):
        get_test_lab().bounds(cfg)
    rows = get_test_lab().bounds(cfg, allow_unstable=True)
    assert [r.stable for r in rows] == [True, False]


def test_module_level_api(lms_config):
    assert driftlab.run.__self__ is driftlab.bounds.__self__
    traj = driftlab.run(lms_config, verbose=False)
    assert len(traj) == lms_config.harness.iterations
