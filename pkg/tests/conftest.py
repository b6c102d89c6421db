import numpy as np
import pytest

from driftlab.config import ExperimentConfig


def pytest_addoption(parser):
    parser.addoption(
        "--integration",
        action="store_true",
        default=None,
        help="Run integration tests (full figure reproductions, several minutes).",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_config(**sections) -> ExperimentConfig:
    """An ExperimentConfig from plain section dicts, with a small default harness."""
    data = {
        "learner": {"algorithm": "lms", "step_size": 0.01},
        "environment": {"kind": "regression", "dimension": 2},
        "harness": {"iterations": 200, "replicas": 4, "block_size": 2, "seed": 3},
    }
    for name, values in sections.items():
        if isinstance(values, dict) and isinstance(data.get(name), dict):
            data[name] = {**data[name], **values}
        else:
            data[name] = values
    return ExperimentConfig.from_dict(data)


@pytest.fixture
def lms_config():
    return make_config()


@pytest.fixture
def diffusion_config():
    return make_config(
        learner={"algorithm": "diffusion", "step_size": 0.02},
        environment={"kind": "regression", "dimension": 3, "agents": 4, "init": "spread", "spread": 0.5},
        network={"edge_probability": 0.7},
        drift={"variance": 1e-5},
    )


@pytest.fixture
def multitask_config():
    return make_config(
        learner={"algorithm": "multitask", "step_size": 0.02, "eta": 0.05},
        environment={"kind": "logistic", "dimension": 2, "agents": 6, "init": "smooth", "bandwidth": 2},
        network={"edge_probability": 0.6},
        drift={"variance": 1e-5},
    )

