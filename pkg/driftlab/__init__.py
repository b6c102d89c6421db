from .bounds import ContractionCertificate, ProblemConstants
from .config import ExperimentConfig, load_config
from .drift import DriftMode, DriftSpec
from .environment import DataSample, LinearRegressionEnv, LogisticEnv
from .graphs import Network
from .harness import MsdTrajectory
from .lab import Lab
from .learners import Algorithm, LearnerState

try:
    from ._version import __version__
except ImportError:
    pass

_lab_singleton = Lab()

run = _lab_singleton.run
sweep = _lab_singleton.sweep
bounds = _lab_singleton.bounds
set_workers = _lab_singleton.set_workers

__all__ = [
    "run",
    "sweep",
    "bounds",
    "set_workers",
    "load_config",
    "Algorithm",
    "ContractionCertificate",
    "DataSample",
    "DriftMode",
    "DriftSpec",
    "ExperimentConfig",
    "LearnerState",
    "LinearRegressionEnv",
    "LogisticEnv",
    "MsdTrajectory",
    "Network",
    "ProblemConstants",
    "__version__",
]
