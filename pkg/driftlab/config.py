import dataclasses
import math
import tomllib
from dataclasses import dataclass, field, replace
from importlib.resources import files
from pathlib import Path
from typing import Any

import numpy as np

from ._utils import as_vector, config_hash, log_grid
from .constants import (
    DEFAULT_BLOCK_SIZE,
    DEFAULT_EDGE_PROBABILITY,
    DEFAULT_ITERATIONS,
    DEFAULT_REPLICAS,
    DEFAULT_SEED,
    DEFAULT_WINDOW,
    PRESETS,
)
from .drift import DriftMode, DriftSpec
from .environment import EnvironmentKind, InitKind, Reference
from .graphs import CombinationRule
from .learners import Algorithm
from .types import FloatArray


class ConfigError(ValueError):
    pass


def _choice(enum, value, key):
    try:
        return enum(value)
    except ValueError:
        options = ", ".join(repr(member.value) for member in enum)
        raise ConfigError(f"'{key}' must be one of {options}, got {value!r}") from None


def _floats(value, key) -> float | tuple[float, ...]:
    if isinstance(value, list | tuple):
        return tuple(float(v) for v in value)
    if isinstance(value, bool) or not isinstance(value, int | float):
        raise ConfigError(f"'{key}' must be a number or a list of numbers, got {value!r}")
    return float(value)


def _require(condition: bool, key: str, message: str) -> None:
    if not condition:
        raise ConfigError(f"'{key}' {message}")


@dataclass(frozen=True)
class EnvironmentConfig:
    kind: EnvironmentKind = EnvironmentKind.REGRESSION
    dimension: int = 2
    agents: int = 1
    # scalar or per-coordinate list; the covariance is diagonal
    regressor_variance: float | tuple[float, ...] = 1.0
    noise_variance: float = 1.0
    regularization: float = 1e-3
    init: InitKind = InitKind.COMMON
    init_scale: float = 1.0
    spread: float = 0.0
    bandwidth: int | None = None
    gradient: str = "stochastic"
    reference: Reference = Reference.MODEL

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", _choice(EnvironmentKind, self.kind, "environment.kind"))
        object.__setattr__(self, "init", _choice(InitKind, self.init, "environment.init"))
        object.__setattr__(self, "reference", _choice(Reference, self.reference, "environment.reference"))
        object.__setattr__(
            self, "regressor_variance", _floats(self.regressor_variance, "environment.regressor_variance")
        )
        _require(self.dimension >= 1, "environment.dimension", "must be positive")
        _require(self.agents >= 1, "environment.agents", "must be positive")
        _require(self.noise_variance >= 0, "environment.noise_variance", "must be nonnegative")
        _require(self.regularization > 0, "environment.regularization", "must be positive")
        _require(self.gradient in ("stochastic", "exact"), "environment.gradient", "must be 'stochastic' or 'exact'")
        if self.bandwidth is not None:
            _require(1 <= self.bandwidth <= self.agents, "environment.bandwidth", "must lie between 1 and agents")
        try:
            variances = as_vector(self.regressor_variance, self.dimension, "environment.regressor_variance")
        except ValueError as e:
            raise ConfigError(str(e)) from None
        _require(bool(np.all(variances > 0)), "environment.regressor_variance", "must be positive")

    @property
    def exact_gradient(self) -> bool:
        return self.gradient == "exact"

    def covariance(self) -> FloatArray:
        return np.diag(as_vector(self.regressor_variance, self.dimension, "regressor_variance"))


@dataclass(frozen=True)
class DriftConfig:
    mode: DriftMode = DriftMode.COMMON
    mean: float | tuple[float, ...] = 0.0
    variance: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", _choice(DriftMode, self.mode, "drift.mode"))
        object.__setattr__(self, "mean", _floats(self.mean, "drift.mean"))
        _require(self.variance >= 0, "drift.variance", "must be nonnegative")

    def to_spec(self, dimension: int) -> DriftSpec:
        try:
            return DriftSpec.create(dimension, self.mean, self.variance, self.mode)
        except ValueError as e:
            raise ConfigError(str(e)) from None


@dataclass(frozen=True)
class NetworkConfig:
    edge_probability: float = DEFAULT_EDGE_PROBABILITY
    rule: CombinationRule = CombinationRule.UNIFORM
    edge_list: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "rule", _choice(CombinationRule, self.rule, "network.rule"))
        _require(0 < self.edge_probability <= 1, "network.edge_probability", "must lie in (0, 1]")


@dataclass(frozen=True)
class LearnerConfig:
    algorithm: Algorithm
    step_size: float | None = None
    eta: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "algorithm", _choice(Algorithm, self.algorithm, "learner.algorithm"))
        if self.step_size is not None:
            _require(self.step_size > 0, "learner.step_size", "must be positive")
        _require(self.eta >= 0, "learner.eta", "must be nonnegative")


@dataclass(frozen=True)
class HarnessConfig:
    iterations: int = DEFAULT_ITERATIONS
    # when set, runs last at least horizon / mu iterations
    horizon: float | None = None
    replicas: int = DEFAULT_REPLICAS
    window: float = DEFAULT_WINDOW
    seed: int = DEFAULT_SEED
    block_size: int = DEFAULT_BLOCK_SIZE
    workers: int = 1

    def __post_init__(self) -> None:
        _require(self.iterations >= 1, "harness.iterations", "must be at least 1")
        _require(self.replicas >= 1, "harness.replicas", "must be at least 1")
        _require(0 < self.window < 1, "harness.window", "must lie in (0, 1)")
        _require(self.seed >= 0, "harness.seed", "must be nonnegative")
        _require(self.block_size >= 1, "harness.block_size", "must be at least 1")
        _require(self.workers >= 1, "harness.workers", "must be at least 1")
        if self.horizon is not None:
            _require(self.horizon > 0, "harness.horizon", "must be positive")

    def iterations_for(self, mu: float) -> int:
        if self.horizon is None:
            return self.iterations
        return max(self.iterations, math.ceil(self.horizon / mu))


@dataclass(frozen=True)
class SweepConfig:
    mu: tuple[float, ...] | None = None
    mu_min: float | None = None
    mu_max: float | None = None
    points: int = 10
    small_range: tuple[float, float] | None = None
    large_range: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.mu is not None:
            object.__setattr__(self, "mu", tuple(float(m) for m in self.mu))
            _require(len(self.mu) > 0, "sweep.mu", "must not be empty")
            _require(all(m > 0 for m in self.mu), "sweep.mu", "must contain positive step-sizes")
        for key in ("small_range", "large_range"):
            value = getattr(self, key)
            if value is not None:
                _require(len(value) == 2 and 0 < value[0] < value[1], f"sweep.{key}", "must be [low, high]")
                object.__setattr__(self, key, (float(value[0]), float(value[1])))

    def grid(self) -> list[float]:
        if self.mu is not None:
            return list(self.mu)
        if self.mu_min is None or self.mu_max is None:
            raise ConfigError("'sweep' needs either 'mu' or both 'mu_min' and 'mu_max'")
        try:
            return log_grid(self.mu_min, self.mu_max, self.points)
        except ValueError as e:
            raise ConfigError(f"'sweep': {e}") from None

    @property
    def ranges(self) -> dict[str, tuple[float, float]]:
        named = {"small": self.small_range, "large": self.large_range}
        return {name: bounds for name, bounds in named.items() if bounds is not None}


@dataclass(frozen=True)
class SeriesConfig:
    """A drift override; a sweep runs once per series."""

    label: str
    mean: float | tuple[float, ...] | None = None
    variance: float | None = None

    def __post_init__(self) -> None:
        if self.mean is not None:
            object.__setattr__(self, "mean", _floats(self.mean, "series.mean"))
        if self.variance is not None:
            _require(self.variance >= 0, "series.variance", "must be nonnegative")

    def apply(self, drift: DriftConfig) -> DriftConfig:
        return DriftConfig(
            mode=drift.mode,
            mean=drift.mean if self.mean is None else self.mean,
            variance=drift.variance if self.variance is None else self.variance,
        )


@dataclass(frozen=True)
class BoundsConfig:
    c1: float = 1.0
    c2: float = 1.0
    # overrides of the constants derived from the environment
    nu: float | None = None
    delta_lip: float | None = None
    alpha2: float | None = None
    beta2: float | None = None
    sigma_s2: float | None = None
    disagreement: float | None = None
    eta: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "eta", tuple(float(e) for e in self.eta))
        _require(self.c1 >= 0 and self.c2 >= 0, "bounds.c1", "and 'bounds.c2' must be nonnegative")

    def overrides(self) -> dict[str, float]:
        names = ("nu", "delta_lip", "alpha2", "beta2", "sigma_s2", "disagreement")
        return {name: getattr(self, name) for name in names if getattr(self, name) is not None}


@dataclass(frozen=True)
class OutputConfig:
    svg: bool = False
    # dashed zero-mean bound curves on the sweep chart
    svg_bounds: bool = False


_SECTIONS: dict[str, type] = {
    "environment": EnvironmentConfig,
    "drift": DriftConfig,
    "network": NetworkConfig,
    "learner": LearnerConfig,
    "harness": HarnessConfig,
    "sweep": SweepConfig,
    "bounds": BoundsConfig,
    "output": OutputConfig,
}


def _build_section(cls: type, name: str, data: Any) -> Any:
    if not isinstance(data, dict):
        raise ConfigError(f"'{name}' must be a table")
    known = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"Unknown key '{name}.{key}'")
    for f in dataclasses.fields(cls):
        if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING and f.name not in data:
            raise ConfigError(f"Missing required key '{name}.{f.name}'")
    try:
        return cls(**data)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid '{name}' section: {e}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    learner: LearnerConfig
    environment: EnvironmentConfig = field(default_factory=EnvironmentConfig)
    drift: DriftConfig = field(default_factory=DriftConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    harness: HarnessConfig = field(default_factory=HarnessConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    series: tuple[SeriesConfig, ...] = ()
    bounds: BoundsConfig = field(default_factory=BoundsConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    # where the config was read from; not part of the resolved config
    source: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        algorithm = self.learner.algorithm
        if algorithm in (Algorithm.LMS, Algorithm.SGD):
            _require(self.environment.agents == 1, "environment.agents", f"must be 1 for {algorithm}")
        if algorithm is Algorithm.LMS:
            _require(
                self.environment.kind is EnvironmentKind.REGRESSION,
                "environment.kind",
                "must be 'regression' for lms",
            )
            _require(not self.environment.exact_gradient, "environment.gradient", "must be 'stochastic' for lms")
        if self.environment.kind is EnvironmentKind.LOGISTIC:
            _require(not self.environment.exact_gradient, "environment.gradient", "must be 'stochastic' for logistic")
            _require(
                self.environment.reference is Reference.MODEL, "environment.reference", "must be 'model' for logistic"
            )
        labels = [s.label for s in self.series]
        _require(len(set(labels)) == len(labels), "series.label", "must be unique")

    @classmethod
    def from_dict(cls, data: dict[str, Any], source: str | None = None) -> "ExperimentConfig":
        if "learner" not in data or "algorithm" not in data.get("learner", {}):
            raise ConfigError("Missing required key 'learner.algorithm'")
        for name in data:
            if name not in _SECTIONS and name != "series":
                raise ConfigError(f"Unknown section '{name}'")

        sections = {name: _build_section(cls_, name, data[name]) for name, cls_ in _SECTIONS.items() if name in data}
        series = data.get("series", [])
        if not isinstance(series, list):
            raise ConfigError("'series' must be an array of tables ([[series]])")
        return cls(
            **sections,
            series=tuple(_build_section(SeriesConfig, "series", s) for s in series),
            source=source,
        )

    def to_dict(self) -> dict[str, Any]:
        """The resolved config as plain data, enums as their values and unset keys dropped."""

        def clean(value: Any) -> Any:
            if isinstance(value, dict):
                return {k: clean(v) for k, v in value.items() if v is not None}
            if isinstance(value, list | tuple):
                return [clean(v) for v in value]
            return value

        data = dataclasses.asdict(self)
        data.pop("source")
        if not data["series"]:
            data.pop("series")
        return clean(data)

    def hash(self) -> str:
        return config_hash(self.to_dict())

    @property
    def algorithm(self) -> Algorithm:
        return self.learner.algorithm

    def step_size(self) -> float:
        if self.learner.step_size is None:
            raise ConfigError("Missing required key 'learner.step_size'")
        return self.learner.step_size

    def with_step_size(self, mu: float) -> "ExperimentConfig":
        return replace(self, learner=replace(self.learner, step_size=mu))

    def with_series(self, series: SeriesConfig) -> "ExperimentConfig":
        return replace(self, drift=series.apply(self.drift))

    def with_harness(self, **changes: Any) -> "ExperimentConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        if not changes:
            return self
        try:
            return replace(self, harness=replace(self.harness, **changes))
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from None


def preset_path(name: str) -> Path:
    return Path(str(files("driftlab.presets") / f"{name}.toml"))


def load_config(path_or_preset: str | Path) -> ExperimentConfig:
    """
    Read an experiment file.

    Names of shipped presets (``fig1``, ``fig2``, ``lms``) are accepted in
    place of a path when no such file exists.
    """
    path = Path(path_or_preset)
    if not path.exists() and str(path_or_preset) in PRESETS:
        path = preset_path(str(path_or_preset))

    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None

    return ExperimentConfig.from_dict(data, source=str(path))
