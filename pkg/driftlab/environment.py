import logging
from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from enum import StrEnum
from functools import cached_property
from typing import NamedTuple, Self

import numpy as np
import scipy.linalg
from scipy.special import expit

from .bounds import ProblemConstants
from .drift import DriftSpec
from .graphs import Network, smooth_signal
from .types import FloatArray

logger = logging.getLogger("driftlab")


class Reference(StrEnum):
    MODEL = "model"
    PARETO = "pareto"


@dataclass(frozen=True)
class DataSample:
    """
    One observation per agent.

    ``features`` has shape ``(..., K, M)`` and ``response`` shape ``(..., K)``.
    For logistic environments the response is the label, +1 or -1.
    """

    features: FloatArray
    response: FloatArray

    @property
    def label(self) -> FloatArray:
        return self.response

    def agent(self, k: int) -> "DataSample":
        return DataSample(self.features[..., k, :], self.response[..., k])


class Innovations(NamedTuple):
    """
    Pre-drawn randomness of ``steps`` consecutive iterations.

    Shapes: increments ``(steps, K or 1, M)``, features ``(steps, K, M)``, noise ``(steps, K)``.
    """

    increments: FloatArray
    features: FloatArray
    noise: FloatArray

    @classmethod
    def stack(cls, parts: Sequence["Innovations"]) -> "Innovations":
        """Stack the innovations of several replicas along a new replica axis (axis 1)."""
        return cls(*(np.stack(arrays, axis=1) for arrays in zip(*parts, strict=True)))


def _check_covariance(covariance: FloatArray, dimension: int) -> FloatArray:
    covariance = np.asarray(covariance, dtype=np.float64)
    if covariance.shape != (dimension, dimension):
        raise ValueError(f"Covariance must be {dimension}x{dimension}, got shape {covariance.shape}")
    if not np.allclose(covariance, covariance.T, rtol=0, atol=1e-12):
        raise ValueError("Covariance must be symmetric")
    if scipy.linalg.eigvalsh(covariance)[0] <= 0:
        raise ValueError("Covariance must be positive definite")
    return covariance


@dataclass
class Environment(ABC):
    """
    A data-generating process whose optimum drifts as a random walk.

    ``fixed_points`` holds one model per agent, shape ``(K, M)``; a leading
    replica axis is allowed so that several replicas advance together. It only
    changes through :meth:`advance`.
    """

    fixed_points: FloatArray
    drift: DriftSpec
    covariance: FloatArray

    def __post_init__(self) -> None:
        self.fixed_points = np.array(self.fixed_points, dtype=np.float64, ndmin=2)
        if self.fixed_points.shape[-1] != self.drift.dimension:
            raise ValueError(
                f"Fixed points have dimension {self.fixed_points.shape[-1]}, drift has {self.drift.dimension}"
            )
        self.covariance = _check_covariance(self.covariance, self.dimension)

    @property
    def agents(self) -> int:
        return self.fixed_points.shape[-2]

    @property
    def dimension(self) -> int:
        return self.fixed_points.shape[-1]

    @cached_property
    def _cholesky(self) -> FloatArray:
        return scipy.linalg.cholesky(self.covariance, lower=True)

    def advance(self, increments: FloatArray) -> None:
        self.fixed_points = self.fixed_points + increments

    def draw_features(self, rng: np.random.Generator, steps: int | None = None) -> FloatArray:
        shape: tuple[int, ...] = (self.agents, self.dimension)
        if steps is not None:
            shape = (steps, *shape)
        return rng.standard_normal(shape) @ self._cholesky.T

    @abstractmethod
    def draw_noise(self, rng: np.random.Generator, steps: int | None = None) -> FloatArray:
        pass

    @abstractmethod
    def respond(self, features: FloatArray, noise: FloatArray) -> DataSample:
        """Responses of the current fixed points to ``features`` under observation ``noise``."""

    @abstractmethod
    def problem_constants(self, c1: float = 1.0, c2: float = 1.0, *, exact: bool = False) -> ProblemConstants:
        pass

    def draw_innovations(self, rng: np.random.Generator, steps: int) -> Innovations:
        # draw order is part of the reproducibility contract
        increments = self.drift.draw(rng, self.agents, steps)
        features = self.draw_features(rng, steps)
        noise = self.draw_noise(rng, steps)
        return Innovations(increments, features, noise)

    def reference(self, kind: Reference | str = Reference.MODEL, perron: FloatArray | None = None) -> FloatArray:
        """
        The point deviations are measured against, same shape as ``fixed_points``.

        ``pareto`` is the p-weighted combination of the local models, the
        minimizer of the network objective when all agents share ``R_u``.
        """
        if Reference(kind) is Reference.MODEL:
            return self.fixed_points
        raise ValueError(f"{type(self).__name__} has no closed-form Pareto solution")

    def stack(self, replicas: int) -> Self:
        """A copy holding ``replicas`` identical replicas of the fixed points along a new leading axis."""
        points = np.broadcast_to(self.fixed_points, (replicas, *self.fixed_points.shape)).copy()
        return replace(self, fixed_points=points)


@dataclass
class LinearRegressionEnv(Environment):
    """``d = u^T w + v`` with ``u ~ N(0, R_u)`` and ``v ~ N(0, noise_variance)``."""

    noise_variance: float = 1.0

    def __post_init__(self) -> None:
        super().__post_init__()
        if not self.noise_variance >= 0:
            raise ValueError(f"noise_variance must be nonnegative, got {self.noise_variance!r}")

    def draw_noise(self, rng: np.random.Generator, steps: int | None = None) -> FloatArray:
        shape: tuple[int, ...] = (self.agents,) if steps is None else (steps, self.agents)
        return rng.standard_normal(shape)

    def respond(self, features: FloatArray, noise: FloatArray) -> DataSample:
        clean = np.sum(features * self.fixed_points, axis=-1)
        return DataSample(features, clean + np.sqrt(self.noise_variance) * noise)

    def reference(self, kind: Reference | str = Reference.MODEL, perron: FloatArray | None = None) -> FloatArray:
        if Reference(kind) is Reference.MODEL:
            return self.fixed_points
        if perron is None:
            raise ValueError("The Pareto reference needs the Perron vector of the network")
        pareto = np.einsum("k,...km->...m", perron, self.fixed_points)
        return np.broadcast_to(pareto[..., None, :], self.fixed_points.shape)

    def problem_constants(self, c1: float = 1.0, c2: float = 1.0, *, exact: bool = False) -> ProblemConstants:
        return ProblemConstants.least_squares(
            self.covariance, self.noise_variance, self.fixed_points, exact=exact, c1=c1, c2=c2
        )


@dataclass
class LogisticEnv(Environment):
    """Labels ``+1`` with probability ``sigmoid(h^T w)``, ``-1`` otherwise; costs carry ``rho ||w||^2``."""

    regularization: float = field(default=1e-3)

    def __post_init__(self) -> None:
        super().__post_init__()
        if not self.regularization > 0:
            raise ValueError(f"Logistic regularization must be positive, got {self.regularization!r}")

    def draw_noise(self, rng: np.random.Generator, steps: int | None = None) -> FloatArray:
        shape: tuple[int, ...] = (self.agents,) if steps is None else (steps, self.agents)
        return rng.random(shape)

    def respond(self, features: FloatArray, noise: FloatArray) -> DataSample:
        probability = expit(np.sum(features * self.fixed_points, axis=-1))
        return DataSample(features, np.where(noise < probability, 1.0, -1.0))

    def problem_constants(self, c1: float = 1.0, c2: float = 1.0, *, exact: bool = False) -> ProblemConstants:
        return ProblemConstants.logistic(self.covariance, self.regularization, self.fixed_points, c1=c1, c2=c2)


def drift_step(env: Environment, rng: np.random.Generator) -> Environment:
    """Move every fixed point by one random-walk increment."""
    env.advance(env.drift.draw(rng, env.agents))
    return env


def sample(env: Environment, rng: np.random.Generator) -> DataSample:
    features = env.draw_features(rng)
    return env.respond(features, env.draw_noise(rng))


class EnvironmentKind(StrEnum):
    REGRESSION = "regression"
    LOGISTIC = "logistic"


class InitKind(StrEnum):
    COMMON = "common"
    SPREAD = "spread"
    SMOOTH = "smooth"


def initial_fixed_points(
    kind: InitKind | str,
    agents: int,
    dimension: int,
    rng: np.random.Generator,
    *,
    scale: float = 1.0,
    spread: float = 0.0,
    network: Network | None = None,
    bandwidth: int = 1,
) -> FloatArray:
    """
    Starting models of the agents, shape ``(K, M)``.

    ``common`` shares one model of norm ``scale``; ``spread`` adds an
    independent perturbation of RMS norm ``spread`` per agent; ``smooth``
    draws a graph-smooth signal of RMS norm ``scale`` over ``network``.
    """
    match InitKind(kind):
        case InitKind.COMMON | InitKind.SPREAD:
            direction = rng.standard_normal(dimension)
            points = np.tile(scale * direction / np.linalg.norm(direction), (agents, 1))
            if InitKind(kind) is InitKind.SPREAD:
                points += spread * rng.standard_normal((agents, dimension)) / np.sqrt(dimension)
        case InitKind.SMOOTH:
            if network is None or network.agents != agents:
                raise ValueError("Smooth initialisation needs the network of the agents")
            points = smooth_signal(network.laplacian, bandwidth, scale, rng, dimension)
    return points


def make_environment(
    kind: EnvironmentKind | str,
    fixed_points: FloatArray,
    drift: DriftSpec,
    covariance: FloatArray,
    *,
    noise_variance: float = 1.0,
    regularization: float = 1e-3,
) -> Environment:
    match EnvironmentKind(kind):
        case EnvironmentKind.REGRESSION:
            return LinearRegressionEnv(fixed_points, drift, covariance, noise_variance=noise_variance)
        case EnvironmentKind.LOGISTIC:
            return LogisticEnv(fixed_points, drift, covariance, regularization=regularization)
