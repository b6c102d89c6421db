from collections.abc import Callable
from dataclasses import dataclass, replace
from enum import StrEnum
from functools import partial
from typing import Protocol

import numpy as np
from scipy.special import expit

from .environment import DataSample, Environment, LinearRegressionEnv, LogisticEnv
from .types import FloatArray


class Algorithm(StrEnum):
    LMS = "lms"
    SGD = "sgd"
    DIFFUSION = "diffusion"
    MULTITASK = "multitask"

    @property
    def is_network(self) -> bool:
        return self in (Algorithm.DIFFUSION, Algorithm.MULTITASK)


class GradientEvaluator(Protocol):
    def __call__(self, w: FloatArray, sample: DataSample) -> FloatArray: ...


def _inner(a: FloatArray, b: FloatArray) -> FloatArray:
    return np.sum(a * b, axis=-1)


def least_squares_gradient(w: FloatArray, sample: DataSample) -> FloatArray:
    """-u (d - u^T w), the gradient of (d - u^T w)^2 / 2."""
    error = sample.response - _inner(sample.features, w)
    return -sample.features * error[..., None]


@dataclass(frozen=True)
class ExpectedLeastSquaresGradient:
    """Exact gradient ``R_u (w - w_k)`` of the local costs; ignores the sample."""

    env: Environment

    def __call__(self, w: FloatArray, sample: DataSample) -> FloatArray:
        return (w - self.env.fixed_points) @ self.env.covariance


@dataclass(frozen=True)
class LogisticGradient:
    regularization: float

    def __call__(self, w: FloatArray, sample: DataSample) -> FloatArray:
        label = sample.label
        margin = label * _inner(sample.features, w)
        return -(label * expit(-margin))[..., None] * sample.features + 2 * self.regularization * w


def logistic_loss(w: FloatArray, sample: DataSample, regularization: float) -> FloatArray:
    margin = sample.label * _inner(sample.features, w)
    return np.logaddexp(0.0, -margin) + regularization * _inner(w, w)


def gradient_evaluator(env: Environment, exact: bool = False) -> GradientEvaluator:
    match env:
        case LinearRegressionEnv():
            return ExpectedLeastSquaresGradient(env) if exact else least_squares_gradient
        case LogisticEnv() if not exact:
            return LogisticGradient(env.regularization)
    raise ValueError(f"No {'exact ' if exact else ''}gradient available for {type(env).__name__}")


def lms_step(w: FloatArray, u: FloatArray, d: float | FloatArray, mu: float) -> FloatArray:
    """
    w + mu u (d - u^T w)

    The correction is added: this is the descent direction of the squared
    error, i.e. :func:`sgd_step` with :func:`least_squares_gradient`.
    """
    error = np.asarray(d - _inner(u, w))
    return w + mu * u * error[..., None]


def sgd_step(w: FloatArray, gradient: GradientEvaluator, sample: DataSample, mu: float) -> FloatArray:
    return w - mu * gradient(w, sample)


def _combine(weights: FloatArray, intermediate: FloatArray) -> FloatArray:
    # w_k = sum_l a_lk phi_l, broadcast over leading replica axes
    return np.matmul(weights.T, intermediate)


def diffusion_step(
    states: FloatArray,
    samples: DataSample,
    combination: FloatArray,
    mu: float,
    gradient: GradientEvaluator,
) -> FloatArray:
    """Adapt-then-combine: every agent takes a local gradient step, then averages its neighbours."""
    return _combine(combination, sgd_step(states, gradient, samples, mu))


def multitask_step(
    states: FloatArray,
    samples: DataSample,
    weights: FloatArray,
    mu: float,
    gradient: GradientEvaluator,
) -> FloatArray:
    """Same round as :func:`diffusion_step`, with the Laplacian weights ``C = I - mu*eta*L``."""
    return _combine(weights, sgd_step(states, gradient, samples, mu))


Update = Callable[[FloatArray, DataSample], FloatArray]


def update_rule(
    algorithm: Algorithm | str,
    mu: float,
    gradient: GradientEvaluator,
    combination: FloatArray | None = None,
) -> Update:
    """The one-step mapping ``w -> T(w; x)`` of an algorithm as a function of ``(w, sample)``."""
    algorithm = Algorithm(algorithm)
    if algorithm.is_network and combination is None:
        raise ValueError(f"{algorithm} needs a combination matrix")

    match algorithm:
        case Algorithm.LMS:
            return lambda w, x: lms_step(w, x.features, x.response, mu)
        case Algorithm.SGD:
            return lambda w, x: sgd_step(w, gradient, x, mu)
        case Algorithm.DIFFUSION:
            return partial(_network_update, diffusion_step, combination, mu, gradient)
        case Algorithm.MULTITASK:
            return partial(_network_update, multitask_step, combination, mu, gradient)


NetworkStep = Callable[[FloatArray, DataSample, FloatArray, float, GradientEvaluator], FloatArray]


def _network_update(
    step: NetworkStep,
    combination: FloatArray,
    mu: float,
    gradient: GradientEvaluator,
    w: FloatArray,
    x: DataSample,
) -> FloatArray:
    return step(w, x, combination, mu, gradient)


@dataclass(frozen=True)
class LearnerState:
    """Iterates of all agents, shape ``(K, M)`` (or with leading replica axes), and the rule moving them."""

    iterates: FloatArray
    step_size: float
    algorithm: Algorithm
    # A for diffusion, C for multitask
    combination: FloatArray | None = None

    def __post_init__(self) -> None:
        if not self.step_size > 0:
            raise ValueError(f"Step-size must be positive, got {self.step_size!r}")
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if self.combination is not None:
            agents = self.iterates.shape[-2]
            if self.combination.shape != (agents, agents):
                raise ValueError(
                    f"Combination matrix shape {self.combination.shape} does not match {agents} agents"
                )

    @classmethod
    def zeros(
        cls,
        agents: int,
        dimension: int,
        step_size: float,
        algorithm: Algorithm | str,
        combination: FloatArray | None = None,
    ) -> "LearnerState":
        return cls(np.zeros((agents, dimension)), step_size, Algorithm(algorithm), combination)

    def rule(self, gradient: GradientEvaluator) -> Update:
        return update_rule(self.algorithm, self.step_size, gradient, self.combination)

    def apply_step(self, sample: DataSample, gradient: GradientEvaluator) -> FloatArray:
        return self.rule(gradient)(self.iterates, sample)

    def advance(self, sample: DataSample, gradient: GradientEvaluator) -> "LearnerState":
        return replace(self, iterates=self.apply_step(sample, gradient))
