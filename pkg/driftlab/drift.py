from collections.abc import Iterable
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np

from ._utils import as_vector
from .types import FloatArray


class DriftMode(StrEnum):
    COMMON = "common"
    INDEPENDENT = "independent"


@dataclass(frozen=True)
class DriftSpec:
    """
    Random-walk increment law of the fixed points: ``q ~ N(mean_increment, variance * I)``.

    With ``mode=common`` every agent receives the same draw in a given step,
    with ``mode=independent`` each agent draws its own increment.
    """

    mean_increment: FloatArray
    variance: float = 0.0
    mode: DriftMode = DriftMode.COMMON

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean_increment, dtype=np.float64)
        if mean.ndim != 1 or mean.size == 0:
            raise ValueError(f"mean_increment must be a non-empty vector, got shape {mean.shape}")
        if not self.variance >= 0:
            raise ValueError(f"Drift variance must be nonnegative, got {self.variance!r}")
        object.__setattr__(self, "mean_increment", mean)
        object.__setattr__(self, "variance", float(self.variance))
        object.__setattr__(self, "mode", DriftMode(self.mode))

    @classmethod
    def create(
        cls,
        dimension: int,
        mean: float | Iterable[float] = 0.0,
        variance: float = 0.0,
        mode: DriftMode | str = DriftMode.COMMON,
    ) -> "DriftSpec":
        return cls(as_vector(mean, dimension, "drift mean"), variance, DriftMode(mode))

    @property
    def dimension(self) -> int:
        return self.mean_increment.shape[0]

    @property
    def is_zero_mean(self) -> bool:
        return not np.any(self.mean_increment)

    @property
    def is_stationary(self) -> bool:
        return self.is_zero_mean and self.variance == 0

    @property
    def second_moment_bound(self) -> float:
        return second_moment_bound(self)

    def stacked_second_moment(self, agents: int) -> float:
        """E||q||^2 of the increment of all ``agents`` fixed points stacked together."""
        return agents * self.second_moment_bound

    def draw(self, rng: np.random.Generator, agents: int, steps: int | None = None) -> FloatArray:
        """
        Draw increments for ``agents`` fixed points.

        The result has shape ``(agents, M)`` (or ``(steps, agents, M)``); in
        common mode the agent axis has length 1 and broadcasts.
        """
        rows = 1 if self.mode is DriftMode.COMMON else agents
        shape: tuple[int, ...] = (rows, self.dimension)
        if steps is not None:
            shape = (steps, *shape)
        if self.variance == 0:
            return np.broadcast_to(self.mean_increment, shape).copy()
        return self.mean_increment + np.sqrt(self.variance) * rng.standard_normal(shape)

    def with_law(self, mean: float | Iterable[float] | None = None, variance: float | None = None) -> "DriftSpec":
        return DriftSpec(
            self.mean_increment if mean is None else as_vector(mean, self.dimension, "drift mean"),
            self.variance if variance is None else variance,
            self.mode,
        )


def second_moment_bound(drift: DriftSpec) -> float:
    """xi^2 = ||mean||^2 + M * variance for one M-dimensional fixed point."""
    return float(drift.mean_increment @ drift.mean_increment) + drift.dimension * drift.variance
