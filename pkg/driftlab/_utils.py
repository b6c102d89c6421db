import hashlib
import json
import math
from collections.abc import Iterable, Mapping
from typing import Any

import numpy as np

from .constants import GRAPH_STREAM, REPLICA_STREAM
from .types import FloatArray


def stream_rng(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    """
    Build an independent generator for ``(seed, stream, index)``.

    The stream key is part of the seed material, so the generator handed to
    replica ``r`` is the same whichever worker runs it and in whatever order.
    """
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(stream, index))
    )


def replica_rng(seed: int, replica: int) -> np.random.Generator:
    return stream_rng(seed, REPLICA_STREAM, replica)


def graph_rng(seed: int) -> np.random.Generator:
    return stream_rng(seed, GRAPH_STREAM)


def format_float(value: float) -> str:
    """17 significant digits, enough to round-trip an IEEE double."""
    return f"{float(value):.17g}"


def config_hash(data: Mapping[str, Any]) -> str:
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def log_grid(low: float, high: float, points: int) -> list[float]:
    """``points`` values spaced evenly in log10 between ``low`` and ``high``."""
    if points < 1:
        raise ValueError(f"A grid needs at least one point, got {points}")
    if not 0 < low <= high:
        raise ValueError(f"Invalid grid range [{low!r}, {high!r}]")
    if points == 1:
        return [float(low)]
    return [float(x) for x in np.logspace(math.log10(low), math.log10(high), points)]


def as_vector(value: float | Iterable[float], dimension: int, name: str) -> FloatArray:
    """Broadcast a scalar, or check a sequence, into a length-``dimension`` vector."""
    array = np.asarray(value, dtype=np.float64)
    if array.ndim == 0:
        return np.full(dimension, float(array))
    if array.shape != (dimension,):
        raise ValueError(
            f"{name} must be a scalar or a list of {dimension} values, got shape {array.shape}"
        )
    return array.copy()


def max_pairwise_distance(points: FloatArray) -> float:
    """max over pairs of ||x_k - x_l||^2 for the rows of a (K, M) array."""
    diff = points[:, None, :] - points[None, :, :]
    return float(np.max(np.sum(diff**2, axis=-1)))
