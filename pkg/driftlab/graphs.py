import logging
import math
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path

import networkx as nx
import numpy as np
import scipy.linalg

from .constants import GRAPH_ATTEMPTS, PERRON_MAX_ITERATIONS, PERRON_TOLERANCE
from .types import FloatArray

logger = logging.getLogger("driftlab")


class GraphError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


class CombinationRule(StrEnum):
    UNIFORM = "uniform"
    METROPOLIS = "metropolis"


def check_adjacency(adjacency: FloatArray) -> FloatArray:
    adjacency = np.asarray(adjacency, dtype=np.float64)
    if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
        raise GraphError(f"Adjacency must be a square matrix, got shape {adjacency.shape}")
    if not np.array_equal(adjacency, adjacency.T):
        raise GraphError("Adjacency must be symmetric (directed graphs are not supported)")
    if np.any(np.diag(adjacency) != 0):
        raise GraphError("Adjacency must have a zero diagonal")
    if np.any(adjacency < 0):
        raise GraphError("Adjacency weights must be nonnegative")
    return adjacency


def is_connected(adjacency: FloatArray) -> bool:
    return nx.is_connected(nx.from_numpy_array(adjacency))


def random_connected_graph(
    agents: int,
    edge_probability: float,
    rng: np.random.Generator,
    max_attempts: int = GRAPH_ATTEMPTS,
) -> FloatArray:
    """
    Draw an Erdős–Rényi graph with unit weights, redrawing until it is connected.

    Returns the ``(K, K)`` adjacency matrix.
    """
    if agents < 2:
        raise GraphError(f"A network needs at least 2 agents, got {agents}")
    if not 0 < edge_probability <= 1:
        raise GraphError(f"edge_probability must be in (0, 1], got {edge_probability!r}")

    for attempt in range(1, max_attempts + 1):
        graph = nx.gnp_random_graph(agents, edge_probability, seed=int(rng.integers(2**32)))
        if nx.is_connected(graph):
            logger.debug("Connected graph with %d edges after %d draw(s)", graph.number_of_edges(), attempt)
            return nx.to_numpy_array(graph, nodelist=range(agents), dtype=np.float64)

    raise GraphError(
        f"No connected graph on {agents} agents after {max_attempts} draws; "
        f"edge_probability={edge_probability!r} is too small"
    )


def combination_matrix(adjacency: FloatArray, rule: CombinationRule | str = CombinationRule.UNIFORM) -> FloatArray:
    """Left-stochastic combination matrix of the graph: every column sums to one."""
    adjacency = check_adjacency(adjacency)
    linked = adjacency > 0
    size = linked.sum(axis=0) + 1  # neighbourhood size, self included

    match CombinationRule(rule):
        case CombinationRule.UNIFORM:
            combination = np.where(linked, 1.0 / size[None, :], 0.0)
            np.fill_diagonal(combination, 1.0 / size)
        case CombinationRule.METROPOLIS:
            combination = np.where(linked, 1.0 / np.maximum(size[:, None], size[None, :]), 0.0)
            np.fill_diagonal(combination, 1.0 - combination.sum(axis=0))
    return combination


def _check_left_stochastic(matrix: FloatArray) -> FloatArray:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"Combination matrix must be square, got shape {matrix.shape}")
    if np.any(matrix < 0) or not np.allclose(matrix.sum(axis=0), 1.0, rtol=0, atol=1e-10):
        raise ValueError("Combination matrix must be nonnegative with columns summing to one")
    return matrix


def perron_vector(
    combination: FloatArray,
    tolerance: float = PERRON_TOLERANCE,
    max_iterations: int = PERRON_MAX_ITERATIONS,
) -> FloatArray:
    """
    Right Perron vector p of a left-stochastic matrix: ``A p = p``, ``p > 0``, ``sum(p) = 1``.

    Power iteration started from the uniform vector, so a doubly stochastic
    matrix gives exactly ``1/K``.
    """
    combination = _check_left_stochastic(combination)
    agents = combination.shape[0]
    p = np.full(agents, 1.0 / agents)
    for _ in range(max_iterations):
        ap = combination @ p
        if np.linalg.norm(ap - p) <= tolerance:
            return p
        p = ap / ap.sum()
    raise ConvergenceError(
        f"Power iteration did not converge in {max_iterations} iterations; the combination matrix is not primitive"
    )


def second_eigen_magnitude(combination: FloatArray, perron: FloatArray) -> float:
    """Mixing rate: spectral radius of A with the Perron mode removed."""
    agents = combination.shape[0]
    deflated = combination - np.outer(perron, np.ones(agents))
    return float(np.max(np.abs(scipy.linalg.eigvals(deflated))))


def laplacian(adjacency: FloatArray) -> FloatArray:
    adjacency = np.asarray(adjacency, dtype=np.float64)
    return np.diag(adjacency.sum(axis=1)) - adjacency


def multitask_weights(adjacency: FloatArray, mu: float, eta: float) -> FloatArray:
    """
    Step-size dependent combination weights of multitask diffusion.

    ``c_kk = 1 - mu*eta*deg(k)`` and ``c_lk = mu*eta*a_lk`` otherwise, i.e. ``C = I - mu*eta*L``.
    """
    adjacency = np.asarray(adjacency, dtype=np.float64)
    degree = adjacency.sum(axis=0)
    coupling = mu * eta
    if coupling * float(np.max(degree)) >= 1:
        raise ValueError(
            f"mu*eta*max degree must be < 1 (got mu={mu!r}, eta={eta!r}, max degree={np.max(degree)!r}); "
            "step-size or regularization too large"
        )
    weights = coupling * adjacency
    np.fill_diagonal(weights, 1.0 - coupling * degree)
    return weights


def default_bandwidth(agents: int) -> int:
    return max(1, math.ceil(agents / 4))


def smooth_signal(
    laplacian_matrix: FloatArray,
    bandwidth: int,
    amplitude: float,
    rng: np.random.Generator,
    dimension: int = 1,
) -> FloatArray:
    """
    Graph-smooth per-agent vectors, shape ``(K, dimension)``.

    Every coordinate is a random combination of the ``bandwidth`` Laplacian
    eigenvectors with the smallest eigenvalues. The result is scaled so that
    the root-mean-square agent norm equals ``amplitude``.
    """
    agents = laplacian_matrix.shape[0]
    if not 1 <= bandwidth <= agents:
        raise ValueError(f"bandwidth must be between 1 and {agents}, got {bandwidth}")

    _, vectors = scipy.linalg.eigh(laplacian_matrix)
    basis = vectors[:, :bandwidth].copy()
    basis[:, 0] = 1.0 / np.sqrt(agents)  # nullspace of a connected graph

    signal = basis @ rng.standard_normal((bandwidth, dimension))
    rms = np.sqrt(np.mean(np.sum(signal**2, axis=1)))
    if rms == 0:
        return signal
    return signal * (amplitude / rms)


def dirichlet_energy(laplacian_matrix: FloatArray, signal: FloatArray) -> float:
    """w^T (L kron I) w for a ``(K, M)`` signal."""
    return float(np.sum(signal * (laplacian_matrix @ signal)))


@dataclass(frozen=True)
class Network:
    adjacency: FloatArray
    combination: FloatArray
    perron: FloatArray
    lambda2: float
    laplacian: FloatArray

    @classmethod
    def build(cls, adjacency: FloatArray, rule: CombinationRule | str = CombinationRule.UNIFORM) -> "Network":
        adjacency = check_adjacency(adjacency)
        if not is_connected(adjacency):
            raise GraphError("The graph is not connected")
        combination = combination_matrix(adjacency, rule)
        perron = perron_vector(combination)
        return cls(
            adjacency=adjacency,
            combination=combination,
            perron=perron,
            lambda2=second_eigen_magnitude(combination, perron),
            laplacian=laplacian(adjacency),
        )

    @classmethod
    def random(
        cls,
        agents: int,
        edge_probability: float,
        rng: np.random.Generator,
        rule: CombinationRule | str = CombinationRule.UNIFORM,
    ) -> "Network":
        return cls.build(random_connected_graph(agents, edge_probability, rng), rule)

    @classmethod
    def single(cls) -> "Network":
        """The one-agent 'network' of centralized learners."""
        one = np.ones((1, 1))
        return cls(np.zeros((1, 1)), one, np.ones(1), 0.0, np.zeros((1, 1)))

    @property
    def agents(self) -> int:
        return self.adjacency.shape[0]

    def multitask_weights(self, mu: float, eta: float) -> FloatArray:
        return multitask_weights(self.adjacency, mu, eta)


def read_edge_list(path: str | Path, agents: int | None = None) -> FloatArray:
    """Read a ``l k weight`` edge list into an adjacency matrix over nodes ``0..K-1``."""
    graph = nx.read_weighted_edgelist(path, nodetype=int)
    if nx.number_of_selfloops(graph):
        raise GraphError(f"{path}: self-loops are not allowed")
    if agents is None:
        agents = max(graph.nodes) + 1 if graph.number_of_nodes() else 0
    if any(not 0 <= node < agents for node in graph.nodes):
        raise GraphError(f"{path}: node labels must lie in 0..{agents - 1}")
    # agents without any edge stay in the matrix as zero rows
    graph.add_nodes_from(range(agents))
    return nx.to_numpy_array(graph, nodelist=range(agents), dtype=np.float64)


def write_edge_list(adjacency: FloatArray, path: str | Path) -> None:
    graph = nx.from_numpy_array(check_adjacency(adjacency))
    nx.write_weighted_edgelist(graph, path)
