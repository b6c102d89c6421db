import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike
from scipy.stats import linregress

from ._utils import graph_rng, replica_rng
from .bounds import (
    ContractionCertificate,
    diffusion_certificate,
    lms_certificate,
    multitask_certificate,
)
from .config import ConfigError, ExperimentConfig
from .constants import CHUNK_STEPS, SETTLE_FLOOR, SETTLE_TOLERANCE_DB, STEADY_STATE_BATCHES
from .environment import (
    Environment,
    Innovations,
    LinearRegressionEnv,
    initial_fixed_points,
    make_environment,
)
from .graphs import GraphError, Network, default_bandwidth, read_edge_list
from .learners import Algorithm, gradient_evaluator, update_rule
from .types import FloatArray

logger = logging.getLogger("driftlab")


class DivergenceError(RuntimeError):
    pass


def to_db(value: ArrayLike) -> FloatArray | np.float64:
    with np.errstate(divide="ignore"):
        return 10 * np.log10(value)


def from_db(value: ArrayLike) -> FloatArray | np.float64:
    return 10 ** (np.asarray(value) / 10)


@dataclass(frozen=True)
class Problem:
    """The problem instance shared by every replica and step-size of an experiment."""

    environment: Environment
    network: Network


def build_problem(cfg: ExperimentConfig) -> Problem:
    """Draw the network and the initial models from the graph stream of the master seed."""
    env_cfg = cfg.environment
    rng = graph_rng(cfg.harness.seed)

    try:
        if env_cfg.agents == 1:
            network = Network.single()
        elif cfg.network.edge_list is not None:
            path = Path(cfg.network.edge_list)
            if not path.is_absolute() and cfg.source is not None:
                path = Path(cfg.source).parent / path
            network = Network.build(read_edge_list(path, env_cfg.agents), cfg.network.rule)
        else:
            network = Network.random(env_cfg.agents, cfg.network.edge_probability, rng, cfg.network.rule)
    except (GraphError, OSError) as e:
        raise ConfigError(f"Invalid 'network': {e}") from None

    fixed_points = initial_fixed_points(
        env_cfg.init,
        env_cfg.agents,
        env_cfg.dimension,
        rng,
        scale=env_cfg.init_scale,
        spread=env_cfg.spread,
        network=network,
        bandwidth=env_cfg.bandwidth or default_bandwidth(env_cfg.agents),
    )
    env = make_environment(
        env_cfg.kind,
        fixed_points,
        cfg.drift.to_spec(env_cfg.dimension),
        env_cfg.covariance(),
        noise_variance=env_cfg.noise_variance,
        regularization=env_cfg.regularization,
    )
    logger.debug(
        "Problem: %d agent(s), dimension %d, lambda2=%.6g", env.agents, env.dimension, network.lambda2
    )
    return Problem(env, network)


def combination_for(cfg: ExperimentConfig, network: Network, mu: float) -> FloatArray | None:
    match cfg.algorithm:
        case Algorithm.DIFFUSION:
            return network.combination
        case Algorithm.MULTITASK:
            try:
                return network.multitask_weights(mu, cfg.learner.eta)
            except ValueError as e:
                raise ConfigError(f"'learner.eta': {e}") from None
    return None


def certificate_for(cfg: ExperimentConfig, mu: float, problem: Problem | None = None) -> ContractionCertificate:
    """
    The certificate matching the experiment's algorithm at step-size ``mu``.

    Unstable step-sizes are not rejected; check ``is_contractive``.
    """
    problem = problem or build_problem(cfg)
    env = problem.environment
    exact = cfg.environment.exact_gradient

    if cfg.algorithm in (Algorithm.LMS, Algorithm.SGD) and isinstance(env, LinearRegressionEnv) and not exact:
        return lms_certificate(env.covariance, env.noise_variance, mu, allow_unstable=True)

    constants = env.problem_constants(cfg.bounds.c1, cfg.bounds.c2, exact=exact)
    constants = replace(constants, **cfg.bounds.overrides())
    if cfg.algorithm is Algorithm.MULTITASK:
        return multitask_certificate(constants, mu, cfg.learner.eta, allow_unstable=True)
    return diffusion_certificate(constants, mu, problem.network.lambda2, allow_unstable=True)


def stacked_xi2(cfg: ExperimentConfig) -> float:
    """Second moment of the increment of all agents' models stacked together."""
    return cfg.drift.to_spec(cfg.environment.dimension).stacked_second_moment(cfg.environment.agents)


@dataclass
class MsdTrajectory:
    """
    Replica average of the per-agent squared deviation ``(1/N) ||w_ref - w_i||^2`` at every iteration.

    ``diverged`` maps replica index to the iteration at which its iterates
    stopped being finite; such replicas leave the average from that iteration on.
    """

    values: FloatArray
    replicas: int
    mu: float
    seed: int
    config_hash: str = ""
    diverged: dict[int, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.values)

    def db(self) -> FloatArray:
        return to_db(self.values)

    def raise_for_divergence(self) -> None:
        if self.diverged:
            raise DivergenceError(
                f"{len(self.diverged)} of {self.replicas} replica(s) diverged at mu={self.mu!r}: "
                f"replicas {sorted(self.diverged)}"
            )


@dataclass(frozen=True)
class BlockResult:
    sums: FloatArray
    counts: FloatArray
    diverged: dict[int, int]


def _run_block(
    cfg: ExperimentConfig,
    problem: Problem,
    mu: float,
    iterations: int,
    start: int,
    stop: int,
) -> BlockResult:
    """
    Run replicas ``start..stop-1`` side by side.

    Each replica draws from its own stream, chunk by chunk, in the same
    order as if it ran alone; arithmetic is vectorised over the replica axis.
    """
    size = stop - start
    env = problem.environment.stack(size)
    agents = env.agents
    rngs = [replica_rng(cfg.harness.seed, r) for r in range(start, stop)]

    gradient = gradient_evaluator(env, cfg.environment.exact_gradient)
    update = update_rule(cfg.algorithm, mu, gradient, combination_for(cfg, problem.network, mu))
    reference_kind = cfg.environment.reference
    perron = problem.network.perron

    w = np.zeros_like(env.fixed_points)
    sums = np.zeros(iterations)
    counts = np.zeros(iterations)
    alive = np.ones(size, dtype=bool)
    diverged: dict[int, int] = {}

    with np.errstate(all="ignore"):
        for offset in range(0, iterations, CHUNK_STEPS):
            steps = min(CHUNK_STEPS, iterations - offset)
            innovations = Innovations.stack([env.draw_innovations(rng, steps) for rng in rngs])
            deviation = np.empty((steps, size))
            for t in range(steps):
                env.advance(innovations.increments[t])
                w = update(w, env.respond(innovations.features[t], innovations.noise[t]))
                error = env.reference(reference_kind, perron) - w
                deviation[t] = np.sum(error**2, axis=(-2, -1)) / agents

            bad = ~np.isfinite(deviation)
            mask = np.broadcast_to(alive, deviation.shape).copy()
            for b in np.flatnonzero(alive & bad.any(axis=0)):
                first = int(np.argmax(bad[:, b]))
                mask[first:, b] = False
                alive[b] = False
                diverged[start + int(b)] = offset + first
                logger.warning("Replica %d diverged at iteration %d (mu=%g)", start + b, offset + first, mu)

            sums[offset : offset + steps] = np.sum(np.where(mask, deviation, 0.0), axis=1)
            counts[offset : offset + steps] = mask.sum(axis=1)

    logger.debug("Replicas %d..%d done", start, stop - 1)
    return BlockResult(sums, counts, diverged)


def run_experiment(
    cfg: ExperimentConfig,
    workers: int | None = None,
    problem: Problem | None = None,
) -> MsdTrajectory:
    """
    Monte Carlo estimate of the MSD trajectory of ``cfg`` at its step-size.

    Replicas run in blocks of ``harness.block_size``; blocks may run in
    ``workers`` processes but their sums are reduced in block order, so the
    result does not depend on the worker count.
    """
    mu = cfg.step_size()
    harness = cfg.harness
    workers = workers or harness.workers
    iterations = harness.iterations_for(mu)
    problem = problem or build_problem(cfg)

    cert = certificate_for(cfg, mu, problem)
    if not cert.is_contractive:
        logger.warning(
            "mu=%g is outside the %s certificate's stability range (gamma=%.6g)", mu, cert.source, cert.gamma
        )
    # fails early on an invalid eta
    combination_for(cfg, problem.network, mu)

    blocks = [
        (start, min(start + harness.block_size, harness.replicas))
        for start in range(0, harness.replicas, harness.block_size)
    ]
    logger.info(
        "Running %s, mu=%g: %d iteration(s), %d replica(s) in %d block(s)",
        cfg.algorithm,
        mu,
        iterations,
        harness.replicas,
        len(blocks),
    )

    args = [(cfg, problem, mu, iterations, start, stop) for start, stop in blocks]
    if workers > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(blocks))) as executor:
            results = list(executor.map(_run_block, *zip(*args, strict=True)))
    else:
        results = [_run_block(*a) for a in args]

    sums = np.zeros(iterations)
    counts = np.zeros(iterations)
    diverged: dict[int, int] = {}
    for result in results:
        sums += result.sums
        counts += result.counts
        diverged.update(result.diverged)

    with np.errstate(invalid="ignore", divide="ignore"):
        values = np.where(counts > 0, sums / np.maximum(counts, 1), np.inf)

    if diverged:
        logger.warning("%d of %d replica(s) diverged at mu=%g", len(diverged), harness.replicas, mu)
    return MsdTrajectory(values, harness.replicas, mu, harness.seed, cfg.hash(), diverged)


@dataclass(frozen=True)
class SteadyState:
    value: float
    stderr: float
    settled: bool
    # dB gap between the last window and the one before it
    change_db: float


def steady_state_msd(traj: MsdTrajectory | FloatArray, window: float) -> SteadyState:
    """
    Mean of the last ``ceil(window * T)`` entries.

    The standard error comes from batch means over the window; the estimate
    counts as settled when the window differs from the preceding one by at
    most 1 dB, or both are negligibly small.
    """
    if not 0 < window < 1:
        raise ValueError(f"window must lie in (0, 1), got {window!r}")
    values = np.asarray(traj.values if isinstance(traj, MsdTrajectory) else traj, dtype=np.float64)
    length = math.ceil(window * len(values))
    last = values[-length:]
    value = float(np.mean(last))

    batches = [b for b in np.array_split(last, min(STEADY_STATE_BATCHES, length)) if b.size]
    stderr = float(np.std([b.mean() for b in batches], ddof=1) / math.sqrt(len(batches))) if len(batches) > 1 else 0.0

    if 2 * length > len(values):
        return SteadyState(value, stderr, False, math.nan)
    previous = float(np.mean(values[-2 * length : -length]))
    if value <= SETTLE_FLOOR and previous <= SETTLE_FLOOR:
        return SteadyState(value, stderr, True, 0.0)
    change = abs(float(to_db(value) - to_db(previous)))
    return SteadyState(value, stderr, change <= SETTLE_TOLERANCE_DB, change)


def transient_decay_rate(
    traj: MsdTrajectory | FloatArray,
    stop: int | None = None,
    start: int = 0,
    window: float = 0.25,
) -> float:
    """
    Per-iteration geometric decay factor of the transient, from a log-linear fit.

    By default the fit stops where the trajectory first comes within a factor
    10 of its steady-state value.
    """
    values = np.asarray(traj.values if isinstance(traj, MsdTrajectory) else traj, dtype=np.float64)
    if stop is None:
        floor = 10 * steady_state_msd(values, window).value
        below = np.flatnonzero(values[start:] <= floor)
        stop = start + int(below[0]) if below.size else len(values)
    segment = values[start:stop]
    if segment.size < 3 or np.any(segment <= 0):
        raise ValueError("Need at least 3 positive transient values to fit a decay rate")
    fit = linregress(np.arange(start, stop), np.log(segment))
    return float(np.exp(fit.slope))

