import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.stats import linregress

from .bounds import bound_row
from .config import ExperimentConfig
from .harness import (
    Problem,
    build_problem,
    certificate_for,
    run_experiment,
    stacked_xi2,
    steady_state_msd,
    to_db,
)
from .logging import indent_log

logger = logging.getLogger("driftlab")

DEFAULT_SERIES = "msd"


@dataclass(frozen=True)
class SweepRow:
    mu: float
    steady_msd: float
    steady_msd_db: float
    stderr: float
    bound_zm: float
    bound_biased: float
    settled: bool
    stable: bool
    diverged: int = 0


@dataclass(frozen=True)
class SlopeRow:
    series: str
    range: str
    mu_lo: float
    mu_hi: float
    slope: float


def fit_decade_slope(mu_values: Sequence[float], msd_values: Sequence[float]) -> float:
    """Least-squares slope of ``10 log10(msd)`` against ``log10(mu)``, in dB per decade."""
    mu = np.asarray(mu_values, dtype=np.float64)
    msd = np.asarray(msd_values, dtype=np.float64)
    if mu.shape != msd.shape or mu.size < 3:
        raise ValueError(f"Need at least 3 (mu, msd) pairs, got {mu.size}")
    if np.any(mu <= 0) or np.any(msd <= 0) or not np.all(np.isfinite(msd)):
        raise ValueError("Step-sizes and MSD values must be positive and finite")
    log_mu = np.log10(mu)
    if log_mu.max() - log_mu.min() < 1 - 1e-9:
        raise ValueError(f"Step-sizes span {log_mu.max() - log_mu.min():.3g} decades; need at least one")
    return float(linregress(log_mu, to_db(msd)).slope)


def sweep_stepsize(
    cfg: ExperimentConfig,
    mu_list: Sequence[float],
    workers: int | None = None,
    problem: Problem | None = None,
) -> list[SweepRow]:
    """
    One experiment per step-size, all from the same master seed, with the
    per-agent steady-state bounds of the matching certificate on each row.
    """
    if not mu_list:
        raise ValueError("The step-size list is empty")
    problem = problem or build_problem(cfg)
    xi2 = stacked_xi2(cfg)
    agents = cfg.environment.agents

    rows = []
    logger.info("Sweeping %d step-size(s) for %s", len(mu_list), cfg.algorithm)
    with indent_log():
        for mu in mu_list:
            run_cfg = cfg.with_step_size(mu)
            traj = run_experiment(run_cfg, workers, problem)
            steady = steady_state_msd(traj, cfg.harness.window)
            if not steady.settled:
                logger.warning("Transient not settled at mu=%g (windows differ by %.2f dB)", mu, steady.change_db)
            bounds = bound_row(
                cfg.algorithm.value, certificate_for(run_cfg, mu, problem), mu, cfg.learner.eta, xi2, agents
            )
            rows.append(
                SweepRow(
                    mu=mu,
                    steady_msd=steady.value,
                    steady_msd_db=float(to_db(steady.value)),
                    stderr=steady.stderr,
                    bound_zm=bounds.bound_zm,
                    bound_biased=bounds.bound_biased,
                    settled=steady.settled,
                    stable=bounds.stable,
                    diverged=len(traj.diverged),
                )
            )
            logger.info("mu=%g: steady MSD %.3f dB", mu, rows[-1].steady_msd_db)
    return rows


def run_series(cfg: ExperimentConfig, workers: int | None = None) -> dict[str, list[SweepRow]]:
    """
    Sweep the configured step-size grid once per ``[[series]]`` drift override
    (or once with the base drift when no series is given).
    """
    grid = cfg.sweep.grid()
    if not cfg.series:
        return {DEFAULT_SERIES: sweep_stepsize(cfg, grid, workers)}

    results = {}
    for series in cfg.series:
        logger.info("Series %r", series.label)
        with indent_log():
            series_cfg = cfg.with_series(series)
            results[series.label] = sweep_stepsize(series_cfg, grid, workers)
    return results


def slope_summary(
    results: dict[str, list[SweepRow]],
    ranges: dict[str, tuple[float, float]],
) -> list[SlopeRow]:
    """Fitted dB-per-decade slopes of every series over every named step-size range."""
    summary = []
    for label, rows in results.items():
        for name, (low, high) in ranges.items():
            chosen = [r for r in rows if low * (1 - 1e-9) <= r.mu <= high * (1 + 1e-9)]
            try:
                slope = fit_decade_slope([r.mu for r in chosen], [r.steady_msd for r in chosen])
            except ValueError as e:
                logger.warning("No %s-range slope for series %r: %s", name, label, e)
                slope = math.nan
            summary.append(SlopeRow(label, name, low, high, slope))
    return summary


def minimizer(rows: Sequence[SweepRow]) -> SweepRow:
    """The row of smallest steady-state MSD."""
    return min(rows, key=lambda r: r.steady_msd)


def is_u_shaped(rows: Sequence[SweepRow]) -> bool:
    """True when the minimum lies strictly inside the grid, below both endpoints."""
    best = minimizer(rows)
    return best.steady_msd < rows[0].steady_msd and best.steady_msd < rows[-1].steady_msd
