from dataclasses import replace
from pathlib import Path

from .bounds import BoundRow, NonContractiveError, bound_table
from .config import ExperimentConfig, load_config
from .harness import MsdTrajectory, build_problem, certificate_for, run_experiment, stacked_xi2
from .logging import setup_logging
from .sweep import SweepRow, run_series

ConfigLike = ExperimentConfig | str | Path


class Lab:
    """
    Lab runs experiments described by :class:`~driftlab.config.ExperimentConfig`.

    Each Lab instance holds its own session defaults (worker count) that are
    independent of other instances.
    """

    def __init__(self) -> None:
        self.workers: int | None = None

    def _resolve(self, config: ConfigLike, seed: int | None, workers: int | None) -> ExperimentConfig:
        cfg = config if isinstance(config, ExperimentConfig) else load_config(config)
        return cfg.with_harness(seed=seed, workers=workers or self.workers)

    def run(
        self,
        config: ConfigLike,
        *,
        seed: int | None = None,
        workers: int | None = None,
        verbose: bool | int | None = None,
    ) -> MsdTrajectory:
        """Simulate the configured learner and return its Monte Carlo MSD trajectory.

        Parameters
        ----------
        config :
            An :class:`ExperimentConfig`, the path of a TOML experiment file or
            the name of a shipped preset (``fig1``, ``fig2``, ``lms``). The
            step-size is ``learner.step_size``.

        seed :
            Master seed, overriding ``harness.seed``. Every random draw of the
            run derives from it.

        workers :
            Number of worker processes replica blocks are spread over. The
            trajectory is identical for any worker count.

        verbose :
            Print progress. By default the logger level is left unchanged;
            ``True`` or ``1`` shows progress, ``2`` shows debug output.

        Returns
        -------
        ``MsdTrajectory``
            Per-iteration replica average of the per-agent squared deviation.
            Replicas whose iterates stopped being finite are listed in
            ``diverged``.
        """
        with setup_logging().ctx_level(verbose):
            cfg = self._resolve(config, seed, workers)
            return run_experiment(cfg, cfg.harness.workers)

    def sweep(
        self,
        config: ConfigLike,
        *,
        seed: int | None = None,
        workers: int | None = None,
        verbose: bool | int | None = None,
    ) -> dict[str, list[SweepRow]]:
        """Steady-state MSD over the ``[sweep]`` step-size grid, for every ``[[series]]``.

        Parameters are as for :meth:`run`.

        Returns
        -------
        ``dict[str, list[SweepRow]]``
            One list of rows per series label, in grid order. Without
            ``[[series]]`` tables the single key is ``"msd"``.
        """
        with setup_logging().ctx_level(verbose):
            cfg = self._resolve(config, seed, workers)
            return run_series(cfg, cfg.harness.workers)

    def bounds(self, config: ConfigLike, *, allow_unstable: bool = False) -> list[BoundRow]:
        """Tabulate the steady-state bounds of the configured algorithm.

        The step-size grid is ``[sweep]`` (or ``learner.step_size``); the eta
        grid is ``bounds.eta`` (or ``learner.eta``). Bounds are per agent.

        Parameters
        ----------
        allow_unstable :
            If ``False``, a grid point whose certificate is not contractive
            raises :class:`NonContractiveError`. If ``True`` such rows are
            returned with ``stable=False`` and infinite bounds.
        """
        cfg = self._resolve(config, None, None)
        has_grid = cfg.sweep.mu is not None or cfg.sweep.mu_min is not None
        mus = cfg.sweep.grid() if has_grid else [cfg.step_size()]
        etas = cfg.bounds.eta or (cfg.learner.eta,)
        problem = build_problem(cfg)

        def certify(mu, eta):
            return certificate_for(replace(cfg, learner=replace(cfg.learner, eta=eta)), mu, problem)

        rows = bound_table(cfg.algorithm.value, certify, mus, etas, stacked_xi2(cfg), cfg.environment.agents)
        unstable = [row.mu for row in rows if not row.stable]
        if unstable and not allow_unstable:
            raise NonContractiveError(
                f"Certificate is not contractive at mu={', '.join(f'{mu:g}' for mu in unstable)}; "
                "pass allow_unstable=True to report these rows"
            )
        return rows

    def set_workers(self, workers: int | None) -> None:
        """Set the default number of worker processes (``None`` defers to ``harness.workers``)."""
        if workers is not None and workers < 1:
            raise ValueError(f"workers must be at least 1, got {workers}")
        self.workers = workers
