import argparse
import logging
import sys
import time
from collections.abc import Sequence
from pathlib import Path

from .artifacts import RunManifest, write_bounds, write_slopes, write_sweep, write_trajectory
from .bounds import NonContractiveError
from .config import ConfigError, ExperimentConfig, load_config
from .constants import EXIT_CONFIG_ERROR, EXIT_DIVERGED, EXIT_OK
from .lab import Lab
from .logging import setup_logging
from .sweep import slope_summary

logger = logging.getLogger("driftlab")


def _version() -> str:
    try:
        from ._version import __version__
    except ImportError:
        return "unknown"
    return __version__


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftlab",
        description="Simulate stochastic learners under random-walk drift and evaluate their tracking bounds.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    commands = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="experiment TOML file or preset name")
    common.add_argument("--seed", type=int, metavar="U64", help="master seed (overrides harness.seed)")
    common.add_argument("-v", "--verbose", action="count", default=0, help="show progress (-vv for debug output)")

    simulate = argparse.ArgumentParser(add_help=False)
    simulate.add_argument("--out", required=True, type=Path, metavar="DIR", help="output directory")
    simulate.add_argument("--workers", type=int, metavar="N", help="worker processes (overrides harness.workers)")

    commands.add_parser("run", parents=[common, simulate], help="simulate one step-size, write the MSD trajectory")
    commands.add_parser("sweep", parents=[common, simulate], help="sweep the step-size grid, write steady states")
    bounds = commands.add_parser("bounds", parents=[common], help="tabulate the steady-state bounds")
    bounds.add_argument("--out", type=Path, metavar="DIR", help="write bounds.csv there instead of stdout")
    bounds.add_argument(
        "--allow-unstable", action="store_true", help="report non-contractive grid points instead of failing"
    )
    return parser


def _manifest(
    command: str, cfg: ExperimentConfig, out: Path, started: float, outputs: list[Path], **extra
) -> RunManifest:
    manifest = RunManifest(
        command=command,
        config_path=cfg.source,
        output_dir=str(out),
        seed=cfg.harness.seed,
        version=_version(),
        duration=round(time.perf_counter() - started, 3),
        config_hash=cfg.hash(),
        config=cfg.to_dict(),
        outputs=[p.name for p in outputs],
        **extra,
    )
    manifest.write(out / "manifest.json")
    return manifest


def cmd_run(lab: Lab, cfg: ExperimentConfig, out: Path) -> int:
    started = time.perf_counter()
    traj = lab.run(cfg)
    outputs = [write_trajectory(traj, out / "trajectory.csv")]
    if cfg.output.svg:
        from .plot import plot_trajectory

        outputs.append(plot_trajectory(traj, out / "trajectory.svg"))
    diverged = {f"{traj.mu:g}": len(traj.diverged)} if traj.diverged else {}
    _manifest("run", cfg, out, started, outputs, diverged=diverged)
    logger.info("Wrote %d row(s) to %s", len(traj), outputs[0])
    return EXIT_DIVERGED if traj.diverged else EXIT_OK


def cmd_sweep(lab: Lab, cfg: ExperimentConfig, out: Path) -> int:
    started = time.perf_counter()
    results = lab.sweep(cfg)
    single = len(results) == 1 and not cfg.series

    outputs = [
        write_sweep(rows, out / ("sweep.csv" if single else f"sweep_{label}.csv")) for label, rows in results.items()
    ]
    if cfg.sweep.ranges:
        outputs.append(write_slopes(slope_summary(results, cfg.sweep.ranges), out / "slopes.csv"))
    if cfg.output.svg:
        from .plot import plot_sweep

        outputs.append(plot_sweep(results, out / "sweep.svg", bounds=cfg.output.svg_bounds))

    diverged = {f"{label}@{row.mu:g}": row.diverged for label, rows in results.items() for row in rows if row.diverged}
    _manifest("sweep", cfg, out, started, outputs, diverged=diverged)
    return EXIT_DIVERGED if diverged else EXIT_OK


def cmd_bounds(lab: Lab, cfg: ExperimentConfig, out: Path | None, allow_unstable: bool) -> int:
    started = time.perf_counter()
    rows = lab.bounds(cfg, allow_unstable=allow_unstable)
    if out is None:
        write_bounds(rows, sys.stdout)
        return EXIT_OK
    _manifest("bounds", cfg, out, started, [write_bounds(rows, out / "bounds.csv")])
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    lab = Lab()

    with setup_logging().ctx_level(min(args.verbose, 2)):
        try:
            cfg = load_config(args.config).with_harness(seed=args.seed, workers=getattr(args, "workers", None))
            match args.command:
                case "run":
                    return cmd_run(lab, cfg, args.out)
                case "sweep":
                    return cmd_sweep(lab, cfg, args.out)
                case "bounds":
                    return cmd_bounds(lab, cfg, args.out, args.allow_unstable)
        except (ConfigError, NonContractiveError) as e:
            logger.error("%s", e)
            return EXIT_CONFIG_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
