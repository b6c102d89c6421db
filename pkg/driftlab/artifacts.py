import csv
import json
import logging
import math
from collections.abc import Iterable
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, TextIO, TypeVar

from ._utils import format_float
from .bounds import BoundRow
from .harness import MsdTrajectory
from .sweep import SlopeRow, SweepRow

logger = logging.getLogger("driftlab")

TRAJECTORY_HEADER = ("iter", "msd", "msd_db")
SWEEP_HEADER = ("mu", "steady_msd", "steady_msd_db", "bound_zm", "bound_biased", "settled_flag")
SLOPE_HEADER = ("series", "range", "mu_lo", "mu_hi", "slope")
BOUND_HEADER = ("algorithm", "mu", "eta", "xi2", "gamma", "delta", "bound_zm", "bound_biased", "stable")

Target = TypeVar("Target", Path, TextIO)


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format_float(value)
    return str(value)


def _write_rows(f: TextIO, header: Iterable[str], rows: Iterable[Iterable[Any]]) -> None:
    writer = csv.writer(f, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([_cell(v) for v in row] for row in rows)


def write_csv(target: Target, header: Iterable[str], rows: Iterable[Iterable[Any]]) -> Target:
    """Write a CSV with 17 significant digits per float to a path or an open text stream."""
    if not isinstance(target, Path):
        _write_rows(target, header, rows)
        return target
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", newline="") as f:
        _write_rows(f, header, rows)
    logger.debug("Wrote %s", target)
    return target


def write_trajectory(traj: MsdTrajectory, path: Target) -> Target:
    db = traj.db()
    rows = ((i, float(v), float(d)) for i, (v, d) in enumerate(zip(traj.values, db, strict=True), start=1))
    return write_csv(path, TRAJECTORY_HEADER, rows)


def write_sweep(rows: Iterable[SweepRow], path: Target) -> Target:
    return write_csv(
        path,
        SWEEP_HEADER,
        ((r.mu, r.steady_msd, r.steady_msd_db, r.bound_zm, r.bound_biased, r.settled) for r in rows),
    )


def write_slopes(rows: Iterable[SlopeRow], path: Target) -> Target:
    return write_csv(path, SLOPE_HEADER, ((r.series, r.range, r.mu_lo, r.mu_hi, r.slope) for r in rows))


def write_bounds(rows: Iterable[BoundRow], path: Target) -> Target:
    return write_csv(
        path,
        BOUND_HEADER,
        (
            (r.algorithm, r.mu, r.eta, r.xi2, r.gamma, r.delta, r.bound_zm, r.bound_biased, r.stable)
            for r in rows
        ),
    )


@dataclass
class RunManifest:
    """Provenance of one command's outputs, written next to them as ``manifest.json``."""

    command: str
    config_path: str | None
    output_dir: str
    seed: int
    version: str
    duration: float
    config_hash: str
    config: dict[str, Any]
    outputs: list[str] = field(default_factory=list)
    diverged: dict[str, int] = field(default_factory=dict)

    def write(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def read(cls, path: Path) -> "RunManifest":
        return cls(**json.loads(path.read_text()))
