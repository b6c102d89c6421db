import logging
import math
from pathlib import Path

from .harness import MsdTrajectory
from .sweep import SweepRow

logger = logging.getLogger("driftlab")

FIG_W, FIG_H = 4.5, 3.2
LINE_W = 1.4
MARKER_SZ = 4.0


def _figure():
    try:
        from matplotlib.figure import Figure
    except ImportError:
        raise ImportError(
            "SVG output needs matplotlib; install driftlab with the 'plot' extra: pip install 'driftlab[plot]'"
        ) from None
    fig = Figure(figsize=(FIG_W, FIG_H))
    return fig, fig.add_subplot()


def _save(fig, path: Path) -> Path:
    import matplotlib

    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    # fixed salt and no date, so identical data gives an identical file
    with matplotlib.rc_context({"svg.hashsalt": "driftlab"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    logger.debug("Wrote %s", path)
    return path


def plot_sweep(results: dict[str, list[SweepRow]], path: Path, bounds: bool = False) -> Path:
    """Steady-state MSD (dB) against step-size, one line per series."""
    fig, ax = _figure()
    for label, rows in results.items():
        (line,) = ax.plot(
            [r.mu for r in rows],
            [r.steady_msd_db for r in rows],
            "o-",
            label=label,
            linewidth=LINE_W,
            markersize=MARKER_SZ,
        )
        if bounds:
            finite = [r for r in rows if math.isfinite(r.bound_zm) and r.bound_zm > 0]
            ax.plot(
                [r.mu for r in finite],
                [10 * math.log10(r.bound_zm) for r in finite],
                "--",
                color=line.get_color(),
                linewidth=LINE_W,
            )
    ax.set_xscale("log")
    ax.set_xlabel("step-size $\\mu$")
    ax.set_ylabel("steady-state MSD (dB)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(frameon=False, loc="best")
    return _save(fig, path)


def plot_trajectory(traj: MsdTrajectory, path: Path) -> Path:
    fig, ax = _figure()
    ax.plot(range(1, len(traj) + 1), traj.db(), linewidth=LINE_W)
    ax.set_xlabel("iteration")
    ax.set_ylabel("MSD (dB)")
    ax.set_title(f"$\\mu$ = {traj.mu:g}")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)
