# Full reproductions of the shipped figure presets.
# Each takes minutes, so they are disabled by default.
# To run them, invoke pytest with the `--integration` flag.

import pytest

from driftlab.cli import main
from driftlab.config import load_config
from driftlab.constants import EXIT_OK
from driftlab.sweep import fit_decade_slope, is_u_shaped, minimizer, run_series


def integration_test_only(func):
    def wrapper(tmp_path, pytestconfig):
        if not pytestconfig.getoption("--integration"):
            pytest.skip("Integration tests are skipped. Use --integration to run them.")
        func(tmp_path, pytestconfig)

    return wrapper


def slope_over(rows, low, high):
    chosen = [r for r in rows if low * 0.999 <= r.mu <= high * 1.001]
    return fit_decade_slope([r.mu for r in chosen], [r.steady_msd for r in chosen])


@integration_test_only
def test_fig2_slopes(tmp_path, pytestconfig):
    cfg = load_config("fig2").with_harness(workers=4)
    results = run_series(cfg)

    assert -12 <= slope_over(results["zero_mean"], 1e-4, 1e-3) <= -8
    assert 8 <= slope_over(results["zero_mean"], 1e-2, 1e-1) <= 12
    assert -22 <= slope_over(results["biased"], 1e-4, 1e-3) <= -18


@integration_test_only
def test_fig1_trends(tmp_path, pytestconfig):
    cfg = load_config("fig1").with_harness(workers=4)
    results = run_series(cfg)
    low, high = results["low_drift"], results["high_drift"]

    assert is_u_shaped(low)
    assert is_u_shaped(high)
    assert minimizer(low).mu < minimizer(high).mu
    assert minimizer(low).steady_msd < minimizer(high).steady_msd


@integration_test_only
def test_sweep_output_independent_of_workers(tmp_path, pytestconfig):
    for workers in ("1", "8"):
        assert main(["sweep", "--config", "fig2", "--out", str(tmp_path / workers), "--workers", workers]) == EXIT_OK

    for name in ("sweep_zero_mean.csv", "sweep_biased.csv", "slopes.csv"):
        assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "8" / name).read_bytes()
