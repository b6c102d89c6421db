import json

import pytest

from driftlab.artifacts import RunManifest
from driftlab.cli import main
from driftlab.constants import EXIT_CONFIG_ERROR, EXIT_DIVERGED, EXIT_OK

LMS = """
[environment]
dimension = 2
noise_variance = 0.5

[learner]
algorithm = "lms"
step_size = {mu}

[harness]
iterations = {iterations}
replicas = 4
block_size = 2
seed = 5

[sweep]
mu = [0.005, 0.02]
"""


@pytest.fixture
def lms_toml(tmp_path):
    def write(mu=0.01, iterations=300):
        path = tmp_path / "lms.toml"
        path.write_text(LMS.format(mu=mu, iterations=iterations))
        return path

    return write


def test_run(tmp_path, lms_toml):
    out = tmp_path / "run"
    assert main(["run", "--config", str(lms_toml()), "--out", str(out)]) == EXIT_OK

    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "iter,msd,msd_db"
    assert len(lines) == 301

    manifest = RunManifest.read(out / "manifest.json")
    assert manifest.command == "run"
    assert manifest.seed == 5
    assert manifest.outputs == ["trajectory.csv"]
    assert manifest.config["learner"]["step_size"] == 0.01


def test_run_is_reproducible(tmp_path, lms_toml):
    config = str(lms_toml())
    main(["run", "--config", config, "--out", str(tmp_path / "a")])
    main(["run", "--config", config, "--out", str(tmp_path / "b"), "--workers", "2"])
    main(["run", "--config", config, "--out", str(tmp_path / "c"), "--seed", "6"])

    first = (tmp_path / "a" / "trajectory.csv").read_bytes()
    assert (tmp_path / "b" / "trajectory.csv").read_bytes() == first
    assert (tmp_path / "c" / "trajectory.csv").read_bytes() != first
    assert RunManifest.read(tmp_path / "c" / "manifest.json").seed == 6


def test_missing_algorithm(tmp_path, caplog):
    config = tmp_path / "bad.toml"
    config.write_text("[learner]\nstep_size = 0.1\n")
    assert main(["run", "--config", str(config), "--out", str(tmp_path / "out")]) == EXIT_CONFIG_ERROR
    assert "learner.algorithm" in caplog.text
    assert not (tmp_path / "out").exists()


def test_divergence_exit_code(tmp_path, lms_toml):
    out = tmp_path / "run"
    assert main(["run", "--config", str(lms_toml(mu=2.0, iterations=2000)), "--out", str(out)]) == EXIT_DIVERGED
    assert len(json.loads((out / "manifest.json").read_text())["diverged"]) == 1


def test_sweep(tmp_path, lms_toml):
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(lms_toml()), "--out", str(out)]) == EXIT_OK
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "mu,steady_msd,steady_msd_db,bound_zm,bound_biased,settled_flag"
    assert [line.split(",")[0] for line in lines[1:]] == ["0.0050000000000000001", "0.02"]
    assert not (out / "slopes.csv").exists()


def test_sweep_series_and_slopes(tmp_path):
    config = tmp_path / "series.toml"
    grid = "mu = [0.002, 0.006, 0.02]\nsmall_range = [0.002, 0.02]"
    config.write_text(
        LMS.format(mu=0.01, iterations=400).replace("mu = [0.005, 0.02]", grid)
        + '\n[[series]]\nlabel = "still"\n\n[[series]]\nlabel = "moving"\nvariance = 1e-4\n'
    )
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(config), "--out", str(out)]) == EXIT_OK
    assert (out / "sweep_still.csv").exists()
    assert (out / "sweep_moving.csv").exists()

    slopes = (out / "slopes.csv").read_text().splitlines()
    assert slopes[0] == "series,range,mu_lo,mu_hi,slope"
    assert [line.split(",")[:2] for line in slopes[1:]] == [["still", "small"], ["moving", "small"]]


def test_bounds_to_stdout(lms_toml, capsys):
    assert main(["bounds", "--config", str(lms_toml())]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "algorithm,mu,eta,xi2,gamma,delta,bound_zm,bound_biased,stable"
    assert len(lines) == 3
    rows = [line.split(",") for line in lines[1:]]
    assert all(row[0] == "lms" and row[-1] == "1" for row in rows)
    # zero drift: the zero-mean bound grows in proportion to mu
    ratio = float(rows[1][6]) / float(rows[0][6])
    assert ratio == pytest.approx(4.0, rel=0.05)
    assert all(float(row[7]) >= float(row[6]) for row in rows)


def test_bounds_unstable(tmp_path, lms_toml, caplog):
    config = lms_toml()
    config.write_text(config.read_text().replace("mu = [0.005, 0.02]", "mu = [0.01, 2.0]"))
    assert main(["bounds", "--config", str(config), "--out", str(tmp_path / "b")]) == EXIT_CONFIG_ERROR
    assert "not contractive at mu=2" in caplog.text

    assert main(["bounds", "--config", str(config), "--out", str(tmp_path / "b"), "--allow-unstable"]) == EXIT_OK
    lines = (tmp_path / "b" / "bounds.csv").read_text().splitlines()
    assert lines[2].endswith(",inf,inf,0")
    assert (tmp_path / "b" / "manifest.json").exists()


def test_preset_by_name(tmp_path):
    assert main(["bounds", "--config", "fig2", "--out", str(tmp_path)]) == EXIT_OK
    lines = (tmp_path / "bounds.csv").read_text().splitlines()
    assert len(lines) == 11
    assert all(line.startswith("diffusion,") for line in lines[1:])


def test_unknown_command():
    with pytest.raises(SystemExit):
        main(["simulate", "--config", "fig2"])


def test_edge_list_with_isolated_agent(tmp_path, caplog):
    (tmp_path / "ring.txt").write_text("0 1 1\n1 2 1\n2 3 1\n3 0 1\n")
    config = tmp_path / "ring.toml"
    config.write_text(
        '[environment]\ndimension = 2\nagents = 5\n\n[network]\nedge_list = "ring.txt"\n\n'
        '[learner]\nalgorithm = "diffusion"\nstep_size = 0.01\n\n[harness]\niterations = 50\nreplicas = 2\n'
    )
    assert main(["run", "--config", str(config), "--out", str(tmp_path / "out")]) == EXIT_CONFIG_ERROR
    assert "not connected" in caplog.text
