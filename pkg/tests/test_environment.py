import numpy as np
import pytest

from driftlab.drift import DriftMode, DriftSpec
from driftlab.environment import (
    DataSample,
    Innovations,
    LinearRegressionEnv,
    LogisticEnv,
    drift_step,
    initial_fixed_points,
    make_environment,
    sample,
)
from driftlab.graphs import Network


def regression_env(points, variance=0.0, mean=0.0, mode=DriftMode.COMMON, covariance=None, noise=1.0):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    dimension = points.shape[-1]
    drift = DriftSpec.create(dimension, mean, variance, mode)
    covariance = np.eye(dimension) if covariance is None else covariance
    return LinearRegressionEnv(points, drift, covariance, noise_variance=noise)


def test_drift_step_degenerate(rng):
    env = regression_env([[1.0, 2.0], [3.0, 4.0]])
    before = env.fixed_points.copy()
    drift_step(env, rng)
    np.testing.assert_array_equal(env.fixed_points, before)


def test_drift_step_common_mode_shares_the_increment(rng):
    env = regression_env(np.zeros((20, 3)), variance=0.1, mode=DriftMode.COMMON)
    before = env.fixed_points.copy()
    drift_step(env, rng)
    increments = env.fixed_points - before
    np.testing.assert_array_equal(increments, np.tile(increments[0], (20, 1)))
    assert np.any(increments != 0)


def test_drift_step_independent_mode(rng):
    env = regression_env(np.zeros((20, 3)), variance=0.1, mode=DriftMode.INDEPENDENT)
    drift_step(env, rng)
    assert len({tuple(row) for row in env.fixed_points}) == 20


def test_stacked_increment_second_moment(rng):
    for mode in DriftMode:
        env = regression_env(np.zeros((4, 2)), variance=0.01, mean=0.05, mode=mode)
        increments = np.broadcast_to(env.drift.draw(rng, 4, steps=50_000), (50_000, 4, 2))
        empirical = np.mean(np.sum(increments**2, axis=(1, 2)))
        assert empirical == pytest.approx(env.drift.stacked_second_moment(4), rel=0.03)


def test_sample_noiseless(rng):
    env = regression_env([[0.5, -1.0, 2.0]], noise=0.0)
    x = sample(env, rng)
    assert x.features.shape == (1, 3)
    np.testing.assert_allclose(x.response, x.features @ env.fixed_points[0])


def test_sample_regression_moments(rng):
    covariance = np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.3], [0.0, 0.3, 0.5]])
    w = np.array([1.0, -0.5, 0.25])
    env = regression_env(w, covariance=covariance, noise=0.2)

    features = env.draw_features(rng, steps=1_000_000)[:, 0, :]
    response = env.respond(features[:, None, :], env.draw_noise(rng, steps=1_000_000)).response[:, 0]

    np.testing.assert_allclose(features.T @ features / len(features), covariance, rtol=0.02, atol=0.01)
    assert np.mean(response**2) == pytest.approx(w @ covariance @ w + 0.2, rel=0.02)


def test_sample_logistic_symmetric(rng):
    env = LogisticEnv(np.zeros((1, 2)), DriftSpec.create(2), np.eye(2), regularization=1e-3)
    labels = env.respond(env.draw_features(rng, 100_000), env.draw_noise(rng, 100_000)).label
    assert set(np.unique(labels)) == {-1.0, 1.0}
    assert abs(labels.mean()) < 4 / np.sqrt(labels.size)


def test_sample_logistic_follows_model(rng):
    env = LogisticEnv(np.array([[4.0, 0.0]]), DriftSpec.create(2), np.eye(2), regularization=1e-3)
    x = env.respond(np.array([[[1.0, 0.0]], [[-1.0, 0.0]]]), np.full((2, 1), 0.5))
    np.testing.assert_array_equal(x.label, [[1.0], [-1.0]])


def test_invalid_environments():
    drift = DriftSpec.create(2)
    with pytest.raises(ValueError, match="positive definite"):
        LinearRegressionEnv(np.zeros((1, 2)), drift, np.diag([1.0, 0.0]))
    with pytest.raises(ValueError, match="symmetric"):
        LinearRegressionEnv(np.zeros((1, 2)), drift, np.array([[1.0, 0.1], [0.0, 1.0]]))
    with pytest.raises(ValueError, match="noise_variance"):
        LinearRegressionEnv(np.zeros((1, 2)), drift, np.eye(2), noise_variance=-1.0)
    with pytest.raises(ValueError, match="regularization must be positive"):
        LogisticEnv(np.zeros((1, 2)), drift, np.eye(2), regularization=0.0)
    with pytest.raises(ValueError, match="dimension 3"):
        LinearRegressionEnv(np.zeros((1, 3)), drift, np.eye(3))


def test_determinism():
    def trace(seed):
        rng = np.random.default_rng(seed)
        env = regression_env(np.zeros((3, 2)), variance=1e-2, mode=DriftMode.INDEPENDENT)
        points, responses = [], []
        for _ in range(10):
            drift_step(env, rng)
            points.append(env.fixed_points.copy())
            responses.append(sample(env, rng).response)
        return np.array(points), np.array(responses)

    a, b = trace(5), trace(5)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


def test_innovations_stack(rng):
    env = regression_env(np.zeros((3, 2)), variance=1e-2, mode=DriftMode.INDEPENDENT)
    parts = [env.draw_innovations(rng, 5) for _ in range(4)]
    stacked = Innovations.stack(parts)
    assert stacked.increments.shape == (5, 4, 3, 2)
    assert stacked.features.shape == (5, 4, 3, 2)
    assert stacked.noise.shape == (5, 4, 3)
    np.testing.assert_array_equal(stacked.features[:, 2], parts[2].features)


def test_stacked_environment_advances_together(rng):
    env = regression_env(np.ones((3, 2)), variance=1e-2).stack(4)
    assert env.fixed_points.shape == (4, 3, 2)
    assert env.agents == 3
    increments = rng.standard_normal((4, 1, 2))
    env.advance(increments)
    np.testing.assert_allclose(env.fixed_points, 1 + np.broadcast_to(increments, (4, 3, 2)))


def test_reference():
    env = regression_env([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    np.testing.assert_array_equal(env.reference(), env.fixed_points)

    perron = np.array([0.5, 0.25, 0.25])
    pareto = env.reference("pareto", perron)
    np.testing.assert_allclose(pareto, np.tile([0.75, 0.5], (3, 1)))

    with pytest.raises(ValueError, match="Perron vector"):
        env.reference("pareto")
    logistic = LogisticEnv(np.zeros((2, 2)), DriftSpec.create(2), np.eye(2))
    with pytest.raises(ValueError, match="no closed-form Pareto"):
        logistic.reference("pareto", perron[:2])


def test_data_sample_agent():
    x = DataSample(np.arange(12.0).reshape(2, 3, 2), np.arange(6.0).reshape(2, 3))
    one = x.agent(1)
    np.testing.assert_array_equal(one.features, [[2.0, 3.0], [8.0, 9.0]])
    np.testing.assert_array_equal(one.response, [1.0, 4.0])


def test_problem_constants():
    env = regression_env([[0.0, 0.0], [1.0, 1.0]], covariance=np.diag([1.0, 2.0]), noise=0.5)
    pc = env.problem_constants()
    assert pc.nu == pytest.approx(1.0)
    assert pc.delta_lip == pytest.approx(2.0)
    assert pc.sigma_s2 == pytest.approx(3.0 * 0.5)
    assert pc.disagreement == pytest.approx(2.0)
    assert pc.agents == 2

    exact = env.problem_constants(exact=True)
    assert exact.alpha2 == exact.beta2 == exact.sigma_s2 == 0.0

    logistic = LogisticEnv(np.zeros((3, 2)), DriftSpec.create(2), np.eye(2), regularization=0.01)
    pc = logistic.problem_constants(c1=2.0)
    assert pc.nu == pytest.approx(0.02)
    assert pc.delta_lip == pytest.approx(0.25 + 0.02)
    assert pc.c1 == 2.0


def test_initial_fixed_points(rng):
    common = initial_fixed_points("common", 4, 3, rng, scale=2.0)
    np.testing.assert_array_equal(common, np.tile(common[0], (4, 1)))
    assert np.linalg.norm(common[0]) == pytest.approx(2.0)

    spread = initial_fixed_points("spread", 4, 3, rng, spread=0.5)
    assert len({tuple(row) for row in spread}) == 4

    network = Network.random(6, 0.6, rng)
    smooth = initial_fixed_points("smooth", 6, 2, rng, scale=1.5, network=network, bandwidth=2)
    assert np.sqrt(np.mean(np.sum(smooth**2, axis=1))) == pytest.approx(1.5)

    with pytest.raises(ValueError, match="needs the network"):
        initial_fixed_points("smooth", 6, 2, rng)


def test_make_environment():
    drift = DriftSpec.create(2)
    env = make_environment("logistic", np.zeros((1, 2)), drift, np.eye(2), regularization=0.1)
    assert isinstance(env, LogisticEnv)
    assert env.regularization == 0.1
    assert isinstance(make_environment("regression", np.zeros((1, 2)), drift, np.eye(2)), LinearRegressionEnv)
