import numpy as np
import pytest

from mpot.gp import (
    GPSpec,
    build_precision,
    prior_covariance,
    sample_prior,
    straight_line_mean,
    transition_blocks,
    transition_cost,
)
from mpot.world import make_rng


def dense_precision_oracle(dt, qc, T, s_start, s_goal, goal=True):
    # one config dimension, assembled entry by entry
    phi = np.array([[1.0, dt], [0.0, 1.0]])
    Q = qc * np.array([[dt**3 / 3, dt**2 / 2], [dt**2 / 2, dt]])
    rows = T + 2 if goal else T + 1
    D = np.zeros((2 * rows, 2 * (T + 1)))
    D[0:2, 0:2] = np.eye(2)
    for t in range(T):
        D[2 * (t + 1):2 * (t + 2), 2 * t:2 * t + 2] = -phi
        D[2 * (t + 1):2 * (t + 2), 2 * (t + 1):2 * (t + 2)] = np.eye(2)
    blocks = [np.eye(2) * s_start**2] + [Q] * T
    if goal:
        D[-2:, -2:] = np.eye(2)
        blocks.append(np.eye(2) * s_goal**2)
    Qbig = np.zeros((2 * rows, 2 * rows))
    for i, B in enumerate(blocks):
        Qbig[2 * i:2 * i + 2, 2 * i:2 * i + 2] = B
    return D.T @ np.linalg.inv(Qbig) @ D


def test_unit_blocks():
    b = transition_blocks(GPSpec(dim=1, dt=1.0, qc=1.0))
    np.testing.assert_array_equal(b.phi, [[1, 1], [0, 1]])
    np.testing.assert_allclose(b.q, [[1 / 3, 1 / 2], [1 / 2, 1]])
    np.testing.assert_allclose(b.q_inv, [[12, -6], [-6, 4]])


def test_velocity_coupling():
    assert transition_blocks(GPSpec(dim=1, dt=0.1)).phi[0, 1] == 0.1


@pytest.mark.parametrize("dt", [0.01, 0.1, 1.0])
@pytest.mark.parametrize("qc", [0.1, 1.0, 10.0])
def test_q_times_inverse_is_identity(dt, qc):
    b = transition_blocks(GPSpec(dim=2, dt=dt, qc=qc))
    np.testing.assert_allclose(b.q @ b.q_inv, np.eye(4), atol=1e-8)
    np.testing.assert_allclose(b.q, b.q.T)
    assert np.all(np.linalg.eigvalsh(b.q) > 0)


def test_phi_composition():
    a = transition_blocks(GPSpec(dim=2, dt=0.3)).phi
    b = transition_blocks(GPSpec(dim=2, dt=0.6)).phi
    np.testing.assert_array_equal(a @ a, b)


def test_straight_line_examples():
    mu = straight_line_mean([0.0], [10.0], 10, 1.0)
    np.testing.assert_allclose(mu[:, 1], 1.0)
    np.testing.assert_allclose(mu[:, 0], np.arange(11))
    still = straight_line_mean([2.0, 3.0], [2.0, 3.0], 5, 0.5)
    np.testing.assert_array_equal(still[:, 2:], 0.0)
    with pytest.raises(ValueError):
        straight_line_mean([0.0], [1.0], 0, 1.0)


def test_straight_line_from_states():
    mu = straight_line_mean([0, 0, 9, 9], [4, 8, 9, 9], 4, 2.0, dim=2)
    np.testing.assert_allclose(mu[2], [2, 4, 0.5, 1.0])


@pytest.mark.parametrize("goal", [True, False])
def test_precision_matches_dense_oracle(goal):
    spec = GPSpec(dim=1, dt=0.2, qc=0.7, sigma_start=0.1, sigma_goal=0.3, goal_conditioned=goal)
    K = build_precision(spec, 5).toarray()
    ref = dense_precision_oracle(0.2, 0.7, 5, 0.1, 0.3, goal)
    np.testing.assert_allclose(K, ref, rtol=1e-8, atol=1e-8 * np.abs(ref).max())


def test_precision_structure():
    spec = GPSpec(dim=2, dt=0.1)
    K = build_precision(spec, 6).toarray()
    d = spec.state_dim
    i, j = np.nonzero(K)
    assert np.max(np.abs(i - j)) < 2 * d
    np.testing.assert_allclose(K, K.T, atol=1e-10 * np.abs(K).max())
    assert np.all(np.linalg.eigvalsh(K) > 0)
    with pytest.raises(ValueError):
        build_precision(spec, 1)


def test_zero_spread_collapses_to_mean():
    spec = GPSpec(dim=2, dt=0.5, sigma_init=0.0)
    X = sample_prior(spec, [0, 0], [4, 2], 3, 8, make_rng(0))
    mu = straight_line_mean([0, 0], [4, 2], 8, 0.5)
    np.testing.assert_allclose(X, np.broadcast_to(mu, X.shape), atol=1e-6)


def test_prior_moments_match_oracle():
    spec = GPSpec(dim=1, dt=0.5, qc=1.0, sigma_start=0.2, sigma_goal=0.2, sigma_init=1.0)
    T, n = 8, 10_000
    X = sample_prior(spec, [0.0], [3.0], n, T, make_rng(42)).reshape(n, -1)
    mu = straight_line_mean([0.0], [3.0], T, 0.5).ravel()
    K = np.linalg.inv(dense_precision_oracle(0.5, 1.0, T, 0.2, 0.2))
    se = np.sqrt(np.diag(K) / n)
    assert np.all(np.abs(X.mean(axis=0) - mu) <= 4 * se)
    emp = np.cov(X, rowvar=False)
    assert np.linalg.norm(emp - K) / np.linalg.norm(K) <= 0.10
    np.testing.assert_allclose(prior_covariance(spec, T), K, rtol=1e-8, atol=1e-12)


def test_endpoints_near_conditioning():
    spec = GPSpec(dim=2, dt=0.1, sigma_start=1e-3, sigma_goal=1e-3, sigma_init=1.0)
    X = sample_prior(spec, [1, 2], [5, -3], 2000, 10, make_rng(1))
    for t, target in ((0, [1, 2]), (-1, [5, -3])):
        dev = X[:, t, :2] - target
        np.testing.assert_allclose(dev.std(axis=0), 1e-3, rtol=0.1)
        assert np.mean(np.abs(dev) > 3e-3) < 0.01


def test_sampling_seeded():
    spec = GPSpec(dim=2)
    a = sample_prior(spec, [0, 0], [1, 1], 4, 6, make_rng(5))
    b = sample_prior(spec, [0, 0], [1, 1], 4, 6, make_rng(5))
    c = sample_prior(spec, [0, 0], [1, 1], 4, 6, make_rng(6))
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_transition_cost_examples():
    b = transition_blocks(GPSpec(dim=1, dt=1.0, qc=1.0))
    x = np.array([0.3, -0.7])
    assert transition_cost(x, b.phi @ x, b) == pytest.approx(0.0, abs=1e-15)
    assert transition_cost([0.0, 0.0], [1.0, 0.0], b) == pytest.approx(6.0)
    rng = make_rng(3)
    dev = rng.standard_normal((50, 2))
    assert np.all(transition_cost(np.zeros((50, 2)), dev, b) > 0)
    with pytest.raises(ValueError):
        transition_cost([0.0], [1.0, 0.0], b)


def test_transition_cost_scales_inversely_with_qc():
    x, y = np.array([0.1, 0.4, -1, 2]), np.array([1.0, 0.0, 0.3, 0.2])
    c1 = transition_cost(x, y, transition_blocks(GPSpec(dim=2, dt=0.2, qc=1.0)))
    c5 = transition_cost(x, y, transition_blocks(GPSpec(dim=2, dt=0.2, qc=5.0)))
    assert c5 == pytest.approx(c1 / 5)


def test_spec_validation():
    with pytest.raises(ValueError):
        GPSpec(dt=0)
    with pytest.raises(ValueError):
        GPSpec(qc=-1)
    with pytest.raises(ValueError):
        GPSpec(dim=0)
