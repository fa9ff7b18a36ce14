import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mpot.ot import (
    SinkhornConfig,
    SinkhornDivergenceError,
    marginal_residual,
    ot_objective,
    solve_entropic_ot,
    uniform_histogram,
)


def brute_force_assignment(C):
    n = C.shape[0]
    best = min(itertools.permutations(range(n)), key=lambda p: C[range(n), p].sum())
    return np.array(best), C[range(n), best].sum() / n


def plain_sinkhorn(C, lam, iters=20000):
    # textbook scaling without stabilization; safe for moderate lam
    n, m = C.shape
    K = np.exp(-C / lam)
    a, b = np.full(n, 1 / n), np.full(m, 1 / m)
    v = np.ones(m)
    for _ in range(iters):
        u = a / (K @ v)
        v = b / (K.T @ u)
    return u[:, None] * K * v[None, :]


def test_constant_cost_gives_uniform_plan():
    P = solve_entropic_ot(np.zeros((2, 2)), config=SinkhornConfig(lam=1.0))
    np.testing.assert_allclose(P.coupling, 0.25, atol=1e-12)
    assert P.converged


def test_swap_cost_concentrates_on_identity():
    P = solve_entropic_ot(np.array([[0.0, 1.0], [1.0, 0.0]]), config=SinkhornConfig(lam=0.01))
    np.testing.assert_allclose(P.coupling, [[0.5, 0.0], [0.0, 0.5]], atol=1e-6)


@pytest.mark.parametrize("lam", [0.05, 0.3, 1.0, 4.0])
def test_two_by_two_closed_form(lam):
    # by symmetry W = [[p, q], [q, p]] with p / q = exp(1 / lam) and p + q = 1/2
    P = solve_entropic_ot(np.array([[0.0, 1.0], [1.0, 0.0]]), config=SinkhornConfig(lam=lam, tol=1e-12))
    p = 0.5 / (1 + np.exp(-1 / lam))
    np.testing.assert_allclose(P.coupling, [[p, 0.5 - p], [0.5 - p, p]], atol=1e-10)


def test_matches_unstabilized_sinkhorn(rng):
    C = rng.uniform(size=(5, 7))
    P = solve_entropic_ot(C, config=SinkhornConfig(lam=0.2, tol=1e-13, max_iters=10000))
    np.testing.assert_allclose(P.coupling, plain_sinkhorn(C, 0.2), atol=1e-10)


def test_nonuniform_marginals(rng):
    C = rng.uniform(size=(4, 3))
    src = np.array([0.1, 0.2, 0.3, 0.4])
    dst = np.array([0.5, 0.25, 0.25])
    P = solve_entropic_ot(C, src, dst, SinkhornConfig(lam=0.05))
    assert P.converged
    assert marginal_residual(P, src, dst) <= 1e-5


@pytest.mark.xfail(strict=True, reason="entropic bias at lam=0.01 exceeds 1% of the optimum on some 4x4 instances")
def test_small_lambda_within_one_percent_of_assignment(rng):
    cfg = SinkhornConfig(lam=0.01, lam_start=0.5, max_iters=20000)
    gaps = []
    for _ in range(200):
        C = rng.uniform(size=(4, 4))
        _, opt = brute_force_assignment(C)
        gaps.append((ot_objective(solve_entropic_ot(C, config=cfg), C) - opt) / opt)
    assert max(gaps) <= 1e-2


def test_small_lambda_gap_within_entropy_bound(rng):
    # <W_lam, C> - opt <= lam * (H(W_lam) - H(P*)) <= lam * log n for uniform marginals
    cfg = SinkhornConfig(lam=0.01, lam_start=0.5, max_iters=20000)
    for _ in range(200):
        C = rng.uniform(size=(4, 4))
        _, opt = brute_force_assignment(C)
        P = solve_entropic_ot(C, config=cfg)
        assert P.converged
        assert ot_objective(P, C) - opt <= 0.01 * np.log(4) + 1e-5


def test_lambda_1e3_gap_with_eps_scaling(rng):
    C = rng.uniform(size=(4, 4))
    _, opt = brute_force_assignment(C)
    P = solve_entropic_ot(C, config=SinkhornConfig(lam=1e-3, lam_start=0.5))
    assert P.converged
    assert (ot_objective(P, C) - opt) / opt <= 1e-2


def test_ot_objective_examples():
    C = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert ot_objective(np.full((2, 2), 0.25), C) == 0.5
    assert ot_objective(np.array([[0.5, 0.0], [0.0, 0.5]]), C) == 0.0
    with pytest.raises(ValueError):
        ot_objective(np.ones((2, 3)), C)


def test_marginal_residual_examples():
    u = uniform_histogram(2)
    W = np.full((2, 2), 0.25)
    assert marginal_residual(W, u, u) == 0.0
    W2 = W.copy()
    W2[0] *= 2
    # row 0 now sums to 1.0 against 0.5; column sums are 0.75 against 0.5
    assert marginal_residual(W2, u, u) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        marginal_residual(W, uniform_histogram(3), u)


def test_rejects_non_finite_cost():
    C = np.ones((3, 3))
    C[1, 2] = np.nan
    with pytest.raises(ValueError, match=r"\(1, 2\)"):
        solve_entropic_ot(C)


def test_rejects_bad_histograms():
    with pytest.raises(ValueError):
        solve_entropic_ot(np.ones((2, 2)), src=[0.2, 0.2])
    with pytest.raises(ValueError):
        solve_entropic_ot(np.ones((2, 2)), dst=[1.0])


def test_divergence_carries_iteration(monkeypatch, rng):
    import mpot.ot as ot

    real = ot._kernel
    calls = []

    def flaky(a, b, cost, lam):
        calls.append(1)
        K = real(a, b, cost, lam)
        # the first kernel is fine, the one rebuilt after absorption overflows
        return K if len(calls) == 1 else np.full_like(K, np.inf)

    monkeypatch.setattr(ot, "_kernel", flaky)
    C = rng.uniform(size=(5, 5))
    with pytest.raises(SinkhornDivergenceError) as err:
        solve_entropic_ot(C, config=SinkhornConfig(lam=1e-3))
    assert err.value.iteration >= 1


def test_not_converged_uses_full_budget(rng):
    C = rng.uniform(size=(6, 6))
    P = solve_entropic_ot(C, config=SinkhornConfig(lam=1e-3, max_iters=3))
    assert not P.converged
    assert P.iterations_used == 3


def test_repeat_solves_identical(rng):
    C = rng.uniform(size=(5, 5))
    a = solve_entropic_ot(C).coupling
    b = solve_entropic_ot(C).coupling
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_objective_nonincreasing_as_lambda_shrinks(rng):
    compared = 0
    for _ in range(10):
        C = rng.uniform(size=(3, 3))
        objs = []
        for lam in (1.0, 0.1, 0.01, 0.001):
            P = solve_entropic_ot(C, config=SinkhornConfig(lam=lam, lam_start=1.0, tol=1e-9, max_iters=20000))
            # an unconverged plan is not W_lam, so it is left out of the comparison
            objs.append(ot_objective(P, C) if P.converged else None)
        done = [o for o in objs if o is not None]
        compared += len(done) - 1
        assert all(b <= a + 1e-9 for a, b in zip(done, done[1:]))
    assert compared >= 25


@pytest.mark.parametrize("k", [0.5, 3.0, 10.0])
def test_scaling_cost_and_lambda_together(rng, k):
    C = rng.uniform(size=(4, 5))
    a = solve_entropic_ot(C, config=SinkhornConfig(lam=0.1, tol=1e-12)).coupling
    b = solve_entropic_ot(k * C, config=SinkhornConfig(lam=0.1 * k, tol=1e-12)).coupling
    np.testing.assert_allclose(a, b, atol=1e-8)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_permutation_limit(rng, n):
    for _ in range(5):
        C = rng.uniform(size=(n, n))
        perm, _ = brute_force_assignment(C)
        P = solve_entropic_ot(C, config=SinkhornConfig(lam=1e-3, lam_start=0.5, max_iters=20000))
        np.testing.assert_array_equal(P.coupling.argmax(axis=1), perm)


def test_absorption_keeps_tiny_lambda_finite(rng):
    C = rng.uniform(size=(8, 8))
    P = solve_entropic_ot(C, config=SinkhornConfig(lam=1e-4, lam_start=0.5, max_iters=50000))
    assert np.all(np.isfinite(P.coupling))
    assert np.any(P.a != 0) or np.any(P.b != 0)


def test_eps_schedule_halves_down_to_target():
    assert SinkhornConfig(lam=0.1, lam_start=0.5).schedule() == [0.5, 0.25, 0.125, 0.1]
    assert SinkhornConfig(lam=0.1).schedule() == [0.1]


def test_config_validation():
    with pytest.raises(ValueError):
        SinkhornConfig(lam=0)
    with pytest.raises(ValueError):
        SinkhornConfig(tol=-1)
    with pytest.raises(ValueError):
        SinkhornConfig(absorb_threshold=0.5)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
              elements=st.floats(0, 1, allow_nan=False)),
       st.sampled_from([0.01, 0.1, 1.0]))
def test_converged_plans_are_feasible(C, lam):
    P = solve_entropic_ot(C, config=SinkhornConfig(lam=lam, max_iters=5000))
    assert np.all(P.coupling >= 0)
    if P.converged:
        n, m = C.shape
        assert marginal_residual(P, uniform_histogram(n), uniform_histogram(m)) <= 1e-5
