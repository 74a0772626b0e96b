import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import rolekit as rk
from rolekit.errors import ConvergenceError, InputError, ScaleCapError
from rolekit.solvers import residual_nps

from conftest import random_digraph, random_strong

LOOP = rk.Digraph.from_arcs(1, [(0, 0, 1.0)])
CYCLE2 = rk.Digraph.from_arcs(2, [(0, 1, 1.0), (1, 0, 1.0)])


def solve(g, b, eps=1e-13, **kw):
    return rk.solve_rw_similarity(rk.transition_pair(g), rk.SolverConfig(beta2=b, epsilon=eps), **kw)


def dense_pair(PQ):
    return PQ.P.toarray(), PQ.Q.toarray()


def kron_nps(A, b):
    n = A.shape[0]
    K = np.kron(A, A) + np.kron(A.T, A.T)
    S1 = A @ A.T + A.T @ A
    # row-major vec: vec(A X B^T) = (A kron B) vec(X)
    return np.linalg.solve(np.eye(n * n) - b * K, S1.ravel()).reshape(n, n)


def test_config_validation():
    for bad in (dict(beta2=1.0), dict(beta2=-0.1), dict(epsilon=0), dict(max_iters=0), dict(max_n=0)):
        with pytest.raises(InputError):
            rk.SolverConfig(**bad)


def test_beta_zero_gives_first_term(toy_aug):
    PQ = rk.transition_pair(toy_aug)
    P, Q = dense_pair(PQ)
    S, rep = solve(toy_aug, 0.0)
    np.testing.assert_allclose(S.values, P @ P.T + Q @ Q.T, atol=1e-15)
    assert rep.iterations == 2 and rep.final_step == 0.0


@pytest.mark.parametrize("b", [0.0, 0.2, 0.5, 0.9])
def test_single_loop_closed_form(b):
    S, rep = solve(LOOP, b)
    assert abs(S.values[0, 0] - 2 / (1 - b)) <= rep.error_bound + 1e-12
    assert rk.residual_rw(np.array([[2 / (1 - b)]]), rk.transition_pair(LOOP), b) <= 1e-14


@pytest.mark.parametrize("b", [0.1, 0.5, 0.8])
def test_two_cycle_closed_form(b):
    S, _ = solve(CYCLE2, b)
    np.testing.assert_allclose(S.values, 2 / (1 - b) * np.eye(2), atol=1e-11)


def test_residual_of_zero_matrix(toy_aug):
    PQ = rk.transition_pair(toy_aug)
    P, Q = dense_pair(PQ)
    assert rk.residual_rw(np.zeros((6, 6)), PQ, 0.5) == pytest.approx(np.abs(P @ P.T + Q @ Q.T).max())
    with pytest.raises(InputError):
        rk.residual_rw(np.zeros((2, 2)), PQ, 0.5)


def test_converged_residual_small(toy_aug):
    S, rep = solve(toy_aug, 0.5, eps=1e-10)
    assert rep.converged
    assert rep.residual <= 1e-9
    assert rep.error_bound == pytest.approx(rep.final_step)


def test_nonconvergence_is_reported(toy_aug):
    PQ = rk.transition_pair(toy_aug)
    S, rep = rk.solve_rw_similarity(PQ, rk.SolverConfig(beta2=0.9, epsilon=1e-14, max_iters=3))
    assert not rep.converged and rep.iterations == 3


def test_scale_cap():
    PQ = rk.transition_pair(rk.augment_loops(rk.Digraph.from_arcs(4, [])))
    with pytest.raises(ScaleCapError):
        rk.solve_rw_similarity(PQ, rk.SolverConfig(max_n=3))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 10), st.floats(0.05, 0.9))
def test_contraction_of_steps(seed, n, b):
    g = random_strong(n, np.random.default_rng(seed))
    _, rep = solve(g, b, eps=1e-12, record=True)
    steps = rep.steps
    for prev, cur in zip(steps, steps[1:]):
        assert cur <= b * prev + 1e-14


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 10), st.floats(0.05, 0.9),
       st.sampled_from([1e-10, 1e-8, 1e-6]))
def test_a_posteriori_bound(seed, n, b, eps):
    g = random_strong(n, np.random.default_rng(seed))
    ref, _ = solve(g, b, eps=1e-14)
    S, rep = solve(g, b, eps=eps)
    assert np.abs(S.values - ref.values).max() <= eps * b / (1 - b) + 10 * 1e-14


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10))
def test_agrees_with_long_partial_sum(seed, n):
    PQ = rk.transition_pair(random_strong(n, np.random.default_rng(seed)))
    S, _ = rk.solve_rw_similarity(PQ, rk.SolverConfig(beta2=0.5, epsilon=1e-15))
    np.testing.assert_allclose(S.values, rk.partial_sum(PQ, 0.5, 60).values, atol=1e-12, rtol=0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 12), st.floats(0.01, 0.95))
def test_psd_positive_and_unique(seed, n, b):
    # loops make the chain aperiodic; on periodic graphs such as the 2-cycle
    # walkers from different nodes never meet and S* has zero entries
    rng = np.random.default_rng(seed)
    g = rk.augment_loops(random_strong(n, rng))
    PQ = rk.transition_pair(g)
    cfg = rk.SolverConfig(beta2=b, epsilon=1e-11)
    R = rng.random((n, n))
    sols = []
    for init in (None, np.eye(n), R + R.T):
        S, rep = rk.solve_rw_similarity(PQ, cfg, init=init)
        sols.append((S.values, rep.error_bound))
    S = sols[0][0]
    assert np.linalg.eigvalsh(S).min() >= -1e-10 * np.abs(S).max()
    assert S.min() > 0
    for other, bound in sols[1:]:
        assert np.abs(other - S).max() <= 2 * max(bound, sols[0][1]) + 1e-14


def test_periodic_graph_has_zero_entries():
    S, _ = solve(CYCLE2, 0.5)
    assert S.values[0, 1] == 0.0


def test_structural_baseline_examples(toy):
    assert not rk.baseline_structural(rk.Digraph.from_arcs(3, [])).values.any()
    S = rk.baseline_structural(rk.Digraph.from_arcs(2, [(0, 1, 1.0)])).values
    np.testing.assert_array_equal(S, np.eye(2))
    assert rk.baseline_structural(toy).values[0, 3] == 1


def test_degree_normalized_examples():
    assert rk.baseline_degree_normalized(LOOP).values.tolist() == [[2.0]]
    np.testing.assert_array_equal(rk.baseline_degree_normalized(CYCLE2).values, 2 * np.eye(2))
    # 3-regular circulant: scaling identity
    A = sum(np.roll(np.eye(6), s, axis=1) for s in (0, 1, 2))
    g = rk.Digraph.from_dense(A)
    np.testing.assert_allclose(rk.baseline_degree_normalized(g).values,
                               rk.baseline_structural(g).values / 9, atol=1e-15)


def test_degree_normalized_zero_degrees(toy):
    with pytest.raises(InputError):
        rk.baseline_degree_normalized(toy)
    S = rk.baseline_degree_normalized(toy, allow_zero_degrees=True).values
    assert np.isfinite(S).all()


def test_degree_normalized_is_beta_zero_solution(toy_aug):
    S, _ = solve(toy_aug, 0.0)
    np.testing.assert_allclose(S.values, rk.baseline_degree_normalized(toy_aug).values, atol=1e-15)


def test_spectral_bound_examples():
    assert rk.nps_spectral_bound(LOOP).rho == pytest.approx(2.0, rel=1e-12)
    assert rk.nps_spectral_bound(rk.Digraph.from_arcs(3, [])).rho == 0.0
    assert rk.nps_spectral_bound(CYCLE2).rho == pytest.approx(2.0, rel=1e-12)
    A = CYCLE2.dense()
    K = np.kron(A, A) + np.kron(A.T, A.T)
    assert np.abs(np.linalg.eigvals(K)).max() == pytest.approx(2.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_spectral_bound_matches_kronecker(seed, n):
    g = random_digraph(n, np.random.default_rng(seed), loops=False)
    A = g.dense()
    K = np.kron(A, A) + np.kron(A.T, A.T)
    rho = np.abs(np.linalg.eigvals(K)).max()
    assert rk.nps_spectral_bound(g).rho == pytest.approx(rho, rel=1e-6, abs=1e-12)


def test_nps_examples(toy):
    A = toy.dense()
    S, _ = rk.solve_nps(toy, 0.0)
    np.testing.assert_array_equal(S.values, A @ A.T + A.T @ A)
    S, rep = rk.solve_nps(LOOP, 0.25, rk.SolverConfig(epsilon=1e-13))
    assert S.values[0, 0] == pytest.approx(4.0, abs=1e-11)
    assert rep.residual <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.floats(0.05, 0.9))
def test_nps_matches_kronecker_solve(seed, n, frac):
    g = random_digraph(n, np.random.default_rng(seed))
    rho = rk.nps_spectral_bound(g).rho
    b = frac / rho
    S, rep = rk.solve_nps(g, b, rk.SolverConfig(epsilon=1e-13, max_iters=100_000))
    assert rep.converged
    np.testing.assert_allclose(S.values, kron_nps(g.dense(), b), atol=1e-10, rtol=1e-12)


def test_nps_rejects_beta_above_bound():
    with pytest.raises(ConvergenceError, match="1/rho = 0.5"):
        rk.solve_nps(CYCLE2, 0.6)


def test_nps_divergence_detected_without_precheck():
    with pytest.raises(ConvergenceError):
        rk.solve_nps(CYCLE2, 0.6, rk.SolverConfig(max_iters=100_000), check_bound=False)


def test_nps_residual_helper():
    S, _ = rk.solve_nps(CYCLE2, 0.2, rk.SolverConfig(epsilon=1e-14))
    assert residual_nps(S.values, CYCLE2, 0.2) <= 1e-13


def test_limit_weights_examples():
    lw = rk.limit_weights(rk.transition_pair(LOOP))
    assert lw.converged and lw.W.tolist() == [[1.0]]
    PQ = rk.transition_pair(CYCLE2)
    half = 0.5 * np.eye(2)
    np.testing.assert_array_equal(0.5 * (PQ.P.T @ half @ PQ.P + PQ.Q.T @ half @ PQ.Q), half)
    lw = rk.limit_weights(PQ)
    assert lw.W.sum() == pytest.approx(1.0)
    assert lw.residual <= 1e-12


def test_limit_weights_doubly_stochastic():
    # symmetric circulant with loops: P = Q doubly stochastic
    n = 5
    A = sum(np.roll(np.eye(n), s, axis=1) for s in (-1, 0, 1))
    PQ = rk.transition_pair(rk.Digraph.from_dense(A))
    J = np.full((n, n), 1 / n**2)
    P, Q = dense_pair(PQ)
    np.testing.assert_allclose(0.5 * (P.T @ J @ P + Q.T @ J @ Q), J, atol=1e-15)
    lw = rk.limit_weights(PQ)
    np.testing.assert_allclose(lw.W, J, atol=1e-12)


def test_limit_weights_periodic_chain_is_damped():
    # directed 3-cycle: P = Q^T is a period-3 permutation
    g = rk.Digraph.from_arcs(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)])
    lw = rk.limit_weights(rk.transition_pair(g))
    assert lw.W.sum() == pytest.approx(1.0)
    assert lw.residual <= 1e-10


def test_verify_limit_examples(toy_aug):
    rows = rk.verify_limit(rk.transition_pair(LOOP), [0.3, 0.9])
    assert all(r.delta <= 1e-8 for r in rows)
    PQ = rk.transition_pair(toy_aug)
    row = rk.verify_limit(PQ, [0.0])[0]
    lw = rk.limit_weights(PQ)
    P, Q = dense_pair(PQ)
    assert row.delta == pytest.approx(np.abs(P @ P.T + Q @ Q.T - 2 * np.trace(lw.W)).max())


def test_numerical_rank():
    assert rk.numerical_rank(np.zeros((3, 3))) == 0
    assert rk.numerical_rank(np.ones((4, 4))) == 1
    assert rk.numerical_rank(np.diag([1.0, 1e-3, 1e-12])) == 2
