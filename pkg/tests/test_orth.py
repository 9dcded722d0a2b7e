import math

import numpy as np
import pytest

from gossipeig import model as gm, oja, orth
from gossipeig.errors import NotPositiveDefiniteError
from gossipeig.linalg import cholesky, sym_eigen
from gossipeig.rng import SplitMix64


# --- scalar averaging ---------------------------------------------------------


def test_avg_step_examples():
    assert orth.avg_step(0.0, 4.0) == (2.0, 2.0)
    assert orth.avg_step(3.5, 3.5) == (3.5, 3.5)
    a, b = orth.avg_step(1.0, 2.0)
    assert a == b == 1.5
    assert a + b == 3.0


def test_two_node_single_round():
    m = gm.population_model(2)
    st = orth.run_averaging(m, [0.0, 4.0], 1, SplitMix64(0))
    assert np.array_equal(st.y, [2.0, 2.0])


def test_consensus_is_absorbing():
    m = gm.population_model(5)
    st = orth.run_averaging(m, np.full(5, 2.5), 500, SplitMix64(1))
    assert np.array_equal(st.y, np.full(5, 2.5))


def test_mean_conservation():
    m = gm.population_model(16)
    x0 = SplitMix64(42).uniforms(16) * 10.0
    st = orth.run_averaging(m, x0, 20_000, SplitMix64(7), record_sums=True)
    total = x0.sum()
    assert np.max(np.abs(st.round_sums - total)) <= 1e-9 * max(1.0, abs(total))


def test_error_monotone_nonincreasing():
    m = gm.population_model(16)
    rng = SplitMix64(11)
    y = SplitMix64(3).uniforms(16) * 4.0 - 2.0
    avg = y.mean()
    err = np.sum((y - avg) ** 2)
    for t in range(2000):
        ev = gm.sample_event(m, t, rng)
        y[ev.u], y[ev.v] = orth.avg_step(y[ev.u], y[ev.v])
        new_err = np.sum((y - avg) ** 2)
        assert new_err <= err + 1e-12
        err = new_err


def test_averaging_rate_module_scale():
    # rounds from the convergence lemma with lambda_2 from the eigensolver
    n, eps, delta = 16, 1e-3, 0.1
    m = gm.population_model(n)
    lam2 = float(sym_eigen(gm.averaging_operator(m)).values[1])
    t = math.ceil(math.log(1.0 / (eps * delta)) / math.log(1.0 / lam2))
    ok = 0
    for seed in range(20):
        x0 = np.zeros(n)
        x0[0] = 1.0
        st = orth.run_averaging(m, x0, t, SplitMix64(seed))
        xavg = x0.mean()
        ok += np.sum((st.y - xavg) ** 2) <= eps * np.sum((x0 - xavg) ** 2)
    assert ok >= 18


# --- table averaging ------------------------------------------------------------


def test_orth_avg_step_rank1():
    state = orth.init_orth_state(np.array([[1.0], [math.sqrt(3.0)]]))
    state.r[0, 0], state.r[1, 0] = 1.0, 3.0
    orth.orth_avg_step(state, 0, 1)
    assert np.array_equal(state.r, [[2.0], [2.0]])


def test_orth_avg_step_equal_tables_fixed_point():
    q = oja.init_states(4, 2, SplitMix64(5))
    state = orth.init_orth_state(q)
    state.r[:] = state.r[0]
    before = state.r.copy()
    orth.orth_avg_step(state, 1, 3)
    assert np.array_equal(state.r, before)


def test_table_init_and_global_mean_invariant():
    q = oja.init_states(6, 3, SplitMix64(9))
    state = orth.init_orth_state(q)
    for idx, (i, j) in enumerate(state.pairs):
        assert np.array_equal(state.r[:, idx], q[:, i] * q[:, j])
        target = float(q[:, i] @ q[:, j]) / 6.0
        assert abs(np.mean(state.r[:, idx]) - target) <= 1e-15 * max(1.0, abs(target))
    m = gm.population_model(6)
    orth.run_orth_averaging(state, m, 300, SplitMix64(10))
    for idx, (i, j) in enumerate(state.pairs):
        target = float(q[:, i] @ q[:, j]) / 6.0
        assert abs(np.mean(state.r[:, idx]) - target) <= 1e-12 * max(1.0, abs(target))


# --- finalization ----------------------------------------------------------------


def test_finalize_with_exact_averages_matches_centralized():
    q = oja.init_states(8, 3, SplitMix64(13))
    state = orth.init_orth_state(q)
    state.r[:] = state.r.mean(axis=0)  # exact consensus
    vref = orth.centralized_orth(q)
    for u in range(8):
        row = orth.finalize_orth(state, u, 8)
        assert row is not None
        assert np.max(np.abs(row - vref[u])) <= 1e-10
    assert not state.failed.any()


def test_finalize_rank_one_normalization():
    q = oja.init_states(10, 1, SplitMix64(21))
    state = orth.init_orth_state(q)
    state.r[:] = state.r.mean(axis=0)
    vhat, failures = orth.finalize_all(state, 10)
    assert failures == 0
    assert abs(np.sum(vhat**2) - 1.0) <= 1e-12
    assert np.max(np.abs(vhat[:, 0] - q[:, 0] / np.sqrt(np.sum(q**2)))) <= 1e-12


def test_finalize_corrupted_averages_sets_failed_flag():
    state = orth.init_orth_state(np.ones((2, 2)))
    # node 0's scaled table becomes [[1, 2], [2, 1]]: not positive definite
    state.r[0] = np.array([0.5, 1.0, 0.5])
    row = orth.finalize_orth(state, 0, 2)
    assert row is None
    assert state.failed[0]
    assert np.array_equal(state.vhat[0], [0.0, 0.0])


# --- centralized reference ---------------------------------------------------------


def test_centralized_orth_identity_for_orthonormal_input():
    q = np.eye(3)[:, :2]
    assert np.array_equal(orth.centralized_orth(q), q)


def test_centralized_orth_diagonal():
    assert np.array_equal(orth.centralized_orth(np.diag([2.0, 3.0])), np.eye(2))


def test_centralized_orth_reconstruction():
    q = oja.init_states(8, 3, SplitMix64(17))
    v = orth.centralized_orth(q)
    assert np.sqrt(np.sum((v.T @ v - np.eye(3)) ** 2)) <= 1e-10
    gram = np.array([[float(np.sum(q[:, i] * q[:, j])) for j in range(3)] for i in range(3)])
    low = cholesky(gram)
    assert np.sqrt(np.sum((v @ low.T - q) ** 2)) <= 1e-10 * np.sqrt(np.sum(q * q))


def test_centralized_orth_rank_deficient():
    q = np.ones((4, 2))
    with pytest.raises(NotPositiveDefiniteError):
        orth.centralized_orth(q)


def test_first_columns_depend_only_on_first_columns():
    # bitwise: dropping the last column must not change the leading ones
    q = oja.init_states(8, 3, SplitMix64(19))
    full = orth.centralized_orth(q)
    partial = orth.centralized_orth(np.ascontiguousarray(q[:, :2]))
    assert np.array_equal(full[:, :2], partial)


def test_protocol_approaches_centralized():
    n, k = 16, 3
    m = gm.population_model(n)
    rng = SplitMix64(23)
    q = oja.init_states(n, k, rng)
    vref = orth.centralized_orth(q)
    state = orth.run_orth_protocol(q, m, 40_000, rng)
    assert not state.failed.any()
    row_err = np.sqrt(np.sum((state.vhat - vref) ** 2, axis=1)).max()
    assert row_err <= 1e-2
