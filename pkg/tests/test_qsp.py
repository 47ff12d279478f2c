import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qvaradhan.linalg import apply_function, child_rng, log_trace_exp, random_hermitian
from qvaradhan.qsp import (
    JumpPath,
    _simulate,
    build_generator,
    estimate_trace,
    jump_excess_bound,
    jump_excess_probability,
    kappa_marginal,
    path_estimates,
    path_weight,
    sample_path,
)

seeds = st.integers(0, 2**32 - 1)


def exact_trace(H, X, f):
    return math.exp(log_trace_exp(apply_function(X, f) - H))


def test_generator_two_by_two():
    b = 0.3 - 0.4j
    H = np.array([[1.0, b], [np.conj(b), -2.0]])
    g = build_generator(H)
    assert np.allclose(g.diagonal_shift, [1.0 - 0.5, -2.0 - 0.5])
    assert np.allclose(g.matrix, [[-0.5, 0.5], [0.5, -0.5]])
    assert g.phases[0, 1] == pytest.approx(-b / 0.5)


def test_generator_diagonal():
    g = build_generator(np.diag([0.2, 1.0, -3.0]))
    assert not g.rates.any()
    assert np.allclose(g.diagonal_shift, [0.2, 1.0, -3.0])
    assert np.isnan(g.phases).all()


@settings(max_examples=20)
@given(seeds)
def test_generator_rows_sum_to_zero(seed):
    g = build_generator(random_hermitian(4, seed))
    assert np.abs(g.matrix.sum(axis=1)).max() <= 1e-12
    assert np.allclose(g.rates, g.rates.T)
    ok = g.rates > 0
    assert np.allclose(np.abs(g.phases[ok]), 1.0)


def test_kappa_full_set_is_trace():
    H, X = random_hermitian(3, 1), random_hermitian(3, 2)
    assert kappa_marginal(H, X, [0.4], [[0, 1, 2]]) == pytest.approx(
        math.exp(log_trace_exp(-H)), rel=1e-12)


def test_kappa_refinement_invariance():
    H, X = random_hermitian(3, 3), random_hermitian(3, 4)
    a = kappa_marginal(H, X, [0.2, 0.7], [[0], [1, 2]])
    b = kappa_marginal(H, X, [0.2, 0.5, 0.7], [[0], [0, 1, 2], [1, 2]])
    assert abs(a - b) <= 1e-12


def test_kappa_commuting():
    X = np.diag([-1.0, 0.5, 2.0])
    H = np.diag([0.3, -0.2, 1.1])
    val = kappa_marginal(H, X, [0.5], [[1, 2]])
    assert val.imag == 0 and val.real == pytest.approx(math.exp(0.2) + math.exp(-1.1), rel=1e-12)


def test_kappa_partition_sum():
    H, X = random_hermitian(3, 5), random_hermitian(3, 6)
    total = sum(kappa_marginal(H, X, [0.3, 0.6], [[a], [b]]) for a in range(3) for b in range(3))
    assert abs(total - math.exp(log_trace_exp(-H))) <= 1e-10


def test_kappa_rejects_bad_times():
    H, X = random_hermitian(2, 1), random_hermitian(2, 2)
    with pytest.raises(ValueError):
        kappa_marginal(H, X, [0.6, 0.3], [[0], [1]])
    with pytest.raises(ValueError):
        kappa_marginal(H, X, [1.2], [[0]])


def test_zero_rates_give_no_jumps():
    g = build_generator(np.diag([1.0, 2.0]))
    p = sample_path(g, child_rng(0))
    assert p.jump_times == () and p.final_state == p.initial_state


def test_sample_path_deterministic():
    g = build_generator(random_hermitian(3, 7))
    assert sample_path(g, child_rng(5)) == sample_path(g, child_rng(5))


def test_mean_jump_count():
    g = build_generator(random_hermitian(3, 8))
    r = _simulate(g, child_rng(1), 100_000)
    mean = g.exit_rates.mean()
    err = r["jumps"].std(ddof=1) / math.sqrt(100_000)
    assert abs(r["jumps"].mean() - mean) <= 3 * err


def test_jump_path_validation():
    with pytest.raises(ValueError):
        JumpPath(0, (0.5, 0.3), (1, 0))
    with pytest.raises(ValueError):
        JumpPath(0, (0.5,), (0,))
    p = JumpPath(0, (0.25, 0.5), (2, 1))
    assert [p.state_at(t) for t in (0.0, 0.25, 0.4, 0.9)] == [0, 2, 2, 1]


def test_path_weight_no_jump():
    H = np.array([[0.5, 0.2], [0.2, -1.0]])
    g = build_generator(H)
    w = path_weight(JumpPath(1, (), ()), g, [-1.0, 1.0], lambda u: u**2)
    assert w.phase == 1
    assert w.value == pytest.approx(math.exp(-g.diagonal_shift[1] + 1.0))


def test_path_weight_phases():
    neg = build_generator(np.array([[0.0, -0.3], [-0.3, 0.0]]))
    assert path_weight(JumpPath(0, (0.5,), (1,)), neg, [0, 1], np.cos).phase == 1
    pos = build_generator(np.array([[0.0, 0.3], [0.3, 0.0]]))
    assert path_weight(JumpPath(0, (0.5,), (1,)), pos, [0, 1], np.cos).phase == -1
    assert path_weight(JumpPath(0, (0.3, 0.6), (1, 0)), pos, [0, 1], np.cos).phase == 1


def test_path_weight_zero_rate_jump():
    g = build_generator(np.diag([0.0, 1.0]))
    with pytest.raises(ValueError):
        path_weight(JumpPath(0, (0.5,), (1,)), g, [0, 1], np.cos)


def test_trivial_estimate_is_exact():
    X = random_hermitian(3, 9)
    est, err = estimate_trace(np.zeros((3, 3)), X, lambda u: 0 * u, 1000, 0)
    assert est == 3 and err == 0


def test_diagonal_h():
    X = np.diag([0.0, 1.0, 2.0])
    H = np.diag([0.5, -0.2, 1.0])
    f = lambda u: 0 * u
    est, err = estimate_trace(H, X, f, 100_000, 3)
    assert abs(est.real - exact_trace(H, X, f)) <= 3 * err + 1e-12


@pytest.mark.parametrize("seed", [0, 1])
def test_random_instance(seed):
    H, X = random_hermitian(3, seed, index=0), random_hermitian(3, seed, index=1)
    f = lambda u: u / 2
    est, err = estimate_trace(H, X, f, 100_000, seed)
    assert abs(est.real - exact_trace(H, X, f)) <= 3 * err


def test_determinism_and_thread_independence():
    H, X = random_hermitian(3, 10), random_hermitian(3, 11)
    f = np.sin
    a = path_estimates(H, X, f, 10_000, 42)
    b = path_estimates(H, X, f, 10_000, 42)
    c = path_estimates(H, X, f, 10_000, 42, workers=3)
    assert np.array_equal(a, b) and np.array_equal(a, c)
    assert not np.array_equal(a, path_estimates(H, X, f, 10_000, 43))


def test_constant_shift_scales_estimate():
    H, X = random_hermitian(2, 12), random_hermitian(2, 13)
    a = path_estimates(H, X, lambda u: u, 5000, 1)
    b = path_estimates(H, X, lambda u: u + 0.7, 5000, 1)
    assert np.allclose(b, a * math.exp(0.7), rtol=1e-12)


def test_marginal_consistency():
    H, X = random_hermitian(3, 14), random_hermitian(3, 15)
    lam, U = np.linalg.eigh(X)
    g = build_generator(U.conj().T @ H @ U)
    times, sets = (0.3, 0.7), ([0, 2], [1])
    target = kappa_marginal(H, X, times, sets)
    r = _simulate(g, child_rng(16), 20_000, record=True)
    vals = np.empty(len(r["paths"]), dtype=complex)
    for i, p in enumerate(r["paths"]):
        hit = p.final_state == p.initial_state and all(p.state_at(t) in A for t, A in zip(times, sets))
        vals[i] = 3 * path_weight(p, g, lam, lambda u: 0 * u).value if hit else 0
    err = vals.real.std(ddof=1) / math.sqrt(len(vals))
    assert abs(vals.mean().real - target.real) <= 4 * err


def test_jump_excess_zero_rates():
    g = build_generator(np.diag([1.0, 2.0, 3.0]))
    assert jump_excess_probability(g, 0.1, 1000, 0) == 0


def test_jump_excess_below_bound():
    g = build_generator(random_hermitian(3, 17))
    p = jump_excess_probability(g, 0.05, 200_000, 2)
    err = math.sqrt(max(p * (1 - p), 1e-12) / 200_000)
    assert p <= jump_excess_bound(g, 0.05) + 3 * err


def test_jump_excess_rejects_window():
    g = build_generator(random_hermitian(2, 1))
    with pytest.raises(ValueError):
        jump_excess_probability(g, 0.0, 10, 0)
