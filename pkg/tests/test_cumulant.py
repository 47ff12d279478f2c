import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qvaradhan.cumulant import (
    CumulantGF,
    bogoliubov_inner,
    cgf,
    cgf_grad,
    cgf_hessian,
    pauli_family,
    tilted_expectation,
)
from qvaradhan.linalg import PAULI_X, PAULI_Z, log_trace_exp, random_hermitian

seeds = st.integers(0, 2**32 - 1)


def ising(beta=1.0, h=0.7):
    return CumulantGF((PAULI_Z,), base=-beta * h * PAULI_X, normalized=True)


def random_cgf(seed, m=3, q=2, normalized=False):
    Xs = tuple(random_hermitian(m, seed, index=j) for j in range(q))
    return CumulantGF(Xs, base=random_hermitian(m, seed, index=q), normalized=normalized)


def test_normalized_zero_at_origin():
    assert cgf(random_cgf(3, normalized=True), [0.0, 0.0]) == pytest.approx(0, abs=1e-14)


def test_ising_closed_form():
    c = ising()
    for t in np.linspace(-5, 5, 21):
        exact = math.log(math.cosh(math.sqrt(t * t + 0.49))) - math.log(math.cosh(0.7))
        assert abs(cgf(c, [t]) - exact) <= 1e-10


def test_pauli_pair_origin():
    assert cgf(pauli_family("z", "x"), [0, 0]) == pytest.approx(math.log(2), abs=1e-15)


def test_requires_base_when_normalized():
    with pytest.raises(ValueError):
        CumulantGF((PAULI_Z,), normalized=True)
    with pytest.raises(ValueError):
        CumulantGF(())
    with pytest.raises(ValueError):
        CumulantGF((PAULI_Z, np.eye(3)))


def test_free_spin_gradient_and_hessian():
    c = pauli_family("z")
    for t in (-3.0, -0.4, 0.0, 1.1, 6.0):
        assert cgf_grad(c, [t])[0] == pytest.approx(math.tanh(t), abs=1e-13)
        assert cgf_hessian(c, [t])[0, 0] == pytest.approx(1 - math.tanh(t) ** 2, abs=1e-12)


@given(seeds, st.lists(st.floats(-2, 2), min_size=2, max_size=2))
def test_gradient_matches_central_difference(seed, t):
    c = random_cgf(seed)
    t = np.array(t)
    h = 1e-5
    fd = np.array([(cgf(c, t + h * e) - cgf(c, t - h * e)) / (2 * h) for e in np.eye(2)])
    g = cgf_grad(c, t)
    assert np.all(np.abs(g - fd) <= 1e-6 * (1 + np.abs(g)))


@given(seeds, st.lists(st.floats(-2, 2), min_size=2, max_size=2))
def test_hessian_matches_second_difference(seed, t):
    c = random_cgf(seed)
    t = np.array(t)
    h = 1e-4
    H = cgf_hessian(c, t)
    fd = np.empty((2, 2))
    for j, ej in enumerate(np.eye(2)):
        fd[j] = (cgf_grad(c, t + h * ej) - cgf_grad(c, t - h * ej)) / (2 * h)
    assert np.all(np.abs(H - fd) <= 1e-5 * (1 + np.abs(H).max()))


@given(seeds, st.floats(-40, 40))
def test_gradient_within_spectral_bounds(seed, scale):
    c = random_cgf(seed)
    g = cgf_grad(c, [scale, -0.5 * scale])
    for gj, iv in zip(g, c.intervals()):
        assert iv.lo - 1e-10 <= gj <= iv.hi + 1e-10


@given(seeds, st.lists(st.floats(-3, 3), min_size=2, max_size=2))
def test_hessian_psd(seed, t):
    assert np.linalg.eigvalsh(cgf_hessian(random_cgf(seed, m=4), t))[0] >= -1e-10


@given(seeds, st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_convex_along_segments(seed, tt):
    c = random_cgf(seed)
    a, b = np.array(tt[:2]), np.array(tt[2:])
    for s in (0.25, 0.5, 0.75):
        assert cgf(c, (1 - s) * a + s * b) <= (1 - s) * cgf(c, a) + s * cgf(c, b) + 1e-10


@given(seeds, st.floats(-3, 3))
def test_normalized_consistency(seed, t):
    X, H = random_hermitian(3, seed), random_hermitian(3, seed, index=1)
    cn = CumulantGF((X,), base=H, normalized=True)
    cu = CumulantGF((X,), base=H)
    assert abs(cgf(cn, [t]) - (cgf(cu, [t]) - log_trace_exp(-H))) <= 1e-12


def test_bogoliubov_examples():
    K = random_hermitian(3, 4)
    assert bogoliubov_inner(np.eye(3), np.eye(3), K) == pytest.approx(1, abs=1e-12)
    assert bogoliubov_inner(PAULI_Z, PAULI_Z, np.zeros((2, 2))) == pytest.approx(1, abs=1e-14)


def test_bogoliubov_matches_quadrature():
    from scipy.integrate import quad
    from scipy.linalg import expm

    K = random_hermitian(3, 8)
    A, B = random_hermitian(3, 8, index=1), random_hermitian(3, 8, index=2)
    Z = np.trace(expm(K)).real

    def integrand(s):
        return np.trace(A.conj().T @ expm(s * K) @ B @ expm((1 - s) * K)).real / Z

    ref, _ = quad(integrand, 0, 1, epsabs=1e-13)
    assert bogoliubov_inner(A, B, K) == pytest.approx(ref, abs=1e-10)


def test_bogoliubov_of_centered_is_second_derivative():
    X, H = random_hermitian(3, 2), random_hermitian(3, 2, index=1)
    c = CumulantGF((X,), base=H)
    t = 0.6
    K = c.exponent([t])
    Xc = X - tilted_expectation(c, [t], X) * np.eye(3)
    h = 1e-4
    fd = (cgf(c, [t + h]) - 2 * cgf(c, [t]) + cgf(c, [t - h])) / h**2
    assert bogoliubov_inner(Xc, Xc, K) == pytest.approx(fd, rel=1e-5)


def test_degenerate_spectrum_kernel():
    # exactly equal exponent eigenvalues take the diagonal-limit branch
    c = CumulantGF((np.diag([1.0, 1.0, -1.0]),))
    assert cgf_hessian(c, [0.0])[0, 0] == pytest.approx(8 / 9, abs=1e-14)
