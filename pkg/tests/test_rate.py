import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qvaradhan import config
from qvaradhan.config import SolverError
from qvaradhan.cumulant import CumulantGF, cgf, cgf_grad, pauli_family
from qvaradhan.linalg import PAULI_X, PAULI_Z, log_trace_exp, random_hermitian
from qvaradhan.models import i0
from qvaradhan.rate import (
    BOUNDARY,
    INFINITE,
    INTERIOR,
    rate_boundary_value,
    rate_domain,
    rate_point,
    rate_values,
)

seeds = st.integers(0, 2**32 - 1)


def free_spin():
    return CumulantGF((PAULI_Z,), base=np.zeros((2, 2)), normalized=True)


def test_domains():
    assert [tuple(iv) for iv in rate_domain(pauli_family("z"))] == [(-1.0, 1.0)]
    assert [tuple(iv) for iv in rate_domain(CumulantGF((np.diag([2.0, 2.0]),)))] == [(2.0, 2.0)]
    assert len(rate_domain(pauli_family("z", "x"))) == 2


def test_stationary_point():
    c = CumulantGF((random_hermitian(3, 1),), base=random_hermitian(3, 2), normalized=True)
    u0 = cgf_grad(c, [0.0])
    ev = rate_point(c, u0)
    assert ev.status == INTERIOR
    assert abs(ev.value) <= 1e-10
    assert abs(ev.maximizer[0]) <= 1e-8
    cu = pauli_family("z", "x")
    assert rate_point(cu, [0, 0]).value == pytest.approx(-math.log(2), abs=1e-12)


def test_free_spin_is_ising_rate():
    c = free_spin()
    for u in (0, 0.3, -0.3, 0.9, -0.9):
        ev = rate_point(c, [u])
        assert ev.value == pytest.approx(i0(u), abs=1e-8)
        assert ev.maximizer[0] == pytest.approx(math.atanh(u), abs=1e-7)


def test_pauli_pair_rate():
    c = pauli_family("z", "x")
    for x in np.arange(-0.9, 0.91, 0.1):
        for z in np.arange(-0.9, 0.91, 0.1):
            r = math.hypot(x, z)
            if r * r <= 0.81 + 1e-12:
                assert abs(rate_point(c, [x, z]).value - (i0(r) - math.log(2))) <= 1e-8


def test_outside_box_infinite():
    ev = rate_point(free_spin(), [1.5])
    assert ev.status == INFINITE and math.isinf(ev.value)


def test_outside_joint_range_infinite():
    # inside the box [-1,1]^2 but outside the unit disc
    ev = rate_point(pauli_family("z", "x"), [0.9, 0.9])
    assert ev.status == INFINITE and math.isinf(ev.value)


def test_boundary_value_transverse():
    h = 0.8
    c = CumulantGF((PAULI_Z,), base=-h * PAULI_X, normalized=True)
    ev = rate_point(c, [1.0])
    assert ev.status == BOUNDARY
    assert ev.value == pytest.approx(math.log(2 * math.cosh(h)), abs=1e-12)
    assert rate_boundary_value(c, {0: +1}, [1.0]) == pytest.approx(math.log(2 * math.cosh(h)), abs=1e-12)


def test_boundary_degenerate_top():
    X = np.diag([2.0, 2.0, 0.0, -1.0])
    c = CumulantGF((X,), base=np.zeros((4, 4)), normalized=True)
    assert rate_point(c, [2.0]).value == pytest.approx(-math.log(2) + math.log(4), abs=1e-12)


def test_boundary_redundant_pair():
    c2 = CumulantGF((PAULI_Z, PAULI_Z), base=-0.3 * PAULI_X, normalized=True)
    c1 = CumulantGF((PAULI_Z,), base=-0.3 * PAULI_X, normalized=True)
    v2 = rate_point(c2, [1.0, 1.0])
    assert v2.status == BOUNDARY
    assert v2.value == pytest.approx(rate_point(c1, [1.0]).value, abs=1e-12)
    # incompatible face: sigma_z cannot be +1 and -1 at once
    assert math.isinf(rate_point(c2, [1.0, -1.0]).value)


def test_boundary_with_interior_coordinate():
    # on the face z = 1 of the pair (sigma_z, diag(0, 1)) the second coordinate is pinned to 0
    c = CumulantGF((PAULI_Z, np.diag([0.0, 1.0])))
    assert math.isinf(rate_point(c, [1.0, 0.5]).value)
    assert rate_point(c, [1.0, 0.0]).value == pytest.approx(0.0, abs=1e-12)


@given(seeds, st.floats(-3, 3), st.floats(-0.95, 0.95))
def test_fenchel_inequality(seed, t, s):
    X, H = random_hermitian(3, seed), random_hermitian(3, seed, index=1)
    c = CumulantGF((X,), base=H, normalized=True)
    lo, hi = c.intervals()[0]
    u = lo + (hi - lo) * (s + 1) / 2
    assert t * u <= cgf(c, [t]) + rate_point(c, [u]).value + 1e-9


@given(seeds, st.floats(-0.9, 0.9))
def test_biconjugation_bound(seed, s):
    X, H = random_hermitian(2, seed), random_hermitian(2, seed, index=1)
    c = CumulantGF((X,), base=H, normalized=True)
    lo, hi = c.intervals()[0]
    u = lo + (hi - lo) * (s + 1) / 2
    ts = np.linspace(-20, 20, 401)
    best = max(t * u - cgf(c, [t]) for t in ts)
    assert best <= rate_point(c, [u]).value + 1e-8


def test_interior_status_has_matching_gradient():
    c = CumulantGF((random_hermitian(3, 5), random_hermitian(3, 6)), base=random_hermitian(3, 7))
    u = cgf_grad(c, [0.7, -1.2])
    ev = rate_point(c, u)
    assert ev.status == INTERIOR
    assert np.max(np.abs(cgf_grad(c, ev.maximizer) - u)) <= 1e-9


def test_edge_steepness():
    c = CumulantGF((random_hermitian(3, 9),), base=random_hermitian(3, 10), normalized=True)
    hi = c.intervals()[0].hi
    t = [rate_point(c, [hi - d]).maximizer[0] for d in (1e-1, 1e-2, 1e-4)]
    assert t[0] < t[1] < t[2]


def test_solver_failure_carries_best_iterate():
    config.configure(newton_iterations=2)
    with pytest.raises(SolverError) as info:
        rate_point(CumulantGF((PAULI_Z,), base=-PAULI_X), [0.999999])
    assert info.value.best is not None and info.value.residual > 0


def test_rate_values_batch_matches_points():
    c = pauli_family("z", "x")
    U = np.array([[0.1, 0.2], [1.0, 0.0], [0.9, 0.9], [2.0, 0.0], [-0.5, 0.3]])
    vals, _, status = rate_values(c, U)
    for u, v, s in zip(U, vals, status):
        ev = rate_point(c, u)
        assert s == ev.status
        assert v == pytest.approx(ev.value, abs=1e-10) or (math.isinf(v) and math.isinf(ev.value))


def test_rate_is_nonnegative_normalized():
    c = CumulantGF((random_hermitian(4, 3),), base=random_hermitian(4, 4), normalized=True)
    lo, hi = c.intervals()[0]
    vals, _, _ = rate_values(c, np.linspace(lo, hi, 101)[:, None])
    assert np.all(vals >= -1e-12)


def test_boundary_matches_gibbs_compression():
    X, H = random_hermitian(3, 12), random_hermitian(3, 13)
    c = CumulantGF((X,), base=H, normalized=True)
    w, V = np.linalg.eigh(X)
    v = V[:, -1]
    expected = float((v.conj() @ H @ v).real) + log_trace_exp(-H)
    assert rate_point(c, [w[-1]]).value == pytest.approx(expected, abs=1e-10)
