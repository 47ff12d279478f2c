"""Worked examples: mean-field transverse-field Ising and anisotropic Heisenberg.

Free energies use the exact Legendre convention, so the Pauli rate is
``I_0(r) - ln 2`` rather than ``I_0(r)``. The Ising model has three
equivalent variational formulas (one variable with the tilted rate, two
variables on the unit disc, and polar coordinates); all are evaluated
independently so they can cross-check each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .cumulant import CumulantGF
from .finite_n import collective_log_trace, log_trace_finite_n
from .linalg import PAULI_X, PAULI_Y, PAULI_Z
from .varsolve import grid_maximize, maximize

LN2 = math.log(2.0)
ROUTES = ("one_var", "two_var", "polar")


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    beta: float
    h: float = 0.0
    J: float = 0.0
    Delta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("ising", "heisenberg"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        _check_beta(self.beta)


@dataclass(frozen=True, eq=False)
class ModelResult:
    value: float
    optimizer: np.ndarray


def _check_beta(beta):
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta!r}")


def i0(u):
    """``((1+u) ln(1+u) + (1-u) ln(1-u)) / 2`` with ``0 ln 0 = 0``."""
    arr = np.asarray(u, dtype=float)
    if np.any(np.abs(arr) > 1):
        raise ValueError("i0 is defined on [-1, 1]")
    out = 0.5 * (xlogy(1 + arr, 1 + arr) + xlogy(1 - arr, 1 - arr))
    return float(out) if out.ndim == 0 else out


def _i0_or_inf(r):
    r = np.asarray(r, dtype=float)
    out = np.full(r.shape, np.inf)
    ok = r <= 1.0
    out[ok] = i0(r[ok])
    return out


def ising_cgf(beta: float, h: float) -> CumulantGF:
    """``t -> ln Tr e^{t sigma_z + beta h sigma_x}``; its rate is the tilted ``I~``."""
    return CumulantGF((PAULI_Z,), base=-beta * h * PAULI_X)


def ising_solve(beta: float, h: float, route: str = "polar", grid_points: int | None = None) -> ModelResult:
    """Free energy ``f(beta, h)`` and the optimizer of the selected route.

    Optimizers are ``(z,)`` for ``one_var``, ``(x, z)`` for ``two_var`` and
    ``(u, theta)`` for ``polar``.
    """
    _check_beta(beta)
    if route == "one_var":
        # f = -(1/beta) sup_z [beta z^2 - I~(z)]
        res = maximize(ising_cgf(beta, h), lambda z: beta * np.asarray(z) ** 2, grid_points or 2001)
        return ModelResult(-res.value / beta, res.optimizer)
    if route == "two_var":
        def G(U):
            x, z = U[:, 0], U[:, 1]
            return -(-z**2 - h * x + (_i0_or_inf(np.hypot(x, z)) - LN2) / beta)

        u, v, _, _ = grid_maximize(G, [(-1.0, 1.0), (-1.0, 1.0)], grid_points or 201)
        return ModelResult(-v, u)
    if route == "polar":
        def G(U):
            r, th = U[:, 0], U[:, 1]
            return -(-(r * np.sin(th)) ** 2 - h * r * np.cos(th) + (i0(r) - LN2) / beta)

        u, v, _, _ = grid_maximize(G, [(0.0, 1.0), (0.0, 2 * math.pi)], grid_points or 201)
        return ModelResult(-v, u)
    raise ValueError(f"unknown route {route!r}; expected one of {ROUTES}")


def ising_free_energy(beta: float, h: float, route: str = "polar") -> float:
    return ising_solve(beta, h, route).value


def curie_weiss_free_energy(beta: float) -> float:
    """``inf_z [-z^2 + (I_0(z) - ln 2)/beta]``, the ``h = 0`` value."""
    return _radial(beta, 1.0)


def _radial(beta: float, J: float) -> float:
    _check_beta(beta)

    def G(U):
        r = U[:, 0]
        return -(-J * r**2 + (i0(r) - LN2) / beta)

    _, v, _, _ = grid_maximize(G, [(0.0, 1.0)], 2001)
    return -v


def heisenberg_radial_free_energy(beta: float, J: float) -> float:
    """Isotropic reduction ``inf_u [-J u^2 + (I_0(u) - ln 2)/beta]``."""
    return _radial(beta, J)


def heisenberg_solve(beta: float, J: float, Delta: float, grid_points: int = 201) -> ModelResult:
    """``inf`` over the unit ball of ``-J(x^2 + y^2 + Delta z^2) + (I_0(r) - ln 2)/beta``.

    Rotations in the ``(x, y)`` plane leave the objective invariant, so the
    search runs over ``rho = sqrt(x^2 + y^2) >= 0`` and ``z``; the optimizer
    is reported as ``(rho, z)``.
    """
    _check_beta(beta)

    def G(U):
        rho, z = U[:, 0], U[:, 1]
        return -(-J * (rho**2 + Delta * z**2) + (_i0_or_inf(np.hypot(rho, z)) - LN2) / beta)

    u, v, _, _ = grid_maximize(G, [(0.0, 1.0), (-1.0, 1.0)], grid_points)
    return ModelResult(-v, u)


def heisenberg_free_energy(beta: float, J: float, Delta: float) -> float:
    return heisenberg_solve(beta, J, Delta).value


def free_energy(spec: ModelSpec) -> float:
    if spec.kind == "ising":
        return ising_free_energy(spec.beta, spec.h)
    return heisenberg_free_energy(spec.beta, spec.J, spec.Delta)


# -- finite-n oracles ----------------------------------------------------------

def _finite(Xs, fs, H, n, method):
    if method == "collective":
        return collective_log_trace(Xs, fs, H, n)
    if method == "dense":
        return log_trace_finite_n(Xs, fs, H, n)
    raise ValueError(f"unknown method {method!r}")


def ising_finite_n(beta: float, h: float, n: int, method: str = "collective") -> float:
    """``-(1/(beta n)) ln Tr e^{-beta H_n}`` for ``n`` sites."""
    _check_beta(beta)
    lt = _finite([PAULI_Z], [lambda u: beta * u**2], -beta * h * PAULI_X, n, method)
    return -lt / beta


def heisenberg_finite_n(beta: float, J: float, Delta: float, n: int, method: str = "collective") -> float:
    _check_beta(beta)
    fs = [lambda u: beta * J * u**2, lambda u: beta * J * u**2, lambda u: beta * J * Delta * u**2]
    lt = _finite([PAULI_X, PAULI_Y, PAULI_Z], fs, None, n, method)
    return -lt / beta
