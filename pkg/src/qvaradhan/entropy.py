"""Density matrices, relative entropy and the Gibbs variational principle.

The inequalities here are the state-side counterparts of the rate function:
``S(phi||rho) >= I(phi(X))`` with equality on perturbed Gibbs states, and
``ln Tr e^{tX-H} - ln Tr e^{-H} >= t phi(X) - S(phi||rho)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from . import config
from .cumulant import CumulantGF, cgf
from .linalg import as_hermitian, child_rng
from .rate import INFINITE, _classify, _face_map, _joint_eigenspace, rate_point
from .varsolve import variational_sup


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        D = as_hermitian(self.matrix)
        tr = float(np.trace(D).real)
        if abs(tr - 1.0) > 1e-12:
            raise ValueError(f"trace is {tr!r}, expected 1")
        lo = float(np.linalg.eigvalsh(D)[0])
        if lo < -1e-12:
            raise ValueError(f"not positive semidefinite: smallest eigenvalue {lo:.3e}")
        object.__setattr__(self, "matrix", D)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def expectation(self, A) -> float:
        return float(np.real(np.sum(self.matrix.T * np.asarray(A))))

    def entropy(self) -> float:
        """Von Neumann entropy ``-Tr D ln D``."""
        p = np.clip(np.linalg.eigvalsh(self.matrix), 0.0, None)
        p = p[p > 0]
        return float(-np.sum(p * np.log(p)))


def _exp_state(K) -> DensityMatrix:
    w, V = np.linalg.eigh(K)
    p = np.exp(w - logsumexp(w))
    D = (V * p) @ V.conj().T
    return DensityMatrix(D / np.trace(D).real)


def gibbs_state(H) -> DensityMatrix:
    """``e^{-H} / Tr e^{-H}``."""
    return _exp_state(-as_hermitian(H))


def perturbed_gibbs(H, X, t: float) -> DensityMatrix:
    """``e^{tX-H} / Tr e^{tX-H}``."""
    H = as_hermitian(H)
    X = as_hermitian(X)
    if X.shape != H.shape:
        raise ValueError("X and H must share one shape")
    return _exp_state(t * X - H)


def tracial_state(m: int) -> DensityMatrix:
    return DensityMatrix(np.eye(m) / m)


def relative_entropy(phi: DensityMatrix, rho: DensityMatrix) -> float:
    """``Tr D_phi (ln D_phi - ln D_rho)``, ``+inf`` off the support of ``rho``.

    The kernel of ``rho`` is its eigenvalues below ``TOL.support`` times the
    largest one; ``phi`` overlapping it by more than that threshold is
    outside the support.
    """
    if phi.dim != rho.dim:
        raise ValueError("states must share one dimension")
    thr = config.TOL.support
    r, V = np.linalg.eigh(rho.matrix)
    cut = thr * r[-1]
    weights = np.real(np.einsum("ai,ab,bi->i", V.conj(), phi.matrix, V))
    kernel = r <= cut
    if weights[kernel].sum() > thr:
        return math.inf
    cross = float(np.sum(weights[~kernel] * np.log(r[~kernel])))
    return -phi.entropy() - cross


def variational_gap(phi: DensityMatrix, X, H, t: float) -> float:
    """``ln(Tr e^{tX-H}/Tr e^{-H}) - [t phi(X) - S(phi||rho)]`` with ``rho`` Gibbs."""
    c = CumulantGF((X,), base=H, normalized=True)
    S = relative_entropy(phi, gibbs_state(H))
    if math.isinf(S):
        return math.inf
    return cgf(c, [t]) - (t * phi.expectation(X) - S)


def rate_dominance_gap(phi: DensityMatrix, X, H) -> float:
    """``S(phi||rho) - I(phi(X))`` with the normalized rate."""
    c = CumulantGF((X,), base=H, normalized=True)
    S = relative_entropy(phi, gibbs_state(H))
    I = rate_point(c, [phi.expectation(X)]).value
    if math.isinf(S):
        return math.inf
    return S - I


def tracial_dominance_gap(phi: DensityMatrix, Xs) -> float:
    """``S(phi||tau) - I(phi(X_1), ..., phi(X_q)) - ln m`` with the unnormalized rate."""
    c = CumulantGF(tuple(Xs))
    u = [phi.expectation(X) for X in c.observables]
    I = rate_point(c, u).value
    return relative_entropy(phi, tracial_state(phi.dim)) - I - math.log(phi.dim)


def optimizer_state(c: CumulantGF, u) -> DensityMatrix:
    """The state attaining ``S(phi||rho) = I(u)`` with ``phi(X) = u``.

    Interior points give ``omega_{t(u)}``; points on a face of the box give
    the Gibbs state compressed to the joint extremal eigenspace.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    H = np.zeros((c.dim, c.dim)) if c.base is None else c.base
    outside, face = (a[0] for a in _classify(c, u[None, :]))
    if outside.any():
        raise ValueError("u lies outside the spectral box")
    if face.any():
        if c.q != 1:
            raise NotImplementedError("face optimizers are only built for one observable")
        W = _joint_eigenspace(c, _face_map(face))
        Hr = W.conj().T @ H @ W
        w, V = np.linalg.eigh((Hr + Hr.conj().T) / 2)
        p = np.exp(-w - logsumexp(-w))
        B = W @ V
        return DensityMatrix((B * p) @ B.conj().T)
    ev = rate_point(c, u)
    if ev.status == INFINITE:
        raise ValueError("u is outside the effective domain")
    K = np.tensordot(ev.maximizer, np.stack(c.observables), axes=1) - H
    return _exp_state(K)


def random_density(m: int, seed: int, index: int = 0) -> DensityMatrix:
    """``G G^dagger / Tr(G G^dagger)`` with complex Gaussian ``G``."""
    if m < 1:
        raise ValueError("m must be positive")
    rng = child_rng(seed, index)
    G = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    D = G @ G.conj().T
    D = (D + D.conj().T) / 2
    return DensityMatrix(D / np.trace(D).real)


def sup_equivalence_check(f: Callable, X, H, samples: int = 200, seed: int = 0,
                          grid_points: int = 201):
    """Both sides of ``sup_phi [f(phi(X)) - S(phi||rho)] = sup_u [f(u) - I(u)]``.

    The state side maximizes over ``samples`` random states, the optimizer
    states on a ``grid_points`` grid of the spectral interval, and the
    optimizer state at the scalar side's maximizer.
    """
    c = CumulantGF((X,), base=H, normalized=True)
    scalar = variational_sup(c, f)
    rho = gibbs_state(H)
    lo, hi = c.intervals()[0]

    def score(phi):
        S = relative_entropy(phi, rho)
        return -math.inf if math.isinf(S) else float(f(phi.expectation(X))) - S

    best = -math.inf
    for i in range(samples):
        best = max(best, score(random_density(c.dim, seed, i)))
    for u in np.append(np.linspace(lo, hi, grid_points), scalar.optimizer[0]):
        try:
            best = max(best, score(optimizer_state(c, [u])))
        except ValueError:
            continue
    return best, scalar.value


__all__ = [
    "DensityMatrix",
    "gibbs_state",
    "optimizer_state",
    "perturbed_gibbs",
    "random_density",
    "rate_dominance_gap",
    "relative_entropy",
    "sup_equivalence_check",
    "tracial_dominance_gap",
    "tracial_state",
    "variational_gap",
]
