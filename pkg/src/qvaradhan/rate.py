"""Legendre transform ``I(u) = sup_t [<t, u> - C(t)]`` of a cumulant generating function.

Interior points are solved by damped Newton on ``grad C(t) = u`` using the
Bogoliubov Hessian. Points on a face of the spectral box are evaluated
exactly by compressing onto the joint extremal eigenspace of the saturated
coordinates rather than by chasing ``t -> infinity``.

For ``q >= 2`` the effective domain of ``I`` is the joint numerical range of
the observables, which can be strictly smaller than the box (the Pauli pair
has the unit disc). Inside the box but outside that range the dual objective
grows without bound; the solver certifies ``I = +inf`` once the objective
exceeds the a-priori bound ``lambda_max(H) + offset`` that holds on the range.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import config
from .config import SolverError
from .cumulant import CumulantGF, cgf_values, moments
from .linalg import SpectralInterval, log_trace_exp, spectral_decompose

INTERIOR = "interior"
BOUNDARY = "boundary"
INFINITE = "infinite"


@dataclass(frozen=True, eq=False)
class RateEvaluation:
    value: float
    maximizer: np.ndarray
    status: str
    iterations: int = 0

    @property
    def finite(self) -> bool:
        return self.status != INFINITE


def rate_domain(c: CumulantGF) -> list[SpectralInterval]:
    """The box of spectral intervals ``[lambda_-(X_j), lambda_+(X_j)]``."""
    return c.intervals()


def range_bound(c: CumulantGF) -> float:
    """Upper bound of ``I`` on its effective domain.

    From the Gibbs variational inequality, ``I_unnormalized(u) <= S(phi||rho) - ln Z``
    for any state with ``phi(X) = u``, and ``S(phi||rho) <= lambda_max(H) + ln Z``.
    """
    top = 0.0 if c.base is None else float(np.linalg.eigvalsh(c.base)[-1])
    return top + c.offset


@dataclass
class _Solve:
    t: np.ndarray
    value: np.ndarray
    residual: np.ndarray
    converged: np.ndarray
    infinite: np.ndarray
    iterations: np.ndarray


def solve_legendre(c: CumulantGF, U, t0=None, tol: float | None = None,
                   max_iter: int | None = None) -> _Solve:
    """Batched damped Newton for ``grad C(t) = u`` at every row of ``U``.

    Steps are halved until the dual objective ``<t,u> - C(t)`` does not
    decrease; if Newton cannot make progress the step falls back to the
    gradient direction. Rows are independent.
    """
    tol = config.TOL.newton if tol is None else tol
    max_iter = config.LIMITS.newton_iterations if max_iter is None else max_iter
    U = np.asarray(U, dtype=float).reshape(-1, c.q)
    P = len(U)
    T = np.zeros_like(U) if t0 is None else np.array(np.broadcast_to(t0, U.shape), dtype=float)
    thresh = tol * (1.0 + np.max(np.abs(U), axis=1))
    bound = range_bound(c)
    cert = bound + 1e-6 * (1.0 + abs(bound))

    value = np.full(P, -np.inf)
    residual = np.full(P, np.inf)
    converged = np.zeros(P, bool)
    infinite = np.zeros(P, bool)
    iters = np.zeros(P, int)
    active = np.arange(P)

    for it in range(max_iter + 1):
        if active.size == 0:
            break
        Ua, Ta = U[active], T[active]
        C, G, Hs = moments(c, Ta, order=2)
        g = np.einsum("pj,pj->p", Ta, Ua) - C
        r = Ua - G
        value[active] = g
        res = np.max(np.abs(r), axis=1)
        residual[active] = res
        iters[active] = it
        done = res <= thresh[active]
        inf_now = g > cert
        converged[active[done]] = True
        infinite[active[inf_now & ~done]] = True
        keep = ~(done | inf_now)
        if it == max_iter or not keep.any():
            break
        active, Ua, Ta, g, r, Hs = active[keep], Ua[keep], Ta[keep], g[keep], r[keep], Hs[keep]

        step = np.einsum("pjk,pk->pj", np.linalg.pinv(Hs, rcond=1e-13, hermitian=True), r)
        newT = _backtrack(c, Ua, Ta, g, step)
        stuck = np.all(newT == Ta, axis=1)
        if stuck.any():
            # gradient ascent with the same acceptance rule
            idx = np.flatnonzero(stuck)
            newT[idx] = _backtrack(c, Ua[idx], Ta[idx], g[idx], r[idx])
        T[active] = newT
        if np.all(newT == Ta):
            # no row can move: leave them unconverged
            break

    return _Solve(T, value, residual, converged, infinite, iters)


def _backtrack(c, U, T, g, step, halvings: int = 60):
    """Largest ``2^-k * step`` that does not decrease the dual objective."""
    out = T.copy()
    pending = np.arange(len(T))
    s = 1.0
    for _ in range(halvings):
        if pending.size == 0:
            break
        cand = T[pending] + s * step[pending]
        gc = np.einsum("pj,pj->p", cand, U[pending]) - cgf_values(c, cand)
        ok = np.isfinite(gc) & (gc >= g[pending] - 1e-14 * (1.0 + np.abs(g[pending])))
        out[pending[ok]] = cand[ok]
        pending = pending[~ok]
        s *= 0.5
    return out


def _classify(c: CumulantGF, U: np.ndarray):
    """Signs of box violations and of saturated faces for each row of ``U``.

    Both arrays have shape ``(P, q)`` with entries in ``{-1, 0, 1}``.
    """
    tolb = config.TOL.boundary
    box = np.array(rate_domain(c), dtype=float)
    lo, hi = box[:, 0], box[:, 1]
    scale = tolb * (1.0 + np.maximum(np.abs(lo), np.abs(hi)))
    outside = np.where(U > hi + scale, 1, np.where(U < lo - scale, -1, 0))
    at_hi = np.abs(U - hi) <= scale
    at_lo = np.abs(U - lo) <= scale
    face = np.where(outside != 0, 0, np.where(at_hi, 1, np.where(at_lo, -1, 0)))
    return outside, face


def _face_map(signs) -> dict[int, int]:
    return {int(j): int(s) for j, s in enumerate(signs) if s}


def rate_point(c: CumulantGF, u, t0=None) -> RateEvaluation:
    """Evaluate ``I(u)`` with status ``interior``, ``boundary`` or ``infinite``.

    Raises SolverError (carrying the best iterate) if Newton does not converge
    within the iteration cap; this happens on the relative boundary of the
    joint numerical range inside the box, where the maximizer is at infinity.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (c.q,):
        raise ValueError(f"expected a point of length {c.q}, got shape {u.shape}")
    outside, face = (a[0] for a in _classify(c, u[None, :]))
    if outside.any():
        return RateEvaluation(math.inf, outside.astype(float), INFINITE)
    if face.any():
        value = rate_boundary_value(c, _face_map(face), u)
        return RateEvaluation(value, face.astype(float), INFINITE if math.isinf(value) else BOUNDARY)

    sol = solve_legendre(c, u[None, :], t0=t0)
    if sol.converged[0]:
        return RateEvaluation(float(sol.value[0]), sol.t[0], INTERIOR, int(sol.iterations[0]))
    if sol.infinite[0]:
        return RateEvaluation(math.inf, sol.t[0] / np.linalg.norm(sol.t[0]), INFINITE,
                              int(sol.iterations[0]))
    raise SolverError(
        f"Legendre solver did not converge at u={u.tolist()} "
        f"(residual {sol.residual[0]:.3e} after {sol.iterations[0]} iterations)",
        best=sol.t[0].copy(),
        residual=float(sol.residual[0]),
    )


def _joint_eigenspace(c: CumulantGF, face: Mapping[int, int]) -> np.ndarray:
    """Orthonormal basis of the intersection of the extremal eigenspaces on ``face``."""
    W = np.eye(c.dim, dtype=complex)
    for j, sgn in sorted(face.items()):
        sd = spectral_decompose(c.observables[j])
        edge = sd.eigenvalues[-1] if sgn > 0 else sd.eigenvalues[0]
        E = sd.eigenspace(edge)
        if W.shape[1] == 0:
            break
        # null space of (1 - P_E) W gives span(W) & span(E)
        R = W - E @ (E.conj().T @ W)
        _, s, vh = np.linalg.svd(R, full_matrices=True)
        s_full = np.zeros(W.shape[1])
        s_full[: len(s)] = s
        null = vh.conj().T[:, s_full <= 1e-8]
        W = W @ null
        if W.shape[1]:
            W, _ = np.linalg.qr(W)
    return W


def rate_boundary_value(c: CumulantGF, face: Mapping[int, int], u) -> float:
    """``I(u)`` for ``u`` on the face where coordinates ``j`` in ``face`` sit at
    ``lambda_+`` (``+1``) or ``lambda_-`` (``-1``).

    Returns ``inf`` when the joint eigenspace is empty.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    W = _joint_eigenspace(c, face)
    if W.shape[1] == 0:
        return math.inf
    H = np.zeros((c.dim, c.dim), dtype=complex) if c.base is None else c.base
    Hr = W.conj().T @ H @ W
    Hr = (Hr + Hr.conj().T) / 2
    rest = [j for j in range(c.q) if j not in face]
    if not rest:
        return float(-log_trace_exp(-Hr) + c.offset)
    obs = []
    for j in rest:
        Xr = W.conj().T @ c.observables[j] @ W
        obs.append((Xr + Xr.conj().T) / 2)
    reduced = CumulantGF(tuple(obs), base=Hr)
    inner = rate_point(reduced, u[rest])
    return float(inner.value + c.offset)


def rate_values(c: CumulantGF, U, t0=None):
    """``I`` on a stack of points.

    Returns ``(values, T, status)``; ``status`` holds one of the three status
    strings or ``"unresolved"`` where the solver hit its cap (value ``nan``).
    """
    U = np.asarray(U, dtype=float).reshape(-1, c.q)
    P = len(U)
    values = np.full(P, np.nan)
    T = np.zeros((P, c.q))
    status = np.full(P, "unresolved", dtype=object)
    outside, face = _classify(c, U)
    out_rows = outside.any(axis=1)
    face_rows = face.any(axis=1) & ~out_rows
    values[out_rows] = math.inf
    status[out_rows] = INFINITE
    for i in np.flatnonzero(face_rows):
        v = rate_boundary_value(c, _face_map(face[i]), U[i])
        values[i] = v
        status[i] = INFINITE if math.isinf(v) else BOUNDARY
    idx = np.flatnonzero(~(out_rows | face_rows))
    if idx.size:
        sol = solve_legendre(c, U[idx], t0=None if t0 is None else np.asarray(t0)[idx])
        ok, inf = sol.converged, sol.infinite
        values[idx[ok]] = sol.value[ok]
        status[idx[ok]] = INTERIOR
        values[idx[inf]] = math.inf
        status[idx[inf]] = INFINITE
        T[idx] = sol.t
    return values, T, status
