"""Variational suprema ``sup_u [F(u) - I(u)]`` over the spectral box.

Only continuity of ``F`` is assumed, so the search is derivative-free: a
dense grid locates the best cell (ties go to the lexicographically smallest
point) and a local refinement polishes it. One variable uses golden-section
search on the neighbouring cells; several variables use bounded Nelder-Mead
started from the grid optimum, followed by a compass search with halving
steps.

Grid points where the Legendre solver cannot certify a value (the relative
boundary of the joint numerical range inside the box) are skipped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from . import config
from .config import ResourceError, SolverError
from .cumulant import CumulantGF
from .rate import rate_values

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class VariationalResult:
    optimizer: np.ndarray
    value: float
    grid_points: int
    refinement_radius: float
    rate: float = math.nan


def _vectorized(F: Callable, q: int) -> Callable[[np.ndarray], np.ndarray]:
    """Wrap ``F(u)`` (u of length q) so it maps a ``(P, q)`` stack to ``(P,)``."""

    def call(U: np.ndarray) -> np.ndarray:
        try:
            out = np.asarray(F(U.T if q > 1 else U[:, 0]), dtype=float)
            if out.shape == (len(U),):
                return out
        except Exception:
            pass
        return np.array([float(F(u if q > 1 else u[0])) for u in U])

    return call


def _grid(box, points: int) -> tuple[np.ndarray, list[np.ndarray]]:
    axes = []
    for lo, hi in box:
        axes.append(np.array([lo]) if hi - lo <= 0 else np.linspace(lo, hi, points))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1), axes


def grid_maximize(G: Callable[[np.ndarray], np.ndarray], box, grid_points: int,
                  refine: bool = True) -> tuple[np.ndarray, float, int, float]:
    """Maximize a batched objective ``G: (P, q) -> (P,)`` over a box.

    ``nan`` values count as ``-inf``. Returns ``(u, value, grid size, radius)``
    where ``radius`` is the final refinement step (the grid spacing when
    ``refine`` is off).
    """

    def safe(U):
        v = np.asarray(G(U), dtype=float)
        return np.where(np.isnan(v), -np.inf, v)

    U, axes = _grid(box, grid_points)
    obj = safe(U)
    best = int(np.argmax(obj))
    if not np.isfinite(obj[best]):
        raise SolverError("no grid point has a finite objective", best=U[best])
    u0, v0 = U[best].copy(), float(obj[best])
    spacing = np.array([(a[1] - a[0]) if len(a) > 1 else 0.0 for a in axes])
    radius = float(np.max(spacing)) if len(spacing) else 0.0
    if refine and radius > 0:
        if len(box) == 1:
            x, v0 = _golden(lambda x: float(safe(np.array([[x]]))[0]), box[0], u0[0], spacing[0], v0)
            u0 = np.array([x])
        else:
            u0, v0, radius = _polish(safe, box, u0, spacing, v0)
    return u0, v0, len(U), radius


def maximize(c: CumulantGF, F: Callable, grid_points: int, constant: float = 0.0,
             refine: bool = True) -> VariationalResult:
    """``sup`` over the box of ``F(u) - I(u)`` plus ``constant``.

    ``F`` receives a vector of length ``q`` (a scalar when ``q == 1``) and
    may also accept a stack of points transposed to shape ``(q, P)``.
    """
    box = [(iv.lo, iv.hi) for iv in c.intervals()]
    Fv = _vectorized(F, c.q)
    warm = [None]

    def G(U):
        t0 = None if warm[0] is None else np.broadcast_to(warm[0], U.shape)
        I, T, _ = rate_values(c, U, t0=t0)
        val = Fv(U) - I
        ok = np.isfinite(val)
        if ok.any():
            warm[0] = T[np.flatnonzero(ok)[np.argmax(val[ok])]]
        return val

    u0, v0, size, radius = grid_maximize(G, box, grid_points, refine)
    rate_at = float(Fv(u0[None, :])[0] - v0)
    return VariationalResult(u0, v0 + constant, size, radius, rate_at)


def _golden(g, interval, u0, h, v0, xtol: float = 1e-12):
    lo, hi = interval
    a, b = max(lo, u0 - h), min(hi, u0 + h)
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    g1, g2 = g(x1), g(x2)
    while b - a > xtol * (1.0 + abs(a) + abs(b)):
        if g1 >= g2:
            b, x2, g2 = x2, x1, g1
            x1 = b - GOLDEN * (b - a)
            g1 = g(x1)
        else:
            a, x1, g1 = x1, x2, g2
            x2 = a + GOLDEN * (b - a)
            g2 = g(x2)
    cands = [(v0, u0), (g1, x1), (g2, x2)]
    for end in (a, b):
        cands.append((g(end), end))
    best_v, best_u = max(cands, key=lambda p: (p[0], -p[1]))
    return best_u, best_v


def _polish(G, box, u0, spacing, v0, xtol: float = 1e-11):
    """Bounded Nelder-Mead from the grid optimum, simplex sized to one cell."""
    live = np.flatnonzero(spacing > 0)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])

    def neg(x):
        u = u0.copy()
        u[live] = x
        v = float(G(np.clip(u, lo, hi)[None, :])[0])
        return -v if np.isfinite(v) else np.inf

    # start a quarter cell inside the box: a simplex on a bound collapses onto it
    h = spacing[live]
    x0 = np.clip(u0[live], lo[live] + h / 4, hi[live] - h / 4)
    simplex = [x0]
    for k in range(len(live)):
        e = x0.copy()
        j = live[k]
        e[k] = e[k] - h[k] / 2 if e[k] + h[k] / 2 > hi[j] else e[k] + h[k] / 2
        simplex.append(e)
    res = optimize.minimize(
        neg, x0, method="Nelder-Mead", bounds=list(zip(lo[live], hi[live])),
        options=dict(initial_simplex=np.array(simplex), xatol=xtol, fatol=1e-15, maxiter=20000),
    )
    u, v = u0, v0
    if np.isfinite(res.fun) and -res.fun > v0:
        u = u0.copy()
        u[live] = res.x
        u, v = np.clip(u, lo, hi), float(-res.fun)
    # a simplex squeezed against a bound stalls there; compass steps can
    # still probe inward
    return _compass(G, lo, hi, u, spacing, v)


def _compass(G, lo, hi, u0, spacing, v0, min_step: float = 1e-11, max_moves: int = 10000):
    q = len(u0)
    step = spacing.astype(float).copy()
    u, v = u0.copy(), v0
    live = spacing > 0
    dirs = []
    for j in range(q):
        if live[j]:
            e = np.zeros(q)
            e[j] = 1.0
            dirs.extend([e, -e])
    dirs = np.array(dirs)
    moves = 0
    while np.any(step[live] > min_step * (1.0 + np.abs(u[live]))) and moves < max_moves:
        trial = np.clip(u + dirs * step, lo, hi)
        vals = G(trial)
        k = int(np.argmax(vals))
        if vals[k] > v:
            u, v = trial[k], float(vals[k])
            moves += 1
        else:
            step = step / 2
    return u, v, float(np.max(step))


def prv_value(X, H, f: Callable, grid_points: int = 2001) -> VariationalResult:
    """``sup_u [f(u) - I(u)] + ln Tr e^{-H}`` with ``I`` the normalized rate."""
    c = CumulantGF((X,), base=H, normalized=True)
    return maximize(c, f, grid_points, constant=c.offset)


def variational_sup(c: CumulantGF, F: Callable, grid_points: int | None = None) -> VariationalResult:
    """``sup_u [F(u) - I(u)]`` for an existing CGF, no additive constant."""
    if grid_points is None:
        grid_points = 2001 if c.q == 1 else 41
    _check_q(c.q)
    return maximize(c, F, grid_points)


def _check_q(q: int) -> None:
    if q > config.LIMITS.max_grid_variables:
        raise ResourceError(
            f"{q} variables exceed the grid search cap of {config.LIMITS.max_grid_variables}"
        )


def multi_observable_value(Xs: Sequence, fs: Sequence[Callable], grid_points: int = 41) -> VariationalResult:
    """``sup_u [sum_j f_j(u_j) - I(u)]`` with ``I`` the unnormalized multivariable rate."""
    if len(Xs) != len(fs):
        raise ValueError("need one function per observable")
    _check_q(len(Xs))
    c = CumulantGF(tuple(Xs))
    fs = list(fs)

    def F(u):
        u = np.asarray(u, dtype=float)
        if c.q == 1:
            return fs[0](u)
        return sum(f(u[j]) for j, f in enumerate(fs))

    return maximize(c, F, grid_points if c.q > 1 else 2001)


def general_meanfield_value(Xs: Sequence, Q, grid_points: int = 41) -> VariationalResult:
    """``sup_u [Q(u) - I(u)]`` for a polynomial ``Q``.

    ``Q`` is a ``PowerDecomposition`` (evaluated term by term) or any callable.
    """
    from .sympoly import PowerDecomposition, evaluate_decomposition

    _check_q(len(Xs))
    c = CumulantGF(tuple(Xs))
    if isinstance(Q, PowerDecomposition):
        if Q.nvars != c.q:
            raise ValueError(f"decomposition has {Q.nvars} variables, expected {c.q}")
        dec = Q

        def F(u):
            u = np.asarray(u, dtype=float)
            if c.q == 1:
                u = u[None, ...]
            return evaluate_decomposition(dec, u)
    else:
        F = Q
    return maximize(c, F, grid_points if c.q > 1 else 2001)
