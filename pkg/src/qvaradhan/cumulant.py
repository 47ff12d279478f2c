"""Cumulant generating functions of tilted Hermitian observables.

For observables ``X_1..X_q`` and an optional base Hamiltonian ``H``::

    C(t) = ln Tr exp(t_1 X_1 + ... + t_q X_q - H)  [- ln Tr exp(-H)]

Derivatives are computed in the eigenbasis of the exponent. The first
derivative is a tilted expectation; the second is the Bogoliubov (Duhamel)
Gram matrix of the centred observables, evaluated with the exact
divided-difference kernel instead of quadrature.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import config
from .linalg import SpectralInterval, as_hermitian, log_trace_exp, spectral_interval


@dataclass(frozen=True, eq=False)
class CumulantGF:
    observables: tuple
    base: np.ndarray | None = None
    normalized: bool = False
    _stack: np.ndarray = field(init=False, repr=False, compare=False)
    _offset: float = field(init=False, repr=False, compare=False)
    _box: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        obs = tuple(as_hermitian(X) for X in self.observables)
        if not obs:
            raise ValueError("at least one observable is required")
        m = obs[0].shape[0]
        if any(X.shape != (m, m) for X in obs):
            raise ValueError("observables must share one dimension")
        base = None if self.base is None else as_hermitian(self.base)
        if base is not None and base.shape != (m, m):
            raise ValueError(f"base Hamiltonian has shape {base.shape}, expected {(m, m)}")
        if self.normalized and base is None:
            raise ValueError("a normalized CGF needs a base Hamiltonian")
        object.__setattr__(self, "observables", obs)
        object.__setattr__(self, "base", base)
        stack = np.stack(obs)
        stack.setflags(write=False)
        object.__setattr__(self, "_stack", stack)
        offset = log_trace_exp(-base) if self.normalized else 0.0
        object.__setattr__(self, "_offset", offset)
        object.__setattr__(self, "_box", tuple(spectral_interval(X) for X in obs))

    @property
    def q(self) -> int:
        return len(self.observables)

    @property
    def dim(self) -> int:
        return self.observables[0].shape[0]

    @property
    def offset(self) -> float:
        """The subtracted ``ln Tr e^{-H}`` (zero when not normalized)."""
        return self._offset

    def intervals(self) -> list[SpectralInterval]:
        return list(self._box)

    def exponent(self, t) -> np.ndarray:
        t = self._as_point(t)
        K = np.tensordot(t, self._stack, axes=1)
        if self.base is not None:
            K = K - self.base
        return K

    def _as_point(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if t.shape != (self.q,):
            raise ValueError(f"expected a vector of length {self.q}, got shape {t.shape}")
        if not np.all(np.isfinite(t)):
            raise ValueError("t must be finite")
        return t


def pauli_family(*names: str, base=None, normalized: bool = False) -> CumulantGF:
    """Convenience constructor, e.g. ``pauli_family("z", "x")``."""
    from .linalg import PAULI_X, PAULI_Y, PAULI_Z

    table = {"x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z}
    return CumulantGF(tuple(table[n] for n in names), base=base, normalized=normalized)


def _kernel(w: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Divided differences ``(p_a - p_b)/(w_a - w_b)`` with the diagonal limit.

    ``p = e^w / Z``; works on stacks with trailing eigen-axis.
    """
    dw = w[..., :, None] - w[..., None, :]
    dp = p[..., :, None] - p[..., None, :]
    near = np.abs(dw) < config.TOL.kernel * (1.0 + np.abs(w[..., :, None]))
    safe = np.where(near, 1.0, dw)
    mean = (p[..., :, None] + p[..., None, :]) / 2
    return np.where(near, mean, dp / safe)


def moments(c: CumulantGF, T, order: int = 2):
    """Values, gradients and (for ``order=2``) Hessians at a stack of points.

    ``T`` has shape ``(P, q)``. Returns arrays of shape ``(P,)``, ``(P, q)``
    and ``(P, q, q)``.
    """
    T = np.asarray(T, dtype=float).reshape(-1, c.q)
    K = np.einsum("pj,jab->pab", T, c._stack)
    if c.base is not None:
        K = K - c.base
    w, V = np.linalg.eigh(K)
    logz = logsumexp(w, axis=1)
    p = np.exp(w - logz[:, None])
    Xt = np.einsum("pba,jbc,pcd->pjad", V.conj(), c._stack, V, optimize=True)
    diag = np.einsum("pjaa->pja", Xt).real
    grad = np.einsum("pa,pja->pj", p, diag)
    values = logz - c.offset
    if order < 2:
        return values, grad, None
    L = _kernel(w, p)
    m = c.dim
    Xc = Xt - grad[:, :, None, None] * np.eye(m)
    hess = np.einsum("pjab,pkab,pab->pjk", Xc.conj(), Xc, L, optimize=True).real
    hess = (hess + np.swapaxes(hess, 1, 2)) / 2
    return values, grad, hess


def cgf(c: CumulantGF, t) -> float:
    t = c._as_point(t)
    return float(log_trace_exp(c.exponent(t)) - c.offset)


def cgf_values(c: CumulantGF, T) -> np.ndarray:
    """``C`` on a stack of points (eigenvalues only)."""
    T = np.asarray(T, dtype=float).reshape(-1, c.q)
    K = np.einsum("pj,jab->pab", T, c._stack)
    if c.base is not None:
        K = K - c.base
    return logsumexp(np.linalg.eigvalsh(K), axis=1) - c.offset


def cgf_grad(c: CumulantGF, t) -> np.ndarray:
    """Tilted expectations ``Tr(X_k e^K) / Tr(e^K)``."""
    _, g, _ = moments(c, c._as_point(t)[None, :], order=1)
    return g[0]


def cgf_hessian(c: CumulantGF, t) -> np.ndarray:
    _, _, h = moments(c, c._as_point(t)[None, :], order=2)
    return h[0]


def bogoliubov_inner(A, B, K) -> float:
    """``(1/Z) int_0^1 Tr[A^dagger e^{sK} B e^{(1-s)K}] ds`` with ``Z = Tr e^K``."""
    K = as_hermitian(K)
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if not (A.shape == B.shape == K.shape):
        raise ValueError("A, B and K must share one shape")
    w, V = np.linalg.eigh(K)
    p = np.exp(w - logsumexp(w))
    At = V.conj().T @ A @ V
    Bt = V.conj().T @ B @ V
    return float(np.real(np.sum(At.conj() * Bt * _kernel(w, p))))


def tilted_expectation(c: CumulantGF, t, A) -> float:
    """``Tr(A e^K)/Tr(e^K)`` for an arbitrary Hermitian ``A``."""
    K = c.exponent(t)
    w, V = np.linalg.eigh(K)
    p = np.exp(w - logsumexp(w))
    At = V.conj().T @ np.asarray(A, dtype=complex) @ V
    return float(np.real(np.sum(p * np.diag(At))))


def as_cgf(observables, base=None, normalized=False) -> CumulantGF:
    if isinstance(observables, CumulantGF):
        return observables
    if isinstance(observables, np.ndarray) and observables.ndim == 2:
        observables = (observables,)
    return CumulantGF(tuple(observables), base=base, normalized=normalized)


__all__ = [
    "CumulantGF",
    "as_cgf",
    "bogoliubov_inner",
    "cgf",
    "cgf_grad",
    "cgf_hessian",
    "cgf_values",
    "moments",
    "pauli_family",
    "tilted_expectation",
]
