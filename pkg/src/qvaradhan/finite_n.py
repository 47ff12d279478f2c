"""Exact finite-n traces of mean-field exponentials and their Trotter approximants.

The exponent ``n [sum_j f_j(X_j^(n)) - H^(n)]`` is built densely on the
``m^n``-dimensional product space, where ``X^(n)`` and ``H^(n)`` are site
averages. The ``n`` lifts of one observable commute, so ``f(X^(n))`` is
diagonal in the product eigenbasis of ``X`` with entries ``f`` of averaged
site eigenvalues.

For ``m = 2`` a permutation-symmetric exponent decomposes over total-spin
sectors; :func:`collective_log_trace` uses that to reach large ``n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.special import logsumexp

from . import config
from .config import DimensionCapError
from .io import csv_text
from .linalg import as_hermitian, local_unitary_conjugate

CSV_COLUMNS = ("n", "trotter_steps", "value", "reference", "gap")


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    trotter_steps: int | None
    value: float
    reference: float
    gap: float


def _listify(Xs, fs):
    if isinstance(Xs, np.ndarray) and Xs.ndim == 2:
        Xs = [Xs]
    if callable(fs):
        fs = [fs]
    Xs = [as_hermitian(X) for X in Xs]
    fs = list(fs)
    if len(Xs) != len(fs):
        raise ValueError("need one function per observable")
    return Xs, fs


def max_feasible_n(m: int) -> int:
    n = 0
    while m ** (n + 1) <= config.LIMITS.max_dim:
        n += 1
    return n


def _check_dim(m: int, n: int) -> int:
    if n < 1:
        raise ValueError("n must be positive")
    dim = m**n
    if dim > config.LIMITS.max_dim:
        raise DimensionCapError(
            dim,
            config.LIMITS.max_dim,
            f"m^n = {m}^{n} = {dim} exceeds the cap {config.LIMITS.max_dim}; "
            f"largest feasible n is {max_feasible_n(m)}",
        )
    return dim


def _is_real(*mats) -> bool:
    return all(A is None or not np.any(np.asarray(A).imag) for A in mats)


def _site_eigs(X):
    """Eigenvalues and eigenbasis; diagonal matrices keep the identity basis."""
    if np.count_nonzero(X - np.diag(np.diag(X))) == 0:
        return np.diag(X).real.copy(), None
    w, U = np.linalg.eigh(X)
    return w, U


def _averaged_spectrum(w: np.ndarray, n: int) -> np.ndarray:
    """``(1/n) sum_k w[i_k]`` over the big-endian product index."""
    total = np.zeros(1)
    for _ in range(n):
        total = (total[:, None] + w[None, :]).ravel()
    return total / n


def add_site_sum(E: np.ndarray, A: np.ndarray, n: int, scale: float = 1.0) -> None:
    """In place ``E += scale * sum_k A_k`` for the lifts of the site operator ``A``."""
    m = A.shape[0]
    for k in range(n):
        lift = sparse.kron(
            sparse.kron(sparse.identity(m**k, format="csr"), sparse.csr_matrix(A)),
            sparse.identity(m ** (n - k - 1), format="csr"),
            format="coo",
        )
        data = lift.data if np.iscomplexobj(E) else lift.data.real
        np.add.at(E, (lift.row, lift.col), scale * data)


def build_meanfield_exponent(Xs, fs, H=None, n: int = 1) -> np.ndarray:
    """``n [sum_j f_j(X_j^(n)) - H^(n)]`` as a dense ``m^n x m^n`` matrix."""
    Xs, fs = _listify(Xs, fs)
    m = Xs[0].shape[0]
    if H is not None:
        H = as_hermitian(H)
    dim = _check_dim(m, n)
    real = _is_real(*Xs, H)
    E = np.zeros((dim, dim), dtype=float if real else complex)
    for X, f in zip(Xs, fs):
        w, U = _site_eigs(X)
        diag = n * np.asarray(f(_averaged_spectrum(w, n)), dtype=float)
        diag = np.broadcast_to(diag, (dim,))
        if U is None:
            E[np.diag_indices(dim)] += diag
        else:
            D = np.diag(diag).astype(E.dtype)
            D = local_unitary_conjugate(D, U, n)
            E += D.real if real else D
            del D
    if H is not None:
        add_site_sum(E, H, n, scale=-1.0)
    return E


def _log_trace_exp_dense(E: np.ndarray) -> float:
    return float(logsumexp(np.linalg.eigvalsh(E)))


def log_trace_finite_n(Xs, fs, H=None, n: int = 1) -> float:
    """``(1/n) ln Tr exp(n [sum_j f_j(X_j^(n)) - H^(n)])``."""
    E = build_meanfield_exponent(Xs, fs, H, n)
    return _log_trace_exp_dense(E) / n


def trotter_log_trace(X, H, f: Callable, n: int, N: int) -> float:
    """``(1/n) ln Tr[(e^{n f(X^(n))/N} e^{-n H^(n)/N})^N]``.

    Evaluated as ``Tr S^N`` for the positive matrix
    ``S = A^{1/2} B A^{1/2}`` (cyclicity), with ``A = e^{n f(X^(n))/N}``
    diagonal in the product eigenbasis of ``X`` and ``B = (e^{-H/N})^{(x)n}``.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    X = as_hermitian(X)
    H = as_hermitian(H)
    m = X.shape[0]
    dim = _check_dim(m, n)
    w, U = _site_eigs(X)
    if U is None:
        U = np.eye(m)
    half = np.exp(n * np.asarray(f(_averaged_spectrum(w, n)), dtype=float) / (2 * N))
    half = np.broadcast_to(half, (dim,))
    hw, hv = np.linalg.eigh(H)
    site = U.conj().T @ (hv * np.exp(-hw / N)) @ hv.conj().T @ U
    if _is_real(site):
        site = site.real
    B = np.ones((1, 1))
    for _ in range(n):
        B = np.kron(B, site)
    S = half[:, None] * B * half[None, :]
    mu = np.linalg.eigvalsh(S)
    mu = mu[mu > 0]
    return float(logsumexp(N * np.log(mu))) / n


def permutation_operator(perm: Sequence[int], m: int) -> np.ndarray:
    """Unitary permuting tensor factors: site ``k`` moves to ``perm[k]``."""
    n = len(perm)
    dim = m**n
    idx = np.arange(dim).reshape((m,) * n)
    moved = np.transpose(idx, np.argsort(perm)).ravel()
    P = np.zeros((dim, dim))
    P[np.arange(dim), moved] = 1.0
    return P


# -- total-spin sectors for m = 2 ------------------------------------------

def _pauli_coefficients(A) -> tuple[np.ndarray, float]:
    A = as_hermitian(A)
    if A.shape != (2, 2):
        raise ValueError("collective evaluation needs 2x2 site matrices")
    from .linalg import PAULI_X, PAULI_Y, PAULI_Z

    vec = np.array([np.trace(A @ P).real / 2 for P in (PAULI_X, PAULI_Y, PAULI_Z)])
    return vec, float(np.trace(A).real / 2)


def spin_matrices(J: float):
    """``(Sx, Sy, Sz)`` in the basis ``|J, M>``, ``M = J..-J``."""
    ms = np.arange(J, -J - 1, -1)
    d = len(ms)
    up = np.zeros((d, d))
    for i in range(1, d):
        up[i - 1, i] = math.sqrt(J * (J + 1) - ms[i] * (ms[i] + 1))
    Sx = (up + up.T) / 2
    Sy = (up - up.T) / 2j
    return Sx.astype(complex), Sy, np.diag(ms).astype(complex)


def sector_multiplicity(n: int, twoJ: int) -> int:
    k = (n - twoJ) // 2
    return math.comb(n, k) - (math.comb(n, k - 1) if k >= 1 else 0)


def collective_log_trace(Xs, fs, H=None, n: int = 1) -> float:
    """Same quantity as :func:`log_trace_finite_n` for qubit sites, summed over
    total-spin sectors ``J`` with multiplicities; cost is polynomial in ``n``."""
    Xs, fs = _listify(Xs, fs)
    coeffs = [_pauli_coefficients(X) for X in Xs]
    hvec, h0 = _pauli_coefficients(H) if H is not None else (np.zeros(3), 0.0)
    parts = []
    for twoJ in range(n % 2, n + 1, 2):
        S = spin_matrices(twoJ / 2)
        E = -(2 * sum(h * s for h, s in zip(hvec, S)) + n * h0 * np.eye(twoJ + 1))
        for (a, b), f in zip(coeffs, fs):
            Xn = (2 / n) * sum(c * s for c, s in zip(a, S)) + b * np.eye(twoJ + 1)
            w, V = np.linalg.eigh(Xn)
            E = E + n * (V * np.asarray(f(w), dtype=float)) @ V.conj().T
        ev = np.linalg.eigvalsh((E + E.conj().T) / 2)
        parts.append(math.log(sector_multiplicity(n, twoJ)) + logsumexp(ev))
    return float(logsumexp(parts)) / n


def convergence_rows(X, H, f: Callable, ns: Iterable[int], reference: float,
                     trotter_steps: Iterable[int] | None = None) -> list[ConvergenceRow]:
    rows = []
    for n in ns:
        steps = list(trotter_steps) if trotter_steps else [None]
        for N in steps:
            v = log_trace_finite_n(X, f, H, n) if N is None else trotter_log_trace(X, H, f, n, N)
            rows.append(ConvergenceRow(n, N, v, reference, v - reference))
    return rows


def rows_to_csv(rows: Sequence[ConvergenceRow]) -> str:
    return csv_text(CSV_COLUMNS, ([r.n, r.trotter_steps, r.value, r.reference, r.gap] for r in rows))


assert tuple(f.name for f in fields(ConvergenceRow)) == CSV_COLUMNS
