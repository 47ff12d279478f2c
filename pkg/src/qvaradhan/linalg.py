"""Dense Hermitian linear algebra.

Matrices are plain complex numpy arrays; :func:`as_hermitian` validates and
freezes them. Tensor products use big-endian site order: site 1 is the
leftmost Kronecker factor.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.special import logsumexp

from . import config
from .config import DimensionCapError, NotHermitianError

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
for _p in (PAULI_X, PAULI_Y, PAULI_Z):
    _p.setflags(write=False)


def as_hermitian(A, tol: float | None = None) -> np.ndarray:
    """Return a read-only complex copy of ``A`` after checking it is Hermitian.

    Raises NotHermitianError naming the entry pair with the largest
    asymmetry ``|A[i,j] - conj(A[j,i])|``.
    """
    tol = config.TOL.hermiticity if tol is None else tol
    A = np.array(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise NotHermitianError(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        i, j = np.argwhere(~np.isfinite(A))[0]
        raise NotHermitianError(f"non-finite entry at ({i}, {j})")
    asym = np.abs(A - A.conj().T)
    worst = float(asym.max())
    if worst > tol:
        i, j = np.unravel_index(np.argmax(asym), asym.shape)
        raise NotHermitianError(
            f"matrix is not Hermitian: |A[{i},{j}] - conj(A[{j},{i}])| = {worst:.3e} > {tol:.1e}"
        )
    A = (A + A.conj().T) / 2
    A.setflags(write=False)
    return A


class SpectralInterval(NamedTuple):
    lo: float
    hi: float

    def contains(self, u: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= u <= self.hi + tol

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in ascending order with the unitary of eigenvectors (columns)."""

    eigenvalues: np.ndarray
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        return (self.basis * self.eigenvalues) @ self.basis.conj().T

    def interval(self) -> SpectralInterval:
        return SpectralInterval(float(self.eigenvalues[0]), float(self.eigenvalues[-1]))

    def projector(self, indices: Sequence[int]) -> np.ndarray:
        """Projection onto the span of the eigenvectors with the given indices."""
        V = self.basis[:, list(indices)]
        return V @ V.conj().T

    def eigenspace(self, value: float, tol: float = 1e-9) -> np.ndarray:
        """Orthonormal basis (columns) of the eigenspace of ``value``."""
        scale = 1.0 + abs(value)
        mask = np.abs(self.eigenvalues - value) <= tol * scale
        return self.basis[:, mask]


def spectral_decompose(A) -> SpectralDecomposition:
    A = as_hermitian(A)
    w, V = np.linalg.eigh(A)
    w.setflags(write=False)
    V.setflags(write=False)
    return SpectralDecomposition(w, V)


def spectral_interval(A) -> SpectralInterval:
    w = np.linalg.eigvalsh(as_hermitian(A))
    return SpectralInterval(float(w[0]), float(w[-1]))


def apply_function(A, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Spectral calculus ``f(A) = V diag(f(w)) V^dagger``.

    ``f`` is called once on the eigenvalue vector, so it must accept arrays.
    """
    sd = A if isinstance(A, SpectralDecomposition) else spectral_decompose(A)
    fw = np.asarray(f(sd.eigenvalues), dtype=float)
    if fw.shape != sd.eigenvalues.shape:
        fw = np.broadcast_to(fw, sd.eigenvalues.shape)
    bad = ~np.isfinite(fw)
    if bad.any():
        lam = sd.eigenvalues[np.argmax(bad)]
        raise ValueError(f"function is not finite at eigenvalue {lam!r}")
    out = (sd.basis * fw) @ sd.basis.conj().T
    out = (out + out.conj().T) / 2
    out.setflags(write=False)
    return out


def _check_cap(dim: int) -> None:
    if dim > config.LIMITS.max_dim:
        raise DimensionCapError(dim, config.LIMITS.max_dim)


def mean_field_lift(X, k: int, n: int) -> np.ndarray:
    """The copy ``1 x ... x X x ... x 1`` of ``X`` at site ``k`` (1-based) of ``n``."""
    X = as_hermitian(X)
    if not 1 <= k <= n:
        raise ValueError(f"site index {k} outside 1..{n}")
    m = X.shape[0]
    _check_cap(m**n)
    left = np.eye(m ** (k - 1))
    right = np.eye(m ** (n - k))
    return np.kron(np.kron(left, X), right)


def mean_field_average(X, n: int) -> np.ndarray:
    """``X^(n) = (1/n) sum_k X_k``."""
    X = as_hermitian(X)
    m = X.shape[0]
    _check_cap(m**n)
    out = np.zeros((m**n, m**n), dtype=complex)
    for k in range(1, n + 1):
        out += mean_field_lift(X, k, n)
    return out / n


def log_trace_exp(A) -> float:
    """``ln Tr e^A`` evaluated from the spectrum with a max-shift."""
    w = np.linalg.eigvalsh(as_hermitian(A))
    return float(logsumexp(w))


def schatten_norm(A, p: float) -> float:
    """Schatten p-norm ``(sum s_i^p)^(1/p)`` over singular values; ``p = inf`` gives the operator norm."""
    if not p >= 1:
        raise ValueError(f"Schatten norm needs p >= 1, got {p}")
    s = np.linalg.svd(np.asarray(A, dtype=complex), compute_uv=False)
    if np.isinf(p):
        return float(s.max())
    smax = s.max()
    if smax == 0:
        return 0.0
    return float(smax * np.sum((s / smax) ** p) ** (1.0 / p))


def child_rng(seed: int, index: int = 0) -> np.random.Generator:
    """PCG64 stream number ``index`` split from ``seed``.

    Equal to the ``index``-th child of ``SeedSequence(seed).spawn``, so a
    sweep can be cut into chunks without changing any sample.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def random_hermitian(m: int, seed: int, index: int = 0) -> np.ndarray:
    """``(G + G^dagger)/2`` with i.i.d. standard complex Gaussian ``G``."""
    if m < 1:
        raise ValueError("dimension must be positive")
    rng = child_rng(seed, index)
    G = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2)
    A = (G + G.conj().T) / 2
    A.setflags(write=False)
    return A


def local_unitary_conjugate(A: np.ndarray, U: np.ndarray, n: int) -> np.ndarray:
    """``U^{(x)n} A U^{(x)n, dagger}`` without forming the ``m^n``-dimensional product."""
    m = U.shape[0]
    T = np.asarray(A, dtype=complex).reshape((m,) * (2 * n))
    Uc = U.conj()
    for k in range(n):
        # row index k, then column index n + k
        T = np.moveaxis(np.tensordot(U, T, axes=([1], [k])), 0, k)
        T = np.moveaxis(np.tensordot(Uc, T, axes=([1], [n + k])), 0, n + k)
    return T.reshape(m**n, m**n)
