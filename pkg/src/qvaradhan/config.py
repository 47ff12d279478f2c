"""Shared tolerances, resource caps and exception types."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermiticity: float = 1e-12
    reconstruction: float = 1e-10
    crosscheck: float = 1e-8
    # relative gradient residual accepted by the Legendre solver
    newton: float = 1e-10
    # distance from a face below which a point is evaluated as a boundary point
    boundary: float = 1e-9
    # equal-eigenvalue branch of the divided-difference kernel
    kernel: float = 1e-9
    # eigenvalues below this fraction of the largest count as outside the support
    support: float = 1e-12


@dataclass(frozen=True)
class Limits:
    max_dim: int = 4096
    newton_iterations: int = 200
    max_grid_variables: int = 3


TOL = Tolerances()
LIMITS = Limits()


def configure(**overrides) -> None:
    """Override tolerance or limit fields by name, e.g. ``configure(max_dim=1024)``."""
    global TOL, LIMITS
    tol_fields = {f.name for f in dataclasses.fields(Tolerances)}
    lim_fields = {f.name for f in dataclasses.fields(Limits)}
    unknown = set(overrides) - tol_fields - lim_fields
    if unknown:
        raise KeyError(f"unknown configuration keys: {sorted(unknown)}")
    TOL = dataclasses.replace(TOL, **{k: v for k, v in overrides.items() if k in tol_fields})
    LIMITS = dataclasses.replace(LIMITS, **{k: v for k, v in overrides.items() if k in lim_fields})


def reset() -> None:
    global TOL, LIMITS
    TOL = Tolerances()
    LIMITS = Limits()


class QVError(Exception):
    """Base class for errors raised by this package."""


class NotHermitianError(QVError, ValueError):
    pass


class ResourceError(QVError):
    """A configured resource cap (dimension, grid size, sample count) was exceeded."""


class DimensionCapError(ResourceError, MemoryError):
    """A requested tensor-product dimension exceeds ``LIMITS.max_dim``."""

    def __init__(self, dim: int, cap: int, message: str | None = None):
        self.dim = dim
        self.cap = cap
        super().__init__(message or f"dimension {dim} exceeds the configured cap {cap}")


class SolverError(QVError, ArithmeticError):
    """An iterative solver stopped without converging.

    ``best`` holds the best iterate found, ``residual`` its residual norm.
    """

    def __init__(self, message: str, best=None, residual: float | None = None):
        self.best = best
        self.residual = residual
        super().__init__(message)
