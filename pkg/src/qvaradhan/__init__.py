"""Quantum Varadhan toolkit: rate functions and variational formulas for
mean-field quantum spin systems, with finite-n and Monte Carlo oracles."""
from .config import (
    DimensionCapError,
    NotHermitianError,
    QVError,
    ResourceError,
    SolverError,
    configure,
)
from .cumulant import CumulantGF, cgf, cgf_grad, cgf_hessian, pauli_family
from .finite_n import collective_log_trace, log_trace_finite_n, trotter_log_trace
from .rate import rate_point, rate_values
from .varsolve import general_meanfield_value, multi_observable_value, prv_value

__version__ = "0.1.0"

__all__ = [
    "CumulantGF",
    "DimensionCapError",
    "NotHermitianError",
    "QVError",
    "ResourceError",
    "SolverError",
    "cgf",
    "cgf_grad",
    "cgf_hessian",
    "collective_log_trace",
    "configure",
    "general_meanfield_value",
    "log_trace_finite_n",
    "multi_observable_value",
    "pauli_family",
    "prv_value",
    "rate_point",
    "rate_values",
    "trotter_log_trace",
]
