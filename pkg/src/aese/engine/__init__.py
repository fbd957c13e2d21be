"""Numerical propagation and analytic gate propagators."""
from .backend import BACKEND, compiled_available, get_kernels
from .hamiltonian import CompiledHamiltonian, Term, TimeDependentHamiltonian, constant
from .integrate import PropagationError, PropagationResult, evolve

__all__ = [
    "BACKEND",
    "CompiledHamiltonian",
    "PropagationError",
    "PropagationResult",
    "Term",
    "TimeDependentHamiltonian",
    "compiled_available",
    "constant",
    "evolve",
    "get_kernels",
]
