"""Alternative Hamiltonian and Hermitian descriptions of linear dynamics."""

from .core import (
    AdmissibleTriple,
    AlthamError,
    BilinearForm,
    canonical_triple,
    hermitian_eval,
    metric_adjoint,
    validate_triple,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibleTriple",
    "AlthamError",
    "BilinearForm",
    "canonical_triple",
    "hermitian_eval",
    "metric_adjoint",
    "validate_triple",
]
