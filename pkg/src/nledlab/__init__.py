"""Nonlinear electrodynamics laboratory.

Lagrangian models of the form L(X, Y), their constitutive maps, exact
travelling-wave solutions on constant magnetic backgrounds, a 1D field
solver and time-of-flight experiments built on it.
"""
from .errors import CFLViolation, DomainError, FitError, NoConvergence
from .lagrangian_models import (
    BornInfeld,
    DualityFamily,
    GeneralFamily,
    Maxwell,
    PolynomialProfile,
    model_from_dict,
)

__all__ = [
    "BornInfeld",
    "CFLViolation",
    "DomainError",
    "DualityFamily",
    "FitError",
    "GeneralFamily",
    "Maxwell",
    "NoConvergence",
    "PolynomialProfile",
    "model_from_dict",
]
__version__ = "0.1.0"
