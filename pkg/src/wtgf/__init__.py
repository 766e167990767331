"""Secrecy and secret-key rate bounds for wiretap channels with generalized feedback."""

from .errors import (
    BudgetExceeded,
    HypothesisError,
    HypothesisUnverified,
    HypothesisViolated,
    ModelError,
    SchemeInfeasible,
)
from .probkit import Alphabet, JointPmf, Kernel, entropy, mutual_information

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "BudgetExceeded",
    "HypothesisError",
    "HypothesisUnverified",
    "HypothesisViolated",
    "JointPmf",
    "Kernel",
    "ModelError",
    "SchemeInfeasible",
    "entropy",
    "mutual_information",
]
