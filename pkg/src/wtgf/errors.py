"""Exception types shared across the package."""


class ModelError(ValueError):
    """A channel or factorization is inconsistent with the model it claims."""


class SchemeInfeasible(ValueError):
    """A rate tuple violates one of the codebook ordering constraints."""


class BudgetExceeded(RuntimeError):
    """A computation would exceed its configured size budget."""

    def __init__(self, message, required=None, budget=None):
        super().__init__(message)
        self.required = required
        self.budget = budget


class HypothesisError(ValueError):
    """A closed-form result was requested on a channel outside its class."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class HypothesisViolated(HypothesisError):
    """The channel provably violates the hypothesis (a witness is attached)."""


class HypothesisUnverified(HypothesisError):
    """The hypothesis could be neither confirmed nor refuted."""
