"""Exception types shared across the package."""


class ModelError(ValueError):
    """Invalid lattice model input (dimensions, coefficients, covariances)."""


class NotPositiveDefiniteError(ModelError):
    """A matrix that must be positive definite failed its Cholesky factorization.

    ``stage`` names the shell index (or matrix pivot) where it failed.
    """

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage


class EnvelopeError(ModelError):
    """Permuted precision has fill outside the block-tridiagonal envelope."""
