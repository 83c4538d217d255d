"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or invalid user input (bad matrix, bad measure, bad grid)."""


class SizeError(RuntimeError):
    """A configured resource cap would be exceeded."""

    def __init__(self, message, size=None):
        super().__init__(message)
        self.size = size


class DomainError(ValueError):
    """A matrix function was asked to act outside its domain."""

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class EigenError(RuntimeError):
    """The Hermitian eigensolver failed to converge."""

    def __init__(self, dim, residual=None):
        msg = f"eigensolver failed on a {dim}x{dim} Hermitian matrix"
        if residual is not None:
            msg += f" (residual {residual:.3e})"
        super().__init__(msg)
        self.dim = dim
        self.residual = residual


class PropertyFailure(AssertionError):
    """A self-test property did not hold."""
