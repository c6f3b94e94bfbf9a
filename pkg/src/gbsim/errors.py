"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration and format
problems exit 1, capacity guards exit 2, statistical validation failures
exit 3.
"""


class GbsimError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(GbsimError, ValueError):
    """Invalid circuit or experiment configuration (bad ranges, overlaps,
    non-unitary matrices, malformed config values)."""


class FormatError(GbsimError, ValueError):
    """Malformed on-disk artifact. Carries a line number when available."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CapacityError(GbsimError, RuntimeError):
    """A guard limit would be exceeded (click count, cutoff, enumeration
    size). Raised before starting the oversized computation."""


class PhysicalityError(GbsimError, ArithmeticError):
    """State fails a physicality requirement, e.g. the Husimi covariance
    submatrix is not positive definite."""


class NumericalInstabilityError(GbsimError, ArithmeticError):
    """A result is outside its mathematically valid range by more than the
    documented tolerance."""


class DegenerateInputError(GbsimError, ValueError):
    """Statistically degenerate input (constant vector, zero-norm
    correlation vector, empty sample set)."""


class ValidationFailure(GbsimError, RuntimeError):
    """One or more pipeline validation checks failed."""
