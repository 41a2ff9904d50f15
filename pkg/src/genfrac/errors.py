"""Exception hierarchy shared across the library."""


class GenfracError(Exception):
    """Base class for all library errors."""


class ValidationError(GenfracError):
    """A configuration or argument contract was violated."""


class UnknownPreset(ValidationError):
    pass


class InvalidParams(ValidationError):
    pass


class OutOfDisc(GenfracError):
    """Kernel evaluated outside its disc of convergence."""


class NoConvergence(GenfracError):
    """A truncated series or iterative scheme failed to meet its tolerance."""


class GammaPole(GenfracError):
    """A gamma-function argument landed on a non-positive integer."""


class ZeroLeadingCoefficient(GenfracError):
    """Series reciprocal requested for a kernel with a_0 = 0."""


class DomainMismatch(GenfracError):
    pass


class OrderNotPositive(ValidationError):
    pass


class IntegerOrder(ValidationError):
    """Fractional-derivative path rejected a non-negative integer order."""


class MissingDerivatives(GenfracError):
    pass


class InvalidExponent(ValidationError):
    pass


class QuadratureFailure(NoConvergence):
    """Quadrature error estimate failed to meet tolerance."""


class DivergentNorm(GenfracError):
    pass


class Unbounded(GenfracError):
    pass


class AbscissaViolation(GenfracError):
    """Laplace transform requested left of the exponential-order abscissa."""


class MethodFailure(GenfracError):
    """Numerical Laplace inversion failed or cross-check disagreed."""


class DenominatorZero(GenfracError):
    pass


class MissingInitialValues(GenfracError):
    pass
