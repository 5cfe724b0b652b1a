class ConfigurationError(ValueError):
    """Invalid system, run configuration, or experiment document.

    ``field`` names the offending entry (dotted path) when known and
    ``lineno`` carries the document line for parse errors.
    """

    def __init__(self, message, field=None, lineno=None):
        super().__init__(message)
        self.field = field
        self.lineno = lineno


class PreconditionError(ValueError):
    pass


class InvariantViolation(ValueError):
    pass


class NumericalBlowup(FloatingPointError):
    def __init__(self, message, t):
        super().__init__(f"{message} (t={t:.17g})")
        self.t = t


class SingularityError(ArithmeticError):
    """Kinetic energy fell below the guard (or to zero) where the Jacobi
    variational dynamics carries 1/T terms."""

    def __init__(self, t, kinetic, guard):
        super().__init__(
            f"kinetic energy {kinetic:.3e} below guard {guard:.3e} at t={t:.17g}")
        self.t = t
        self.kinetic = kinetic
        self.guard = guard
