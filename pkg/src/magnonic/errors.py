"""Exception hierarchy shared across the package."""


class MagnonicError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(MagnonicError, ValueError):
    pass


class ParameterError(MagnonicError, ValueError):
    """Physical parameters violate a regime the models rely on."""


class NonDispersiveError(ParameterError):
    pass


class SymmetricDetuningError(ParameterError):
    """``delta_1 != -delta_2``; carries the bare magnon frequencies that fix it."""

    def __init__(self, message, retuned_omega_m1=None, retuned_omega_m2=None):
        super().__init__(message)
        self.retuned_omega_m1 = retuned_omega_m1
        self.retuned_omega_m2 = retuned_omega_m2


class SingularParameterError(ParameterError):
    pass


class TruncationError(MagnonicError):
    """The Fock cutoff is too small for the requested state or operation."""


class NonConvergenceError(MagnonicError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class SchemaError(MagnonicError, ValueError):
    """Configuration file does not match the expected schema."""
