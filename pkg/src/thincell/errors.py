"""Exception hierarchy shared by every module of the package."""


class ThinCellError(Exception):
    """Base class for all package errors."""


class NonPositiveInput(ThinCellError, ValueError):
    pass


class InvalidCoupling(ThinCellError, ValueError):
    """Hyperfine quantum numbers that do not form a valid coupling."""


class MismatchedQuantumNumbers(ThinCellError, ValueError):
    pass


class NonPositiveWavevector(NonPositiveInput):
    pass


class InvalidGrid(ThinCellError, ValueError):
    pass


class LengthMismatch(ThinCellError, ValueError):
    pass


class SolverError(ThinCellError, ArithmeticError):
    """Numerical failure inside the master-equation solver."""


class NoSteadyState(SolverError):
    """The generator does not conserve the trace functional."""


class DegenerateNullSpace(SolverError):
    """More than one stationary state exists.

    The exception carries the fallback state (the trace-normalised null-space
    element closest to the thermal ground mixture) and the solve report.
    """

    def __init__(self, message, rho=None, report=None):
        super().__init__(message)
        self.rho = rho
        self.report = report


class StepSizeTooLarge(SolverError):
    pass


class PointFailure(SolverError):
    """A sweep point failed; ``delta_c`` and ``velocity`` locate it (SI units)."""

    def __init__(self, message, delta_c=None, velocity=None):
        super().__init__(message)
        self.delta_c = delta_c
        self.velocity = velocity


class ConfigError(ThinCellError, ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, message, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line
