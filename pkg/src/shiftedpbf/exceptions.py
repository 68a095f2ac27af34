"""Exception hierarchy. Every error raised by the library derives from
:class:`ShiftedPBFError` so callers (and the CLI) can map them to exit codes."""


class ShiftedPBFError(Exception):
    pass


class SpecError(ShiftedPBFError, ValueError):
    """Malformed or inconsistent banded-operator specification."""


class OutOfRangeError(ShiftedPBFError, IndexError):
    """Index beyond what a specification or table can produce."""


class ShapeError(ShiftedPBFError, ValueError):
    """Input matrix has the wrong shape or violates the band."""


class ContractViolation(ShiftedPBFError, ValueError):
    """A documented precondition does not hold."""


class ZeroExtremeDiagonalError(ShiftedPBFError, ZeroDivisionError):
    """Division by a vanishing extreme-diagonal entry."""


class ShiftNotAdmissible(ShiftedPBFError):
    """The shifted truncation has no strictly positive bidiagonal factorization."""


class InternalConsistencyError(ShiftedPBFError, AssertionError):
    """A guaranteed mathematical fact failed numerically: indicates a bug."""


class StabilizationError(InternalConsistencyError):
    """Moment values changed with N past the stabilization threshold."""


class SolverError(ShiftedPBFError, ArithmeticError):
    """Base for eigensolver failures."""


class ComplexSpectrumError(SolverError):
    pass


class ConvergenceError(SolverError):
    pass


class SimplicityError(SolverError):
    pass


class DegenerateNormalizationError(SolverError):
    pass
