"""Exception hierarchy shared by all modules."""


class IgnError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(IgnError, ValueError):
    pass


class ParamOutOfRange(IgnError, ValueError):
    pass


class NonFiniteValue(IgnError, ValueError):
    pass


class SingularGram(IgnError, ArithmeticError):
    """The Gram matrix J^T J failed the nonsingularity threshold."""


class NotSPD(IgnError, ArithmeticError):
    """Cholesky factorization failed or the matrix is not symmetric."""


class InnerMatrixSingular(IgnError, ArithmeticError):
    """The p x p capacitance matrix I + V^T G U of a low-rank update is singular."""


class EmptyDataset(IgnError, ValueError):
    pass


class BadLabel(IgnError, ValueError):
    pass


class ParseError(IgnError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InconsistentDimension(IgnError, ValueError):
    pass


class RunAborted(IgnError, RuntimeError):
    """A solver run stopped early; ``trace`` holds the records collected so far."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class Diverged(RunAborted):
    pass
