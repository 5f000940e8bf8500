"""Exception types raised across the package."""


class LadiesError(Exception):
    """Base class for all package errors."""


class GraphError(LadiesError, ValueError):
    """Invalid graph input, e.g. an edge endpoint outside ``[0, n)``."""


class CorruptLaplacianError(LadiesError, ArithmeticError):
    """A selected block of the Laplacian has zero Frobenius norm."""


class DatasetError(LadiesError, ValueError):
    """Malformed dataset directory.

    Carries the offending file name and (1-based) line number so the
    message can point straight at the problem.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class DivergenceError(LadiesError, FloatingPointError):
    """Non-finite values appeared during training."""
