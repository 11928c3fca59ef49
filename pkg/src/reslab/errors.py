"""Exception hierarchy shared by all reslab modules."""

from __future__ import annotations


class ReslabError(Exception):
    """Base class for every error raised by reslab."""


class NonSymmetric(ReslabError, ValueError):
    """Matrix fails the complex-symmetry check H == H.T."""


class SymmetryViolation(NonSymmetric):
    """A real block that must be symmetric is not."""


class DimensionMismatch(ReslabError, ValueError):
    pass


class DefectiveMatrix(ReslabError, ArithmeticError):
    """Eigenvectors coalesce (exceptional point); c-normalization impossible."""

    def __init__(self, message: str, indices: tuple[int, ...] = ()):
        super().__init__(message)
        self.indices = indices


class PoleOnAxis(ReslabError, ZeroDivisionError):
    pass


class GridTooCoarse(ReslabError, ValueError):
    pass


class NoConvergence(ReslabError, RuntimeError):
    def __init__(self, message: str, shift: complex | None = None):
        super().__init__(message)
        self.shift = shift


class SingularSystem(ReslabError, ArithmeticError):
    pass


class EmptyWindow(ReslabError, ValueError):
    pass


class IoFailure(ReslabError, OSError):
    pass


class ParseError(ReslabError, ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class ValidationError(ReslabError, ValueError):
    def __init__(self, key: str, constraint: str):
        super().__init__(f"{key}: {constraint}")
        self.key = key
        self.constraint = constraint
