"""Exception types raised across the package."""


class IsotoriError(Exception):
    """Base class for all package errors."""


class InvalidLattice(IsotoriError, ValueError):
    pass


class DegenerateLattice(IsotoriError, ValueError):
    pass


class GridMismatch(IsotoriError, ValueError):
    pass


class PeriodicityViolation(IsotoriError, ValueError):
    pass


class NonFinite(IsotoriError, FloatingPointError):
    pass


class SolverDiverged(IsotoriError, RuntimeError):
    pass


class DegenerateKernel(IsotoriError, RuntimeError):
    pass


class NoContraction(IsotoriError, RuntimeError):
    pass


class NoNondegenerateRotation(IsotoriError, RuntimeError):
    pass


class NotIsotropic(IsotoriError, ValueError):
    def __init__(self, message, face=None):
        super().__init__(message if face is None else f"face {face}: {message}")
        self.face = face


class DegenerateDiagonals(IsotoriError, ValueError):
    def __init__(self, message, face=None):
        super().__init__(message if face is None else f"face {face}: {message}")
        self.face = face


class GenericityFailed(IsotoriError, RuntimeError):
    pass


class TooLargeForExact(IsotoriError, ValueError):
    pass


class FormatError(IsotoriError, ValueError):
    pass


class VersionMismatch(FormatError):
    pass


class IoError(IsotoriError, OSError):
    pass


class ProjectionError(IsotoriError, ValueError):
    pass
