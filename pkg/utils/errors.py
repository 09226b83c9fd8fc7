from typing import Optional, Tuple


class CdModelsError(Exception):
    """Base class for library errors"""


class DomainError(CdModelsError, ValueError):
    """Argument outside the domain of an operation"""


class BracketError(CdModelsError, RuntimeError):
    """Eigenvalue bracket could not be established"""

    def __init__(self, message: str, bracket: Optional[Tuple[float, float]] = None,
                 residuals: Optional[Tuple[float, float]] = None):
        super().__init__(message)
        self.bracket = bracket
        self.residuals = residuals


class PreconditionError(CdModelsError, ValueError):
    """Localization precondition violated, optionally by a specific fiber"""

    def __init__(self, message: str, fiber: Optional[int] = None):
        super().__init__(message)
        self.fiber = fiber


class DensityFormatError(CdModelsError, ValueError):
    """Malformed density or disintegration file"""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
