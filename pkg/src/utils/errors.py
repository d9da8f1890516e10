"""
Exception types shared by the fine-structure library, the CLI and the explorer.
"""

from typing import Any, Optional


class FineStructureError(ValueError):
    """Base class for every domain failure raised by this package."""

    exit_code: int = 1


class ParameterDomainError(FineStructureError):
    """A parameter or configuration value is outside its valid domain."""

    exit_code = 2

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DegenerateMixingError(FineStructureError):
    """Brighter and darker branches cannot be told apart."""

    exit_code = 3


class CoverageError(FineStructureError):
    """The energy grid does not cover every emission line."""

    exit_code = 2

    def __init__(self, line: Any, lo: float, hi: float):
        self.line = line
        super().__init__(
            f"Grid [{lo:.3f}, {hi:.3f}] ueV does not cover line {line}"
        )


class RankError(FineStructureError):
    """Least-squares problem is singular or underdetermined."""

    exit_code = 3


class ModelMismatchError(FineStructureError):
    """Data are inconsistent with the fitted model family."""

    exit_code = 3


class InfeasibleError(FineStructureError):
    """No admissible real solution exists."""

    exit_code = 4

    def __init__(self, message: str, discriminant: Optional[float] = None):
        self.discriminant = discriminant
        super().__init__(message)


class InputParseError(FineStructureError):
    """Malformed input file."""

    exit_code = 2

    def __init__(self, path: str, message: str, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"Error reading {where}: {message}")


class OutputError(FineStructureError):
    """Output location cannot be written."""

    exit_code = 1

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"Error writing {path}: {message}")
