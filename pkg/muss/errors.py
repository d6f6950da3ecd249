"""Exception hierarchy shared by the toolkit."""

from pathlib import Path
from typing import Optional


class MussError(ValueError):
    """Base class for all toolkit errors."""


class DimensionMismatchError(MussError):
    """Two embeddings (or an embedding and a dataset) disagree on dimension."""

    def __init__(self, expected: int, actual: int):
        super().__init__(f"Dimension mismatch: expected {expected}, got {actual}")
        self.expected = expected
        self.actual = actual


class InvalidSelectionError(MussError):
    """Bad ids, duplicate ids, empty pools or zero-size selections."""


class PreconditionError(MussError):
    """A technical assumption required by a bound or lemma check does not hold."""

    def __init__(self, assumption: str, detail: Optional[str] = None):
        message = f"Precondition violated: {assumption}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)
        self.assumption = assumption


class EnumerationCapError(MussError):
    """Exhaustive enumeration would exceed the configured subset cap."""

    def __init__(self, subsets: int, cap: int):
        super().__init__(
            f"Exhaustive search needs {subsets} subsets, cap is {cap}; shrink the instance "
            "(fewer items or smaller k) or raise the cap"
        )
        self.subsets = subsets
        self.cap = cap


class DatasetFormatError(MussError):
    """A dataset file could not be parsed."""

    def __init__(self, message: str, path: Optional[Path] = None, line: Optional[int] = None):
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location = f"{location}:{line}"
            location = f"{location}: "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line = line
