"""Exception types raised across fvnkit."""
from __future__ import annotations


class FvnError(Exception):
    """Base class for all library errors."""


class ParameterError(FvnError, ValueError):
    """An argument is outside its documented domain."""


class ContractError(FvnError):
    """An input violates a structural precondition (symmetry, buffer length, ...)."""


class DegenerateError(FvnError, ValueError):
    """The input carries no usable information (zero energy, zero integral)."""


class CalibrationError(FvnError):
    """Monte-Carlo calibration produced an unusable table."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class AlignmentError(FvnError):
    """Length bookkeeping between filtered and recovered signals does not match."""


class WavFormatError(FvnError, OSError):
    """A WAV file is malformed, truncated or uses an unsupported layout."""
