"""Frequency-domain velvet noise: all-pass phase design, excitation and keyed filtering."""
from __future__ import annotations

__version__ = "0.1.0"

from .audio import AudioBuffer
from .core import SIX_TERM, CosineSeries, phase_window, sidelobe_metrics
from .errors import (AlignmentError, CalibrationError, ContractError, DegenerateError,
                     FvnError, ParameterError, WavFormatError)
from .fvn import FvnParams, FvnUnit, PhaseSpec, design_phase, generate_unit, synthesize_unit
from .velvet import generate_ovn

__all__ = [
    "AlignmentError", "AudioBuffer", "CalibrationError", "ContractError", "CosineSeries",
    "DegenerateError", "FvnError", "FvnParams", "FvnUnit", "ParameterError", "PhaseSpec",
    "SIX_TERM", "WavFormatError", "__version__", "design_phase", "generate_ovn",
    "generate_unit", "phase_window", "sidelobe_metrics", "synthesize_unit",
]
