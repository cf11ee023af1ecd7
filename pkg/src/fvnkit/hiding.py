"""Keyed all-pass filtering, key-based recovery and kurtosis tamper checks.

An FVN unit h satisfies h (*) reverse(h) = delta on its circular buffer, so
filtering with h and then with its time reverse restores the input.  The
filtered signal keeps the input's power spectrum but loses its impulsive
structure; only the matching key brings that structure back.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import KURTOSIS_THRESHOLD, running_kurtosis
from .audio import AudioBuffer
from .core import circular_convolve, overlap_add_convolve
from .errors import AlignmentError, ContractError, ParameterError
from .fvn import FvnParams, FvnUnit, generate_unit

TSP_TOLERANCE = 1e-9


def tsp_error(h: np.ndarray) -> float:
    """Max deviation of the circular h (*) reverse(h) from a unit impulse."""
    h = np.asarray(h, dtype=np.float64)
    rev = np.roll(h[::-1], 1)
    c = circular_convolve(h, rev, h.size)
    c[0] -= 1.0
    return float(np.max(np.abs(c)))


@dataclass(frozen=True)
class HidingKey:
    unit: FvnUnit
    key_id: str = ""

    def __post_init__(self):
        err = tsp_error(self.unit.impulse_response)
        if err > TSP_TOLERANCE:
            raise ContractError(f"key response fails the TSP identity (error {err:.3g})")

    @property
    def length(self) -> int:
        return self.unit.fft_length

    @property
    def latency(self) -> int:
        """Delay (samples) of the filtered signal: the key's centre index."""
        return self.unit.rotation

    @property
    def causal_response(self) -> np.ndarray:
        return self.unit.centered()

    @classmethod
    def generate(cls, params: FvnParams, key_id: str | None = None) -> "HidingKey":
        if params.seed is None:
            raise ParameterError("a hiding key needs an explicit seed")
        return cls(generate_unit(params), key_id or f"seed-{params.seed}")


def depuzz_params(seed: int, sample_rate: float = 44100.0) -> FvnParams:
    """Short key for post-processing: B = 900 Hz, F_d = B/3, measured duration about 1 ms."""
    return FvnParams(b_hz=900.0, fd_hz=300.0, sample_rate=sample_rate, seed=seed)


def _check_rate(x: AudioBuffer, key: HidingKey) -> None:
    if x.sample_rate != key.unit.sample_rate:
        raise ParameterError(
            f"signal rate {x.sample_rate} Hz differs from key rate {key.unit.sample_rate} Hz")


def apply_allpass(x: AudioBuffer, key: HidingKey) -> AudioBuffer:
    """Full linear convolution with the key; output has len(x) + K - 1 samples.

    The key's time zero sits at index ``key.latency`` of its causal response,
    so input sample n maps to output sample n + latency.
    """
    if len(x) == 0:
        raise ParameterError("cannot filter an empty signal")
    _check_rate(x, key)
    return AudioBuffer(overlap_add_convolve(x.samples, key.causal_response), x.sample_rate)


def recover(y: AudioBuffer, key: HidingKey) -> AudioBuffer:
    """Undo :func:`apply_allpass`: convolve with the reversed key and drop the padding.

    Raises
    ------
    AlignmentError
        If ``y`` is shorter than the key, so it cannot be a filtered signal.
    """
    K = key.length
    if len(y) < K:
        raise AlignmentError(f"signal of {len(y)} samples is shorter than the key ({K})")
    _check_rate(y, key)
    z = overlap_add_convolve(y.samples, key.causal_response[::-1])
    # forward and reverse responses together delay by K - 1 samples
    return AudioBuffer(z[K - 1:K - 1 + len(y) - K + 1], y.sample_rate)


@dataclass(frozen=True)
class KurtosisConfig:
    threshold: float = KURTOSIS_THRESHOLD
    decision_level: float = 0.005
    window_s: float = 0.025
    hop_s: float = 0.005


@dataclass(frozen=True)
class TamperReport:
    exceedance_fraction: float
    verdict: str

    def to_record(self) -> str:
        return f"verdict={self.verdict} exceedance={self.exceedance_fraction!r}"


def exceedance(x: AudioBuffer, config: KurtosisConfig = KurtosisConfig()) -> float:
    track = running_kurtosis(x, window_s=config.window_s, hop_s=config.hop_s)
    return track.exceedance_fraction(config.threshold)


def detect_tamper(x: AudioBuffer, key: HidingKey,
                  config: KurtosisConfig = KurtosisConfig()) -> TamperReport:
    """Recover with ``key`` and judge the kurtosis exceedance.

    The verdict is ``intact`` when the fraction of frames above the kurtosis
    threshold reaches the decision level, ``suspect`` otherwise.
    """
    frac = exceedance(recover(x, key), config)
    return TamperReport(frac, "intact" if frac >= config.decision_level else "suspect")
