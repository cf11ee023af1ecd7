"""Frequency-domain velvet noise (FVN): all-pass phase design and unit synthesis.

Velvet-noise placement is applied on the frequency axis: one phase bump per
``F_d``-wide segment of (0, f_s/2), each scaled by a random sign times
``phi_max``.  A mirrored, sign-flipped image of every bump on the circular
axis makes the phase odd, so the inverse DFT of ``exp(j * phase)`` is real.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import duration
from .core import SIX_TERM, CosineSeries, phase_window
from .errors import ContractError, ParameterError
from .velvet import UniformSource, make_rng, velvet_positions, velvet_signs

DURATION_BANDWIDTH_PRODUCT = 0.522
AMPLITUDE_RULES = ("binary", "uniform")


def bandwidth_for_duration(sigma_t: float) -> float:
    """Smoother support B (Hz) expected to give an FVN of duration ``sigma_t`` (s)."""
    if not sigma_t > 0:
        raise ParameterError(f"duration must be positive, got {sigma_t}")
    return DURATION_BANDWIDTH_PRODUCT / sigma_t


def duration_for_bandwidth(b_hz: float) -> float:
    if not b_hz > 0:
        raise ParameterError(f"bandwidth must be positive, got {b_hz}")
    return DURATION_BANDWIDTH_PRODUCT / b_hz


def min_fft_length(b_hz: float, sample_rate: float, factor: float = 10.0) -> int:
    """Smallest even buffer holding ``factor`` times the nominal duration."""
    n = math.ceil(factor * duration_for_bandwidth(b_hz) * sample_rate)
    return n + (n % 2)


def default_fft_length(b_hz: float, sample_rate: float) -> int:
    """Power of two with generous room (40x nominal duration, at least 1024)."""
    need = min_fft_length(b_hz, sample_rate, factor=40.0)
    return max(1024, 1 << (need - 1).bit_length())


@dataclass(frozen=True)
class FvnParams:
    """Generation parameters of one FVN unit.

    ``amplitude`` selects how the second uniform stream scales each bump:
    ``"binary"`` uses (2||r2|| - 1) * phi_max, i.e. +-phi_max; ``"uniform"``
    uses (2 r2 - 1) * phi_max.
    """

    b_hz: float = 200.0
    fd_hz: float = 40.0
    phi_max: float = math.pi / 2
    sample_rate: float = 44100.0
    fft_length: int | None = None
    seed: int | None = None
    amplitude: str = "binary"
    series: CosineSeries = field(default=SIX_TERM, repr=False)

    def __post_init__(self):
        if self.fft_length is None:
            object.__setattr__(self, "fft_length",
                               default_fft_length(self.b_hz, self.sample_rate))
        self.validate()

    def validate(self) -> None:
        nyquist = self.sample_rate / 2
        if not self.sample_rate > 0:
            raise ParameterError(f"sample_rate must be positive, got {self.sample_rate}")
        if not 0 < self.b_hz < nyquist:
            raise ParameterError(f"B must lie in (0, {nyquist}) Hz, got {self.b_hz}")
        if not 1.0 <= self.fd_hz <= self.b_hz:
            raise ParameterError(f"F_d must lie in [1, B={self.b_hz}] Hz, got {self.fd_hz}")
        if not self.phi_max > 0:
            raise ParameterError(f"phi_max must be positive, got {self.phi_max}")
        if self.amplitude not in AMPLITUDE_RULES:
            raise ParameterError(f"amplitude must be one of {AMPLITUDE_RULES}")
        K = self.fft_length
        if K % 2 or K <= 0:
            raise ParameterError(f"fft_length must be positive and even, got {K}")
        need = min_fft_length(self.b_hz, self.sample_rate)
        if K < need:
            raise ParameterError(
                f"fft_length {K} below buffer rule: needs >= {need} "
                f"(10x the nominal duration of B={self.b_hz} Hz)")

    @property
    def bin_hz(self) -> float:
        return self.sample_rate / self.fft_length

    @property
    def n_segments(self) -> int:
        return int(math.floor(self.sample_rate / 2 / self.fd_hz))

    def with_seed(self, seed: int | None) -> "FvnParams":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class PhaseSpec:
    """Phase (radians) of an all-pass filter on K circular DFT bins."""

    phase: np.ndarray
    sample_rate: float

    def __post_init__(self):
        ph = np.asarray(self.phase, dtype=np.float64)
        if ph.ndim != 1 or ph.size < 2 or ph.size % 2:
            raise ParameterError(f"phase must be a 1-D array of even length, got {ph.shape}")
        object.__setattr__(self, "phase", ph)

    @property
    def fft_length(self) -> int:
        return self.phase.size

    @property
    def half(self) -> np.ndarray:
        """Bins 0..K/2 (0 Hz to Nyquist)."""
        return self.phase[: self.fft_length // 2 + 1]

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.fft_length // 2 + 1) * self.sample_rate / self.fft_length

    def symmetry_error(self) -> float:
        """Max deviation from phase(K-k) = -phase(k) and phase(0) = phase(K/2) = 0."""
        ph = self.phase
        K = ph.size
        mirror = ph[1:K // 2] + ph[K - 1:K // 2:-1]
        edges = np.abs([ph[0], ph[K // 2]])
        return float(max(np.max(np.abs(mirror), initial=0.0), edges.max()))

    @classmethod
    def from_half(cls, half: np.ndarray, sample_rate: float) -> "PhaseSpec":
        """Build the full odd-symmetric phase from bins 0..K/2, zeroing both ends."""
        half = np.array(half, dtype=np.float64)
        half[0] = 0.0
        half[-1] = 0.0
        return cls(np.concatenate([half, -half[-2:0:-1]]), sample_rate)

    @classmethod
    def zero(cls, fft_length: int, sample_rate: float) -> "PhaseSpec":
        return cls(np.zeros(fft_length), sample_rate)


@dataclass(frozen=True)
class FvnUnit:
    """Real all-pass impulse response with time zero at circular index 0."""

    impulse_response: np.ndarray
    phase: PhaseSpec
    duration: float
    params: FvnParams | None = None

    @property
    def fft_length(self) -> int:
        return self.impulse_response.size

    @property
    def sample_rate(self) -> float:
        return self.phase.sample_rate

    @property
    def rotation(self) -> int:
        """Shift applied by :meth:`centered`; time zero lands on this index."""
        return self.fft_length // 2

    def centered(self) -> np.ndarray:
        """Response rotated so time zero sits at index K/2."""
        return np.roll(self.impulse_response, self.rotation)


def _draw(params: FvnParams, rng: UniformSource | None):
    source = make_rng(params.seed, rng)
    n = params.n_segments
    r1 = np.asarray(source.random(n), dtype=np.float64)
    r2 = np.asarray(source.random(n), dtype=np.float64)
    centers_hz = velvet_positions(n, params.fd_hz, r1)
    # a centre rounded onto 0 Hz cancels against its own image; keep it inside
    centers_hz = np.maximum(centers_hz, 1.0)
    if params.amplitude == "binary":
        amplitudes = velvet_signs(r2) * params.phi_max
    else:
        amplitudes = (2.0 * r2 - 1.0) * params.phi_max
    return centers_hz / params.bin_hz, amplitudes


def allocate_centers(params: FvnParams, rng: UniformSource | None = None) -> np.ndarray:
    """Bump centres in bins: ||m F_d + r1(m) (F_d - 1)|| Hz converted to bins.

    ``rng`` follows the same draw order as :func:`design_phase` (all ``r1``,
    then all ``r2``), so the centres are those of the designed phase.
    """
    return _draw(params, rng)[0]


def phase_from_centers(centers: np.ndarray, amplitudes: np.ndarray, half_width: float,
                       fft_length: int, sample_rate: float,
                       series: CosineSeries = SIX_TERM) -> PhaseSpec:
    """Sum amplitude-scaled bumps and their negated images at K - centre.

    Parameters
    ----------
    centers : array_like
        Bump centres in (fractional) bins, inside (0, K/2).
    amplitudes : array_like
        Signed peak phase of each bump (radians).
    half_width : float
        Bump support half-width B in bins.
    """
    centers = np.atleast_1d(np.asarray(centers, dtype=np.float64))
    amplitudes = np.atleast_1d(np.asarray(amplitudes, dtype=np.float64))
    K = int(fft_length)
    if centers.shape != amplitudes.shape:
        raise ParameterError("centers and amplitudes must have the same shape")
    if not 0 < half_width < K / 2:
        raise ParameterError(f"half width {half_width} bins outside (0, {K / 2})")
    if centers.size == 0:
        return PhaseSpec.zero(K, sample_rate)
    width = int(math.ceil(2 * half_width)) + 2
    span = np.arange(width)
    acc = np.zeros(K)
    for c, sign in ((centers, 1.0), (K - centers, -1.0)):
        start = np.floor(c - half_width)
        idx = start[:, None] + span[None, :]
        weights = phase_window(idx - c[:, None], half_width, series)
        weights *= sign * amplitudes[:, None]
        acc += np.bincount(np.mod(idx, K).astype(np.int64).ravel(),
                           weights=weights.ravel(), minlength=K)
    return PhaseSpec.from_half(acc[: K // 2 + 1], sample_rate)


def design_phase(params: FvnParams, rng: UniformSource | None = None) -> PhaseSpec:
    """Random FVN phase for ``params`` (deterministic for a fixed seed)."""
    centers, amplitudes = _draw(params, rng)
    return phase_from_centers(centers, amplitudes, params.b_hz / params.bin_hz,
                              params.fft_length, params.sample_rate, params.series)


def synthesize_unit(phase: PhaseSpec, params: FvnParams | None = None,
                    tol: float = 1e-10) -> FvnUnit:
    """Inverse DFT of exp(j * phase) as a real impulse response.

    Raises
    ------
    ContractError
        If the phase is not odd symmetric, or the inverse transform keeps an
        imaginary part above ``tol``.
    """
    err = phase.symmetry_error()
    if err > tol:
        raise ContractError(f"phase is not odd symmetric (max error {err:.3g})")
    h = np.fft.ifft(np.exp(1j * phase.phase))
    residue = float(np.max(np.abs(h.imag)))
    if residue > tol:
        raise ContractError(f"inverse DFT not real (imaginary residue {residue:.3g})")
    h = np.ascontiguousarray(h.real)
    K = h.size
    sigma = duration(np.roll(h, K // 2), phase.sample_rate)
    return FvnUnit(h, phase, sigma, params)


def generate_unit(params: FvnParams, rng: UniformSource | None = None) -> FvnUnit:
    """Design and synthesize one FVN unit."""
    return synthesize_unit(design_phase(params, rng), params)


def duration_samples(params: FvnParams, seeds) -> np.ndarray:
    """Measured durations (s) of units generated with each seed in ``seeds``."""
    return np.array([generate_unit(params.with_seed(int(s))).duration for s in seeds])
