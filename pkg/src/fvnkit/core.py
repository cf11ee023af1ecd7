"""Cosine-series phase window, single-centre all-pass diagnostic and FFT plumbing.

The phase of every all-pass filter in this package is built from one smooth,
compactly supported bump::

    w_p(k, B) = sum_m a[m] * cos(pi * k * m / B)   for |k| <= B, else 0

evaluated at (possibly fractional) bin offsets ``k``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.fft import irfft, next_fast_len, rfft
from scipy.signal import find_peaks

from .errors import ParameterError

SIX_TERM_COEFFICIENTS = (
    0.2624710164,
    0.4265335164,
    0.2250165621,
    0.0726831633,
    0.0125124215,
    0.0007833203,
)


@dataclass(frozen=True)
class CosineSeries:
    """Coefficients a[0..M] of a symmetric cosine-series window."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        coefs = tuple(float(a) for a in self.coefficients)
        if not coefs:
            raise ParameterError("a cosine series needs at least one coefficient")
        object.__setattr__(self, "coefficients", coefs)

    @classmethod
    def six_term(cls) -> "CosineSeries":
        return cls(SIX_TERM_COEFFICIENTS)

    @classmethod
    def hann(cls) -> "CosineSeries":
        return cls((0.5, 0.5))

    @classmethod
    def rectangular(cls) -> "CosineSeries":
        return cls((1.0,))

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def center_value(self) -> float:
        """Window value at k=0, i.e. the plain coefficient sum."""
        return float(sum(self.coefficients))

    def edge_value(self) -> float:
        """Window value at k=+-B, i.e. the alternating coefficient sum."""
        return float(sum((-1) ** m * a for m, a in enumerate(self.coefficients)))


SIX_TERM = CosineSeries.six_term()


def _cosine_sum(x: np.ndarray, coefs: tuple[float, ...]) -> np.ndarray:
    # Chebyshev recurrence: cos(m x) = 2 cos(x) cos((m-1) x) - cos((m-2) x)
    c1 = np.cos(x)
    out = np.full_like(x, coefs[0])
    if len(coefs) == 1:
        return out
    prev, cur = np.ones_like(x), c1
    out += coefs[1] * cur
    for a in coefs[2:]:
        prev, cur = cur, 2.0 * c1 * cur - prev
        out += a * cur
    return out


def phase_window(k, B: float, series: CosineSeries = SIX_TERM):
    """Evaluate the phase-manipulation window at bin offsets ``k``.

    Parameters
    ----------
    k : float or array_like
        Bin offset(s) from the window centre; fractional values are allowed.
    B : float
        Support half-width in bins.  The window is exactly zero for |k| > B.
    series : CosineSeries
        Coefficient set, six-term series by default.

    Returns
    -------
    float or ndarray
        Same shape as ``k``.
    """
    if not B > 0:
        raise ParameterError(f"support half-width B must be positive, got {B}")
    k_arr = np.asarray(k, dtype=np.float64)
    inside = np.abs(k_arr) <= B
    out = np.zeros_like(k_arr)
    out[inside] = _cosine_sum(np.pi * k_arr[inside] / B, series.coefficients)
    if np.ndim(k) == 0:
        return float(out)
    return out


def circular_offset(k: np.ndarray, center: float, K: int) -> np.ndarray:
    """Signed distance from ``center`` to bins ``k`` on a K-bin circle, in [-K/2, K/2)."""
    return np.mod(np.asarray(k, dtype=np.float64) - center + K / 2, K) - K / 2


def unit_allpass_response(k_c: float, B: float, K: int, phi_scale: float,
                          series: CosineSeries = SIX_TERM) -> np.ndarray:
    """Complex impulse response of an all-pass filter with one phase bump.

    The phase is ``phi_scale * w_p(k - k_c, B)`` on the circular K-bin axis;
    the response is its K-point inverse DFT (index 0 is time zero).
    """
    if K <= 0:
        raise ParameterError(f"DFT length must be positive, got {K}")
    if not 0 <= k_c < K:
        raise ParameterError(f"centre bin {k_c} outside [0, {K})")
    if B < 1:
        raise ParameterError(f"support must be at least one bin, got {B}")
    offsets = circular_offset(np.arange(K), k_c, K)
    phase = phi_scale * phase_window(offsets, B, series)
    return np.fft.ifft(np.exp(1j * phase))


class SidelobeMetrics(NamedTuple):
    peak_sidelobe_db: float
    decay_rate_db_per_octave: float
    first_null: float


def sidelobe_metrics(series: CosineSeries = SIX_TERM, oversampling: int = 32,
                     n_samples: int = 1024, octaves: float = 3.0) -> SidelobeMetrics:
    """Peak sidelobe level and sidelobe decay rate of a cosine-series window.

    The window is sampled with ``n_samples`` intervals over its support and
    zero padded ``oversampling`` times.  Frequencies are expressed in cycles
    per support half-width, so the first null of an (M+1)-term series sits at
    M/2 (rectangle: 0.5, Hann: 1, six-term: 3).

    The decay rate is the slope of a straight-line fit of sidelobe peak levels
    (dB) against log2 frequency, over ``octaves`` octaves starting at the first
    null.  Far sidelobes of the six-term series reach the float64 floor
    (about -300 dB) a few octaves later, so the fit window starts at the main
    lobe rather than at Nyquist.
    """
    if oversampling < 16:
        raise ParameterError(f"oversampling must be >= 16, got {oversampling}")
    if n_samples < 16:
        raise ParameterError(f"n_samples must be >= 16, got {n_samples}")
    x = np.linspace(-1.0, 1.0, n_samples + 1)
    w = _cosine_sum(np.pi * x, series.coefficients)
    n_fft = (n_samples + 1) * oversampling
    spectrum = np.abs(np.fft.rfft(w, n_fft))
    level = 20.0 * np.log10(spectrum / spectrum[0] + 1e-320)
    nu = np.arange(spectrum.size) * n_samples / (2.0 * n_fft)

    rising = np.flatnonzero(np.diff(level) > 0)
    if rising.size == 0:
        raise ParameterError("window transform has no sidelobes at this resolution")
    null = rising[0]
    peaks, _ = find_peaks(level)
    peaks = peaks[peaks > null]
    peak_db = float(level[peaks].max())

    fit = peaks[nu[peaks] <= nu[null] * 2.0 ** octaves]
    slope = np.polyfit(np.log2(nu[fit]), level[fit], 1)[0]
    return SidelobeMetrics(peak_db, float(slope), float(nu[null]))


def circular_convolve(x, h, length: int | None = None) -> np.ndarray:
    """FFT convolution of two real sequences.

    With ``length=None`` the result is the full linear convolution
    (``len(x) + len(h) - 1`` samples) computed on a zero-padded grid.  With an
    explicit ``length`` both inputs are zero padded to it and the circular
    convolution of that period is returned.
    """
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if x.size == 0 or h.size == 0:
        raise ParameterError("convolution inputs must be non-empty")
    if length is None:
        n_out = x.size + h.size - 1
        n_fft = next_fast_len(n_out, real=True)
        return irfft(rfft(x, n_fft) * rfft(h, n_fft), n_fft)[:n_out]
    if length < max(x.size, h.size):
        raise ParameterError(f"circular length {length} shorter than inputs")
    return irfft(rfft(x, length) * rfft(h, length), length)


def overlap_add_convolve(x, h, block_size: int | None = None) -> np.ndarray:
    """Linear convolution of a long signal with a fixed filter by overlap-add.

    ``block_size`` defaults to eight times the filter length, the smallest
    block this package uses for keyed filtering.
    """
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if x.size == 0 or h.size == 0:
        raise ParameterError("convolution inputs must be non-empty")
    if block_size is None:
        block_size = 8 * h.size
    if block_size < 1:
        raise ParameterError(f"block_size must be positive, got {block_size}")
    n_out = x.size + h.size - 1
    if x.size <= block_size:
        return circular_convolve(x, h)
    n_fft = next_fast_len(block_size + h.size - 1, real=True)
    H = rfft(h, n_fft)
    out = np.zeros(n_out + n_fft)
    for start in range(0, x.size, block_size):
        seg = x[start:start + block_size]
        out[start:start + n_fft] += irfft(rfft(seg, n_fft) * H, n_fft)
    return out[:n_out]
