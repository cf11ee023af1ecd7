"""Measurements: duration, ERL, group delay, centroid identity, running kurtosis,
spectrograms and level distributions.

Functions take plain arrays plus a sample rate, or an :class:`AudioBuffer`.
Nothing here depends on how a signal was generated.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import signal, stats

from .audio import AudioBuffer
from .errors import DegenerateError, ParameterError

KURTOSIS_THRESHOLD = 10.0


def _as_array(x, sample_rate=None):
    if isinstance(x, AudioBuffer):
        return x.samples, x.sample_rate
    if sample_rate is None:
        raise ParameterError("sample_rate is required for plain arrays")
    return np.asarray(x, dtype=np.float64), float(sample_rate)


def duration(x, sample_rate: float | None = None, origin="centroid", t0: float = 0.0) -> float:
    """Second-moment duration sigma_t (s) of a waveform.

    Parameters
    ----------
    x : array_like or AudioBuffer
    origin : "centroid" or float
        Time origin of the moment: the energy centroid, or an explicit time (s).
    t0 : float
        Time of sample 0 (s).  Circularly centred responses pass ``-K/2/fs``.
    """
    samples, fs = _as_array(x, sample_rate)
    power = samples * samples
    total = power.sum()
    if not total > 0:
        raise DegenerateError("duration of a zero-energy signal is undefined")
    t = t0 + np.arange(samples.size) / fs
    center = float(np.dot(t, power) / total) if origin == "centroid" else float(origin)
    return float(np.sqrt(np.dot((t - center) ** 2, power) / total))


def erl(sigma_t: float) -> float:
    """Effective rectangular length: sigma_t over the duration of a unit rectangle."""
    if sigma_t < 0:
        raise ParameterError(f"duration must be non-negative, got {sigma_t}")
    return sigma_t / np.sqrt(1.0 / 12.0)


class GroupDelayCurve(NamedTuple):
    frequencies: np.ndarray
    tau_g: np.ndarray


def group_delay(phase) -> GroupDelayCurve:
    """Group delay (s) of a phase spec by central differences, on (0, f_s/2).

    ``phase`` needs ``.phase`` (K bins) and ``.sample_rate``; the half
    spectrum is unwrapped before differencing.
    """
    ph = np.unwrap(np.asarray(phase.phase)[: phase.phase.size // 2 + 1])
    K = phase.phase.size
    d_omega = 2 * np.pi * phase.sample_rate / K
    tau = -(ph[2:] - ph[:-2]) / (2 * d_omega)
    freqs = np.arange(1, K // 2) * phase.sample_rate / K
    return GroupDelayCurve(freqs, tau)


def spectral_group_delay(x, sample_rate: float | None = None, n_fft: int | None = None,
                         t0: float = 0.0):
    """Exact DFT group delay of a finite signal.

    Uses tau = Re(Y X*) / |X|^2 with Y the transform of t * x(t), which is the
    analytic derivative of the DTFT phase, so no unwrapping is involved.

    Returns
    -------
    freqs, tau_g, power : ndarray
        ``tau_g`` is NaN where the spectrum vanishes.
    """
    samples, fs = _as_array(x, sample_rate)
    n_fft = n_fft or samples.size
    t = t0 + np.arange(samples.size) / fs
    X = np.fft.rfft(samples, n_fft)
    Y = np.fft.rfft(t * samples, n_fft)
    power = np.abs(X) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        tau = np.where(power > 0, (Y * np.conj(X)).real / power, np.nan)
    return np.fft.rfftfreq(n_fft, 1 / fs), tau, power


def centroid_identity_check(x, sample_rate: float | None = None, t0: float = 0.0):
    """Power-weighted mean time versus power-spectrum-weighted mean group delay.

    Returns ``(lhs, rhs)`` in seconds; for a discrete signal with the DFT long
    enough to hold it the two agree to rounding.
    """
    samples, fs = _as_array(x, sample_rate)
    power = samples * samples
    if not power.sum() > 0:
        raise DegenerateError("centroid of a zero-energy signal is undefined")
    t = t0 + np.arange(samples.size) / fs
    lhs = float(np.dot(t, power) / power.sum())
    _, tau, spec = spectral_group_delay(samples, fs, t0=t0)
    # one-sided spectrum: interior bins stand for two
    weights = spec.copy()
    n = samples.size
    weights[1:(n + 1) // 2] *= 2.0
    ok = spec > 0
    rhs = float(np.dot(tau[ok], weights[ok]) / weights[ok].sum())
    return lhs, rhs


@dataclass(frozen=True)
class KurtosisTrack:
    """Running kurtosis per frame; undefined frames hold NaN."""

    times: np.ndarray
    kappa: np.ndarray

    @property
    def defined(self) -> np.ndarray:
        return np.isfinite(self.kappa)

    def exceedance_fraction(self, threshold: float = KURTOSIS_THRESHOLD) -> float:
        valid = self.kappa[self.defined]
        if valid.size == 0:
            return 0.0
        return float(np.mean(valid > threshold))


def _window(shape, n: int) -> np.ndarray:
    if callable(shape):
        return np.asarray(shape(n), dtype=np.float64)
    return signal.get_window(shape, n, fftbins=False)


def running_kurtosis(x, sample_rate: float | None = None, window="hann",
                     window_s: float = 0.025, hop_s: float = 0.005,
                     floor: float = 1e-12) -> KurtosisTrack:
    """Windowed kurtosis mu4 / mu2^2 with weights w^n / sum(w^n).

    Moments are raw (about zero), each with its own normalised power of the
    window.  A frame is left undefined (NaN) when mu2 is zero or the frame has
    no fluctuation about its mean (relative variance below ``floor``).
    """
    samples, fs = _as_array(x, sample_rate)
    n = int(round(window_s * fs))
    hop = max(1, int(round(hop_s * fs)))
    if n < 4:
        raise ParameterError(f"kurtosis window of {n} samples is shorter than 4")
    if samples.size < n:
        raise ParameterError("signal shorter than one kurtosis window")
    w = _window(window, n)
    if np.any(w < 0):
        raise ParameterError("kurtosis window must be non-negative")
    w1 = w / w.sum()
    w2 = w ** 2 / np.sum(w ** 2)
    w4 = w ** 4 / np.sum(w ** 4)
    frames = sliding_window_view(samples, n)[::hop]
    sq = frames * frames
    mu2 = sq @ w2
    mu4 = (sq * sq) @ w4
    mean = frames @ w1
    var = (frames - mean[:, None]) ** 2 @ w1
    ok = (mu2 > 0) & (var > floor * mu2)
    kappa = np.full(mu2.shape, np.nan)
    kappa[ok] = mu4[ok] / mu2[ok] ** 2
    times = (np.arange(frames.shape[0]) * hop + (n - 1) / 2) / fs
    return KurtosisTrack(times, kappa)


@dataclass(frozen=True)
class Spectrogram:
    times: np.ndarray
    frequencies: np.ndarray
    power: np.ndarray  # shape (n_freqs, n_frames)

    def to_csv(self) -> str:
        return power_table_csv(self.times, self.frequencies, self.power)


def spectrogram(x, sample_rate: float | None = None, window_s: float = 0.020,
                hop_s: float = 0.0005, window="nuttall", n_fft: int | None = None,
                pad: bool = False) -> Spectrogram:
    """One-sided short-time power spectrum.

    Power is scaled so each frame sums to the energy of the windowed frame.
    Frame times are window centres.  ``pad=True`` zero pads half a window on
    both sides so events at the signal edges get full frames.
    """
    samples, fs = _as_array(x, sample_rate)
    if not window_s > hop_s > 0:
        raise ParameterError("need window length > hop > 0")
    n = int(round(window_s * fs))
    hop = max(1, int(round(hop_s * fs)))
    offset = 0
    if pad:
        offset = n // 2
        samples = np.concatenate([np.zeros(offset), samples, np.zeros(n - offset)])
    if samples.size < n:
        raise ParameterError("signal shorter than one spectrogram window")
    n_fft = n_fft or n
    w = _window(window, n)
    frames = sliding_window_view(samples, n)[::hop] * w
    spec = np.abs(np.fft.rfft(frames, n_fft, axis=1)) ** 2 / n_fft
    spec[:, 1:(n_fft + 1) // 2] *= 2.0
    times = (np.arange(frames.shape[0]) * hop + (n - 1) / 2 - offset) / fs
    return Spectrogram(times, np.fft.rfftfreq(n_fft, 1 / fs), spec.T)


def average_spectrograms(items) -> Spectrogram:
    """Power average of spectrograms on a common grid, reduced in input order."""
    items = list(items)
    if not items:
        raise ParameterError("nothing to average")
    total = np.zeros_like(items[0].power)
    for s in items:
        total += s.power
    return Spectrogram(items[0].times, items[0].frequencies, total / len(items))


def power_table_csv(times, frequencies, power) -> str:
    """Long-format CSV (time_s, freq_hz, value) with '.' decimals."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["time_s", "freq_hz", "value"])
    for j, t in enumerate(times):
        for i, f in enumerate(frequencies):
            writer.writerow([repr(float(t)), repr(float(f)), repr(float(power[i, j]))])
    return buf.getvalue()


def columns_csv(columns: dict) -> str:
    """CSV with one header row and equal-length numeric columns."""
    names = list(columns)
    data = [np.asarray(columns[k], dtype=np.float64) for k in names]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in zip(*data):
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


class LevelDistribution(NamedTuple):
    levels: np.ndarray
    cdf: np.ndarray


def level_distribution(x, sample_rate: float | None = None) -> LevelDistribution:
    """Empirical CDF of instantaneous level, normalised to zero mean, unit variance."""
    samples = x.samples if isinstance(x, AudioBuffer) else np.asarray(x, dtype=np.float64)
    if samples.size == 0:
        raise ParameterError("level distribution of an empty signal")
    sd = samples.std()
    if not sd > 0:
        raise DegenerateError("constant signal has no level distribution")
    levels = np.sort((samples - samples.mean()) / sd)
    cdf = np.arange(1, levels.size + 1) / levels.size
    return LevelDistribution(levels, cdf)


def ks_distance_to_normal(x) -> float:
    """Kolmogorov-Smirnov distance between the normalised levels and N(0, 1)."""
    levels = level_distribution(x).levels
    return float(stats.kstest(levels, "norm").statistic)


def band_duration(h, sample_rate: float, f_lo: float, f_hi: float,
                  remove_filter_spread: bool = True) -> float:
    """Duration of a circular response restricted to the band [f_lo, f_hi].

    ``h`` has time zero at index 0 (as :attr:`FvnUnit.impulse_response`).  The
    response goes through a Hann-tapered zero-phase band filter G.  For a
    unit-magnitude response with group delay tau, the filtered second moment
    splits as sigma_G^2 + var_G(tau) (weights G^2), so subtracting the filter's
    own spread sigma_G^2 leaves the group-delay spread inside the band.
    """
    h = np.asarray(h, dtype=np.float64)
    n = h.size
    f = np.fft.rfftfreq(n, 1 / sample_rate)
    width = f_hi - f_lo
    if not width > 0:
        raise ParameterError("band must have positive width")
    gain = np.where((f >= f_lo) & (f <= f_hi),
                    np.sin(np.pi * (f - f_lo) / width) ** 2, 0.0)
    y = np.fft.irfft(np.fft.rfft(h) * gain, n)
    sigma = duration(np.roll(y, n // 2), sample_rate)
    if not remove_filter_spread:
        return sigma
    own = duration(np.roll(np.fft.irfft(gain, n), n // 2), sample_rate)
    return float(np.sqrt(max(sigma * sigma - own * own, 0.0)))
