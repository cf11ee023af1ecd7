"""IFVN excitation: pitch-synchronous trains of FVN units.

Frozen trains repeat one unit, random trains draw a fresh unit per epoch, and
morphed trains interpolate the two phases.  Also holds the periodic-to-random
calibration, vibrato f0 trajectories and burst placement on an external carrier.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .audio import AudioBuffer
from .errors import CalibrationError, ParameterError
from .fvn import FvnParams, FvnUnit, PhaseSpec, design_phase, synthesize_unit

MEASUREMENT_FLOOR_DB = 120.0
SNAP_TOLERANCE = 1e-6  # samples


@dataclass(frozen=True)
class F0Trajectory:
    """log2 f0(t) = log2 f_base + (d_cent / 1200) sin(2 pi f_vib t)."""

    f_base: float
    duration: float
    sample_rate: float = 44100.0
    f_vib: float = 0.0
    d_cent: float = 0.0

    def __post_init__(self):
        if not self.f_base > 0:
            raise ParameterError(f"f_base must be positive, got {self.f_base}")
        if not self.d_cent >= 0:
            raise ParameterError(f"vibrato depth must be non-negative, got {self.d_cent}")
        if not self.duration > 0 or not self.sample_rate > 0:
            raise ParameterError("duration and sample_rate must be positive")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sample_rate))

    @property
    def peak_f0(self) -> float:
        return self.f_base * 2.0 ** (self.d_cent / 1200.0)


def f0_with_vibrato(traj: F0Trajectory) -> np.ndarray:
    """Instantaneous f0 (Hz) at every sample of the trajectory."""
    t = np.arange(traj.n_samples) / traj.sample_rate
    return traj.f_base * 2.0 ** (traj.d_cent / 1200.0 * np.sin(2 * np.pi * traj.f_vib * t))


def pitch_epochs(traj: F0Trajectory) -> np.ndarray:
    """Fractional sample positions where the cumulative f0 phase crosses an integer.

    The phase at sample n is sum(f0[:n]) / f_s, so the first epoch is at 0.
    """
    f0 = f0_with_vibrato(traj)
    if f0.max() > traj.sample_rate / 2:
        raise ParameterError(
            f"f0 up to {f0.max():.1f} Hz gives epoch spacing below 2 samples")
    psi = np.concatenate([[0.0], np.cumsum(f0 / traj.sample_rate)])[:f0.size]
    targets = np.arange(0, math.floor(psi[-1]) + 1)
    return np.interp(targets, psi, np.arange(psi.size, dtype=np.float64))


def fractional_shift(h: np.ndarray, delay: float) -> np.ndarray:
    """Circularly delay ``h`` by ``delay`` samples with a linear phase on bins below Nyquist."""
    n = h.size
    spec = np.fft.rfft(h)
    k = np.arange(spec.size)
    ramp = np.exp(-2j * np.pi * k * delay / n)
    if n % 2 == 0:
        ramp[-1] = 1.0
    return np.fft.irfft(spec * ramp, n)


def add_unit(out: np.ndarray, h: np.ndarray, position: float, gain: float = 1.0) -> None:
    """Overlap-add circular response ``h`` (time zero at index 0) with time zero at ``position``."""
    n = h.size
    nearest = round(position)
    # cumulative-phase epochs land within rounding of integers; keep those exact
    if abs(position - nearest) < SNAP_TOLERANCE:
        position = float(nearest)
    i = int(math.floor(position))
    frac = position - i
    g = fractional_shift(h, frac) if frac else h
    g = np.roll(g, n // 2)
    start = i - n // 2
    lo, hi = max(start, 0), min(start + n, out.size)
    if lo < hi:
        out[lo:hi] += gain * g[lo - start:hi - start]


def frozen_ifvn(unit_phase: PhaseSpec, f0: F0Trajectory, length: float | None = None) -> AudioBuffer:
    """Repeat one FVN unit at every pitch epoch."""
    h = synthesize_unit(unit_phase).impulse_response
    out = np.zeros(_length_samples(f0, length))
    for pos in pitch_epochs(f0):
        add_unit(out, h, pos)
    return AudioBuffer(out, f0.sample_rate)


def epoch_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for one epoch, derived from (master seed, epoch index)."""
    return np.random.default_rng([int(seed), int(index)])


def random_ifvn(params: FvnParams, f0: F0Trajectory, length: float | None = None) -> AudioBuffer:
    """Place a freshly drawn FVN unit at every pitch epoch; ``params.seed`` is the master seed."""
    seed = _master_seed(params)
    out = np.zeros(_length_samples(f0, length))
    for idx, pos in enumerate(pitch_epochs(f0)):
        add_unit(out, synthesize_unit(design_phase(params, epoch_rng(seed, idx))).impulse_response, pos)
    return AudioBuffer(out, f0.sample_rate)


def morph_unit(theta_frozen: PhaseSpec, theta_random: PhaseSpec, r: float) -> PhaseSpec:
    """Bin-wise r * theta_random + (1 - r) * theta_frozen; endpoints return the inputs."""
    if theta_frozen.fft_length != theta_random.fft_length:
        raise ParameterError("morphed phases must share the DFT length")
    if theta_frozen.sample_rate != theta_random.sample_rate:
        raise ParameterError("morphed phases must share the sample rate")
    if not 0.0 <= r <= 1.0:
        raise ParameterError(f"morph ratio must lie in [0, 1], got {r}")
    if r == 0.0:
        return theta_frozen
    if r == 1.0:
        return theta_random
    return PhaseSpec(r * theta_random.phase + (1.0 - r) * theta_frozen.phase,
                     theta_frozen.sample_rate)


@dataclass(frozen=True)
class MorphSchedule:
    """Morph ratio over time: a constant ``r`` or breakpoints of r or eta (dB).

    Breakpoints are linearly interpolated and held beyond their ends.
    ``kind="eta_db"`` needs a :class:`PRCalibration` to map eta to r.
    """

    times: tuple[float, ...] = (0.0,)
    values: tuple[float, ...] = (1.0,)
    kind: str = "r"

    def __post_init__(self):
        t = tuple(float(v) for v in self.times)
        v = tuple(float(x) for x in self.values)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if len(t) != len(v) or not t:
            raise ParameterError("schedule needs matching, non-empty times and values")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ParameterError("schedule times must be strictly increasing")
        if self.kind not in ("r", "eta_db"):
            raise ParameterError(f"schedule kind must be 'r' or 'eta_db', got {self.kind!r}")
        if self.kind == "r" and any(not 0.0 <= x <= 1.0 for x in v):
            raise ParameterError("morph ratios must lie in [0, 1]")

    @classmethod
    def constant(cls, r: float) -> "MorphSchedule":
        return cls((0.0,), (r,), "r")

    @classmethod
    def from_text(cls, text: str, kind: str = "eta_db") -> "MorphSchedule":
        """Parse ``time_s value`` lines; blank lines and ``#`` comments are skipped."""
        times, values = [], []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParameterError(f"line {lineno}: expected 'time_s value', got {line!r}")
            try:
                times.append(float(parts[0]))
                values.append(float(parts[1]))
            except ValueError as exc:
                raise ParameterError(f"line {lineno}: {exc}") from None
        return cls(tuple(times), tuple(values), kind)

    def ratio_at(self, t, calibration: "PRCalibration | None" = None):
        v = np.interp(t, self.times, self.values)
        if self.kind == "r":
            return v
        if calibration is None:
            raise ParameterError("an eta schedule needs a calibration to map eta to r")
        return calibration.r_for_eta(v)


def morphed_ifvn(frozen_phase: PhaseSpec, params: FvnParams, f0: F0Trajectory,
                 schedule: MorphSchedule, length: float | None = None,
                 calibration: "PRCalibration | None" = None) -> AudioBuffer:
    """One morphed unit per epoch, with r evaluated at the epoch time."""
    seed = _master_seed(params)
    if frozen_phase.fft_length != params.fft_length:
        raise ParameterError("frozen phase and params disagree on the DFT length")
    out = np.zeros(_length_samples(f0, length))
    epochs = pitch_epochs(f0)
    ratios = np.atleast_1d(schedule.ratio_at(epochs / f0.sample_rate, calibration))
    for idx, (pos, r) in enumerate(zip(epochs, ratios)):
        theta = frozen_phase
        if r > 0:
            theta = morph_unit(frozen_phase, design_phase(params, epoch_rng(seed, idx)), float(r))
        add_unit(out, synthesize_unit(theta).impulse_response, pos)
    return AudioBuffer(out, f0.sample_rate)


@dataclass(frozen=True)
class PRCalibration:
    """Measured periodic-to-random ratio G (dB) on a grid of morph ratios."""

    r_grid: np.ndarray
    g_db: np.ndarray
    n_seeds: int
    periodic_power: np.ndarray = field(repr=False)
    random_power: np.ndarray = field(repr=False)

    @property
    def r_db(self) -> np.ndarray:
        """20 log10(r) for each grid point (-inf at r = 0)."""
        with np.errstate(divide="ignore"):
            return 20.0 * np.log10(self.r_grid)

    def _inverse(self) -> PchipInterpolator:
        order = np.argsort(self.g_db)
        return PchipInterpolator(self.g_db[order], self.r_grid[order], extrapolate=False)

    def r_for_eta(self, eta_db):
        """Morph ratio realising periodic-to-random ratio ``eta_db``, clamped to the grid."""
        eta = np.clip(np.asarray(eta_db, dtype=np.float64), self.g_db.min(), self.g_db.max())
        r = np.clip(self._inverse()(eta), 0.0, 1.0)
        return float(r) if np.ndim(eta_db) == 0 else r


def periodic_random_powers(signals: np.ndarray) -> tuple[float, float]:
    """Split an (n_seeds, n) stack into across-seed mean and residual powers.

    The random power is the per-sample unbiased variance averaged over time.
    The periodic power is the mean-square of the across-seed mean, less the
    variance the finite seed count leaks into it.
    """
    x = np.asarray(signals, dtype=np.float64)
    n = x.shape[0]
    if n < 2:
        raise ParameterError("need at least two realisations")
    mean = x.mean(axis=0)
    random_power = float(np.mean(np.sum((x - mean) ** 2, axis=0) / (n - 1)))
    periodic_power = float(np.mean(mean * mean)) - random_power / n
    return periodic_power, random_power


def _ratio_db(periodic: float, random: float) -> float:
    total = max(periodic, 0.0) + random
    floor = total * 10.0 ** (-MEASUREMENT_FLOOR_DB / 10.0)
    return float(10.0 * np.log10(max(periodic, floor) / max(random, floor)))


def measure_pr_ratio(frozen_phase: PhaseSpec, params: FvnParams, f0: F0Trajectory, r: float,
                     seeds, length: float | None = None) -> float:
    """Periodic-to-random ratio (dB) of morphed IFVN at constant ``r`` over ``seeds``."""
    stack = np.stack([
        morphed_ifvn(frozen_phase, params.with_seed(int(s)), f0, MorphSchedule.constant(r),
                     length).samples
        for s in seeds])
    return _ratio_db(*periodic_random_powers(stack))


def calibrate_pr_ratio(params: FvnParams, f0: F0Trajectory, r_grid=None, n_seeds: int = 50,
                       frozen_phase: PhaseSpec | None = None,
                       length: float | None = None) -> PRCalibration:
    """Tabulate G(r) for morphed IFVN and return it with a monotone inverse.

    The frozen reference is drawn from ``params.seed`` unless given; seeds
    ``params.seed + 1 .. params.seed + n_seeds`` drive the random phases and
    are shared by every grid point, so G is compared on the same draws.

    Raises
    ------
    CalibrationError
        If G is not strictly decreasing over the grid.
    """
    seed = _master_seed(params)
    r_grid = np.linspace(0.0, 1.0, 11) if r_grid is None else np.asarray(r_grid, dtype=np.float64)
    if r_grid.size < 9:
        raise ParameterError(f"calibration grid needs at least 9 points, got {r_grid.size}")
    if np.any(r_grid < 0) or np.any(r_grid > 1) or np.any(np.diff(r_grid) <= 0):
        raise ParameterError("calibration grid must be increasing within [0, 1]")
    if n_seeds < 50:
        raise ParameterError(f"calibration needs at least 50 seeds, got {n_seeds}")
    if frozen_phase is None:
        frozen_phase = design_phase(params)
    n_out = _length_samples(f0, length)
    epochs = pitch_epochs(f0)
    # random phases are reused across the grid; draw them once
    draws = [[design_phase(params, epoch_rng(seed + 1 + s, idx)) for idx in range(epochs.size)]
             for s in range(n_seeds)]
    periodic, random = [], []
    for r in r_grid:
        stack = np.zeros((n_seeds, n_out))
        for s, phases in enumerate(draws):
            for pos, theta in zip(epochs, phases):
                h = synthesize_unit(morph_unit(frozen_phase, theta, float(r))).impulse_response
                add_unit(stack[s], h, pos)
        p, q = periodic_random_powers(stack)
        periodic.append(p)
        random.append(q)
    g = np.array([_ratio_db(p, q) for p, q in zip(periodic, random)])
    if np.any(np.diff(g) >= 0):
        raise CalibrationError(
            f"measured ratio is not strictly decreasing in r with {n_seeds} seeds",
            {"r_grid": r_grid.tolist(), "g_db": g.tolist()})
    return PRCalibration(r_grid, g, n_seeds, np.array(periodic), np.array(random))


def place_bursts(carrier: AudioBuffer, f0: F0Trajectory, burst: FvnUnit,
                 phase_in_period: float = 0.0, gain: float = 1.0) -> AudioBuffer:
    """Add ``gain`` times the burst once per pitch period at ``phase_in_period`` of it."""
    if len(carrier) == 0:
        raise ParameterError("carrier is empty")
    if not 0.0 <= phase_in_period <= 1.0:
        raise ParameterError(f"phase_in_period must lie in [0, 1], got {phase_in_period}")
    if carrier.sample_rate != f0.sample_rate:
        raise ParameterError("carrier and f0 trajectory sample rates differ")
    if burst.duration >= 1.0 / float(f0_with_vibrato(f0).max()):
        warnings.warn("burst duration is not shorter than one pitch period", stacklevel=2)
    out = np.array(carrier.samples, dtype=np.float64)
    if gain == 0:
        return AudioBuffer(out, carrier.sample_rate)
    epochs = pitch_epochs(f0)
    f0_samples = f0_with_vibrato(f0)
    for k, pos in enumerate(epochs):
        if k + 1 < epochs.size:
            period = epochs[k + 1] - pos
        else:
            period = f0.sample_rate / f0_samples[min(int(pos), f0_samples.size - 1)]
        add_unit(out, burst.impulse_response, pos + phase_in_period * period, gain)
    return AudioBuffer(out, carrier.sample_rate)


def _length_samples(f0: F0Trajectory, length: float | None) -> int:
    if length is None:
        return f0.n_samples
    if not length > 0:
        raise ParameterError(f"length must be positive, got {length}")
    return int(round(length * f0.sample_rate))


def _master_seed(params: FvnParams) -> int:
    if params.seed is None:
        raise ParameterError("random excitation needs an explicit master seed")
    return int(params.seed)
