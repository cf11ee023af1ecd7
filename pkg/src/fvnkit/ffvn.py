"""FFVN: frequency-dependent duration by warping the frequency axis.

A constant-duration FVN phase is designed on a warped axis nu(f), whose local
slope follows the target duration profile, and read back onto the linear
frequency axis.  Where the profile asks for long durations the warped axis
runs fast, so a fixed bump width on nu becomes a narrow bump on f.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ContractError, DegenerateError, ParameterError
from .fvn import FvnParams, FvnUnit, PhaseSpec, bandwidth_for_duration, design_phase, synthesize_unit
from .velvet import UniformSource

BUFFER_RULE_FACTOR = 5.0


@dataclass(frozen=True)
class SigmoidProfile:
    """Duration rising from ``b_min`` to ``b_max`` (s) around ``f_c`` Hz."""

    f_c: float
    f_tr: float
    b_max: float
    b_min: float

    def __post_init__(self):
        if not self.f_tr > 0:
            raise ParameterError(f"transition width must be positive, got {self.f_tr}")
        if not 0 < self.b_min <= self.b_max:
            raise ParameterError("need 0 < b_min <= b_max")

    @property
    def c_floor(self) -> float:
        return self.b_min / self.b_max

    @property
    def max_duration(self) -> float:
        return self.b_max

    def __call__(self, f):
        f = np.asarray(f, dtype=np.float64)
        c = self.c_floor
        # written with exp(-|z|) branches so large |z| cannot overflow
        z = (f - self.f_c) / self.f_tr
        e = np.exp(-np.abs(z))
        logistic = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
        return ((1.0 - c) * logistic + c) * self.b_max


def smoothed_step(x, width: float):
    """Unit step convolved with the unit-area raised cosine (1 + cos(2 pi x / w)) / 2 / (w / 2).

    Its support is [-w/2, w/2]; ``width == 0`` gives the bare step.
    """
    x = np.asarray(x, dtype=np.float64)
    if width == 0:
        return (x >= 0).astype(np.float64)
    half = width / 2
    inner = (x + half) / width + np.sin(2 * np.pi * x / width) / (2 * np.pi)
    return np.where(x <= -half, 0.0, np.where(x >= half, 1.0, inner))


@dataclass(frozen=True)
class BandProfile:
    """Piecewise-constant durations smoothed across band edges.

    ``boundaries`` are f_b(0)=0 < ... < f_b(K'); the last may be ``inf`` to
    mean "up to Nyquist".  ``durations`` has one entry (s) per band.  The
    outer bands are treated as extending past 0 Hz and Nyquist, so a constant
    table stays constant after smoothing.
    """

    boundaries: tuple[float, ...]
    durations: tuple[float, ...]
    f_w: float = 0.0

    def __post_init__(self):
        b = tuple(float(v) for v in self.boundaries)
        d = tuple(float(v) for v in self.durations)
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "durations", d)
        if len(b) != len(d) + 1 or len(d) < 1:
            raise ParameterError("need one more boundary than durations")
        if b[0] != 0.0:
            raise ParameterError("first band boundary must be 0 Hz")
        if any(hi <= lo for lo, hi in zip(b, b[1:])):
            raise ParameterError("band boundaries must be strictly increasing")
        if any(not v > 0 for v in d):
            raise ParameterError("band durations must be positive")
        if self.f_w < 0:
            raise ParameterError("smoother width must be non-negative")

    @property
    def max_duration(self) -> float:
        return max(self.durations)

    def __call__(self, f):
        f = np.asarray(f, dtype=np.float64)
        out = np.full(f.shape, self.durations[0])
        for edge, lo, hi in zip(self.boundaries[1:-1], self.durations, self.durations[1:]):
            out = out + (hi - lo) * smoothed_step(f - edge, self.f_w)
        return out


DurationProfile = SigmoidProfile | BandProfile


def evaluate_profile(profile: DurationProfile, f, sample_rate: float | None = None):
    """Target duration (s) at frequency ``f`` (Hz).

    With ``sample_rate`` given, frequencies outside [0, f_s/2] are rejected.
    """
    f_arr = np.asarray(f, dtype=np.float64)
    if sample_rate is not None and (np.any(f_arr < 0) or np.any(f_arr > sample_rate / 2)):
        raise ParameterError(f"frequency outside [0, {sample_rate / 2}] Hz")
    if np.any(f_arr < 0):
        raise ParameterError("frequency must be non-negative")
    out = profile(f_arr)
    return float(out) if np.ndim(f) == 0 else out


@dataclass(frozen=True)
class WarpMap:
    grid: np.ndarray
    nu: np.ndarray
    alpha: float
    weight: np.ndarray  # g(f) = target / max target

    @property
    def slope_at_max(self) -> float:
        """d nu / d f at the grid point of largest weight."""
        return self.alpha * float(self.weight.max())


def build_warp_map(profile: DurationProfile, sample_rate: float,
                   grid_resolution: float | None = None, fft_length: int | None = None) -> WarpMap:
    """Warped axis nu(f) = alpha * integral_0^f g(u) du with nu(f_s/2) = f_s/2.

    The grid runs from 0 to f_s/2 in steps of ``grid_resolution`` Hz (half a
    DFT bin, ``f_s / (2 fft_length)``, when only ``fft_length`` is given).
    """
    nyquist = sample_rate / 2
    if grid_resolution is None:
        if fft_length is None:
            raise ParameterError("give grid_resolution or fft_length")
        grid_resolution = sample_rate / (2 * fft_length)
    if not grid_resolution > 0:
        raise ParameterError(f"grid_resolution must be positive, got {grid_resolution}")
    n = int(math.ceil(nyquist / grid_resolution))
    grid = np.linspace(0.0, nyquist, n + 1)
    target = profile(grid)
    g = target / max(profile.max_duration, float(target.max()))
    integral = cumulative_trapezoid(g, grid, initial=0.0)
    if not integral[-1] > 0:
        raise DegenerateError("duration profile integrates to zero")
    alpha = nyquist / integral[-1]
    nu = alpha * integral
    nu[-1] = nyquist
    return WarpMap(grid, nu, float(alpha), g)


def warped_design_params(profile: DurationProfile, params: FvnParams, warp: WarpMap) -> FvnParams:
    """Constant-duration FVN parameters on the warped axis.

    The bump width is the bandwidth of the longest target duration scaled by
    the warp slope there; ``F_d`` keeps the ``fd_hz / b_hz`` ratio of ``params``.
    """
    b_warped = bandwidth_for_duration(profile.max_duration) * warp.slope_at_max
    fd_warped = max(1.0, b_warped * params.fd_hz / params.b_hz)
    return replace(params, b_hz=b_warped, fd_hz=fd_warped)


def check_buffer(profile: DurationProfile, params: FvnParams) -> None:
    need = BUFFER_RULE_FACTOR * profile.max_duration * params.sample_rate
    if params.fft_length < need:
        raise ContractError(
            f"fft_length {params.fft_length} violates the buffer rule: use at least "
            f"five to ten times the maximum target duration ({need:.0f} samples)")


def warp_phase(phase_nu: PhaseSpec, warp: WarpMap) -> PhaseSpec:
    """phi_mod(f) = phi(nu(f)) by linear interpolation on the bin grid."""
    K = phase_nu.fft_length
    fs = phase_nu.sample_rate
    bins = np.arange(K // 2 + 1)
    nu_at_bins = np.interp(bins * fs / K, warp.grid, warp.nu)
    half = np.interp(nu_at_bins * K / fs, bins, phase_nu.half)
    return PhaseSpec.from_half(half, fs)


def design_ffvn_phase(profile: DurationProfile, params: FvnParams,
                      rng: UniformSource | None = None) -> PhaseSpec:
    """FFVN phase for ``profile``; ``params`` supplies K, f_s, phi_max, seed and F_d/B."""
    check_buffer(profile, params)
    warp = build_warp_map(profile, params.sample_rate, fft_length=params.fft_length)
    warped = warped_design_params(profile, params, warp)
    return warp_phase(design_phase(warped, rng), warp)


def synthesize_ffvn_unit(phase: PhaseSpec, params: FvnParams | None = None) -> FvnUnit:
    """Same contract as :func:`fvnkit.fvn.synthesize_unit`."""
    return synthesize_unit(phase, params)


def generate_ffvn_unit(profile: DurationProfile, params: FvnParams,
                       rng: UniformSource | None = None) -> FvnUnit:
    return synthesize_ffvn_unit(design_ffvn_phase(profile, params, rng), params)


REFERENCE_BANDS = ((0.0, 1000.0, 0.1e-3), (1000.0, 2000.0, 0.4e-3), (2000.0, 4000.0, 3e-3),
                (4000.0, 6000.0, 2e-3), (6000.0, math.inf, 5e-3))


def reference_band_profile(f_w: float = 400.0) -> BandProfile:
    """The five-band duration table used for HTS-style band layouts."""
    bounds = [b[0] for b in REFERENCE_BANDS] + [REFERENCE_BANDS[-1][1]]
    return BandProfile(tuple(bounds), tuple(b[2] for b in REFERENCE_BANDS), f_w)


def reference_sigmoid_profile() -> SigmoidProfile:
    """Sigmoid with 3 ms above ~2 kHz and a 0.0037 ms floor below."""
    return SigmoidProfile(f_c=2000.0, f_tr=200.0, b_max=3e-3, b_min=0.0037e-3)


def format_profile(profile: DurationProfile) -> str:
    """Text form: ``form = ...`` and ``key = value`` lines, band rows as ``band lo hi ms``."""
    if isinstance(profile, SigmoidProfile):
        return (f"form = sigmoid\nf_c = {profile.f_c!r}\nf_tr = {profile.f_tr!r}\n"
                f"b_max_ms = {profile.b_max * 1e3!r}\nb_min_ms = {profile.b_min * 1e3!r}\n")
    lines = ["form = band", f"f_w = {profile.f_w!r}"]
    b = profile.boundaries
    for lo, hi, d in zip(b, b[1:], profile.durations):
        hi_text = "nyquist" if math.isinf(hi) else repr(hi)
        lines.append(f"band {lo!r} {hi_text} {d * 1e3!r}")
    return "\n".join(lines) + "\n"


def parse_profile(text: str) -> DurationProfile:
    """Inverse of :func:`format_profile`; ``#`` starts a comment."""
    keys: dict[str, str] = {}
    bands: list[tuple[float, float, float]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if line.split()[0] == "band":
                parts = line.split()
                if len(parts) != 4:
                    raise ValueError("expected 'band <f_lo> <f_hi> <ms>'")
                hi = math.inf if parts[2].lower() == "nyquist" else float(parts[2])
                bands.append((float(parts[1]), hi, float(parts[3]) * 1e-3))
            elif "=" in line:
                k, v = (s.strip() for s in line.split("=", 1))
                keys[k] = v
            else:
                raise ValueError(f"cannot parse {line!r}")
        except ValueError as exc:
            raise ParameterError(f"profile line {lineno}: {exc}") from None
    form = keys.pop("form", None)
    try:
        if form == "sigmoid":
            return SigmoidProfile(f_c=float(keys["f_c"]), f_tr=float(keys["f_tr"]),
                                  b_max=float(keys["b_max_ms"]) * 1e-3,
                                  b_min=float(keys["b_min_ms"]) * 1e-3)
        if form == "band":
            if not bands:
                raise ParameterError("band profile has no band lines")
            for (_, hi, _), (lo, _, _) in zip(bands, bands[1:]):
                if hi != lo:
                    raise ParameterError(f"bands are not contiguous at {hi} / {lo} Hz")
            bounds = tuple(b[0] for b in bands) + (bands[-1][1],)
            return BandProfile(bounds, tuple(b[2] for b in bands), float(keys.get("f_w", 0.0)))
    except KeyError as exc:
        raise ParameterError(f"profile is missing key {exc.args[0]!r}") from None
    raise ParameterError(f"profile form must be 'sigmoid' or 'band', got {form!r}")
