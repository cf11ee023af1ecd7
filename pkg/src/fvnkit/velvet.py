"""Original velvet noise: one randomly placed, randomly signed pulse per segment."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .errors import ParameterError


class UniformSource(Protocol):
    """Anything with a ``random(size)`` method returning uniforms in (0, 1).

    ``numpy.random.Generator`` qualifies; tests inject constant sources.
    """

    def random(self, size: int) -> np.ndarray: ...


def make_rng(seed: int | None = None, rng: UniformSource | None = None) -> UniformSource:
    """Return ``rng`` if given, else a PCG64 generator seeded with ``seed``.

    PCG64 via ``numpy.random.default_rng`` is the documented stream; other
    implementations can replay a run by injecting the same uniforms.
    """
    if rng is not None:
        return rng
    return np.random.default_rng(seed)


def round_half_away(x):
    """Nearest integer, ties rounded away from zero (not banker's rounding)."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def velvet_positions(n_segments: int, spacing: float, r1: np.ndarray) -> np.ndarray:
    """Pulse positions ||m * spacing + r1[m] * (spacing - 1)|| for m = 0..n_segments-1."""
    m = np.arange(n_segments)
    return round_half_away(m * spacing + np.asarray(r1) * (spacing - 1.0))


def velvet_signs(r2: np.ndarray) -> np.ndarray:
    """Signs 2||r2|| - 1, i.e. -1 below one half and +1 from one half up."""
    return 2.0 * round_half_away(r2) - 1.0


@dataclass(frozen=True)
class VelvetNoise:
    samples: np.ndarray
    t_d: float
    seed: int | None

    @property
    def length(self) -> int:
        return self.samples.shape[0]

    @property
    def pulse_positions(self) -> np.ndarray:
        return np.flatnonzero(self.samples)


def generate_ovn(length: int, t_d: float, seed: int | None = None,
                 rng: UniformSource | None = None) -> VelvetNoise:
    """Generate an original velvet noise (OVN) sequence.

    Parameters
    ----------
    length : int
        Output length in samples.
    t_d : float
        Average pulse interval in samples.
    seed : int, optional
        Seed of the PCG64 stream.  Ignored when ``rng`` is given.
    rng : UniformSource, optional
        Uniform source; ``r1`` (positions) is drawn first, then ``r2`` (signs),
        each as one vector of length ``length // t_d``.

    Notes
    -----
    Only complete segments receive a pulse, so a trailing partial segment
    stays silent and every segment ``[m*t_d, (m+1)*t_d)`` holds exactly one.
    """
    if not t_d >= 1:
        raise ParameterError(f"average pulse interval must be >= 1 sample, got {t_d}")
    if length < t_d:
        raise ParameterError(f"length {length} shorter than one segment ({t_d})")
    source = make_rng(seed, rng)
    n_segments = int(np.floor(length / t_d))
    r1 = np.asarray(source.random(n_segments), dtype=np.float64)
    r2 = np.asarray(source.random(n_segments), dtype=np.float64)
    positions = velvet_positions(n_segments, t_d, r1).astype(np.int64)
    samples = np.zeros(int(length))
    samples[positions] = velvet_signs(r2)
    return VelvetNoise(samples, float(t_d), seed)
