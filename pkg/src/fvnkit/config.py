"""Plain-text run configuration and FVN unit sidecars.

Both use one ``key = value`` pair per line, UTF-8, with ``#`` comments.
Values are JSON scalars (numbers, quoted strings, true/false/null), which
keeps floats exact through ``repr`` and strings unambiguous.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .core import SIX_TERM
from .errors import ContractError, ParameterError
from .ffvn import format_profile, generate_ffvn_unit, parse_profile
from .fvn import FvnParams, FvnUnit, generate_unit


def _encode(value) -> str:
    if isinstance(value, (np.integer, np.floating)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return json.dumps(value)  # Infinity / NaN, accepted back by json.loads
    if not isinstance(value, (str, int, float, bool)) and value is not None:
        raise ParameterError(f"config values must be scalars, got {type(value).__name__}")
    return json.dumps(value)


def dump_pairs(pairs: dict, header: str | None = None) -> str:
    lines = [f"# {header}"] if header else []
    for key, value in pairs.items():
        if not key or "=" in key or key != key.strip() or "\n" in key:
            raise ParameterError(f"invalid config key {key!r}")
        lines.append(f"{key} = {_encode(value)}")
    return "\n".join(lines) + "\n"


def load_pairs(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParameterError(f"config line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"config line {lineno}: bad value {value!r} ({exc.msg})") from None
    return out


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a CLI run besides its input files."""

    subcommand: str
    params: dict = field(default_factory=dict)
    master_seed: int | None = None
    version: str = __version__

    def to_text(self) -> str:
        pairs = {"subcommand": self.subcommand, "version": self.version,
                 "master_seed": self.master_seed}
        pairs.update({f"param.{k}": v for k, v in self.params.items()})
        return dump_pairs(pairs, "fvnkit run record")

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        pairs = load_pairs(text)
        try:
            sub = pairs.pop("subcommand")
        except KeyError:
            raise ParameterError("run config lacks 'subcommand'") from None
        version = pairs.pop("version", __version__)
        seed = pairs.pop("master_seed", None)
        params = {k[len("param."):]: v for k, v in pairs.items() if k.startswith("param.")}
        return cls(sub, params, seed, version)


def sidecar_path(wav_path) -> Path:
    return Path(wav_path).with_suffix(".txt")


def unit_sidecar(unit: FvnUnit, profile=None) -> str:
    p = unit.params
    if p is None:
        raise ParameterError("unit has no generation parameters to record")
    if p.series != SIX_TERM:
        raise ParameterError("sidecars only describe six-term units")
    pairs = {"kind": "ffvn" if profile is not None else "fvn", "version": __version__,
             "b_hz": p.b_hz, "fd_hz": p.fd_hz, "phi_max": p.phi_max,
             "sample_rate": p.sample_rate, "fft_length": p.fft_length, "seed": p.seed,
             "amplitude": p.amplitude, "rotation": unit.rotation,
             "duration_s": unit.duration}
    if profile is not None:
        pairs["profile"] = format_profile(profile)
    return dump_pairs(pairs, "fvnkit unit")


def unit_from_sidecar(text: str) -> tuple[FvnUnit, object]:
    """Regenerate the unit a sidecar describes; returns ``(unit, profile or None)``."""
    pairs = load_pairs(text)
    try:
        params = FvnParams(b_hz=float(pairs["b_hz"]), fd_hz=float(pairs["fd_hz"]),
                           phi_max=float(pairs["phi_max"]),
                           sample_rate=float(pairs["sample_rate"]),
                           fft_length=int(pairs["fft_length"]), seed=pairs["seed"],
                           amplitude=pairs.get("amplitude", "binary"))
    except KeyError as exc:
        raise ParameterError(f"sidecar is missing key {exc.args[0]!r}") from None
    if pairs.get("kind", "fvn") == "ffvn":
        profile = parse_profile(pairs["profile"])
        return generate_ffvn_unit(profile, params), profile
    return generate_unit(params), None


def check_unit_matches(unit: FvnUnit, stored_centered: np.ndarray, tol: float = 1e-6) -> None:
    """Compare a regenerated unit with its stored (centred, float32) response."""
    stored = np.asarray(stored_centered, dtype=np.float64)
    if stored.size != unit.fft_length:
        raise ContractError(
            f"stored response has {stored.size} samples, sidecar says {unit.fft_length}")
    err = float(np.max(np.abs(stored - unit.centered())))
    if err > tol:
        raise ContractError(f"stored response differs from its sidecar parameters (max {err:.3g})")
