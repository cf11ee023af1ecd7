"""Command line front end: ``fvnkit <subcommand> ...``.

Exit status is 0 on success, 2 for usage errors (bad flags, bad values,
missing inputs) and 3 for data errors (malformed WAV, failed contracts).
Every run writes ``<output>.provenance.txt`` with the full run record.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (columns_csv, duration, erl, group_delay, level_distribution,
                       running_kurtosis, spectrogram)
from .audio import AudioBuffer
from .config import RunConfig, check_unit_matches, sidecar_path, unit_from_sidecar, unit_sidecar
from .errors import FvnError, ParameterError
from .excitation import (F0Trajectory, MorphSchedule, PRCalibration, calibrate_pr_ratio,
                         frozen_ifvn, morphed_ifvn, place_bursts, random_ifvn)
from .ffvn import generate_ffvn_unit, parse_profile
from .fvn import FvnParams, PhaseSpec, bandwidth_for_duration, design_phase, generate_unit
from .hiding import HidingKey, KurtosisConfig, apply_allpass, depuzz_params, detect_tamper, recover
from .velvet import generate_ovn
from .wavio import FORMATS, read_wav, write_wav

EXIT_USAGE = 2
EXIT_DATA = 3


class UsageError(Exception):
    pass


def _fvn_args(p: argparse.ArgumentParser, b_default: float = 200.0, fd_default: float = 40.0):
    p.add_argument("--b-hz", type=float, default=b_default, help="smoother support B (Hz)")
    p.add_argument("--fd-hz", type=float, default=fd_default, help="average segment length F_d (Hz)")
    p.add_argument("--phi-max", type=float, default=math.pi / 2)
    p.add_argument("--fs", type=float, default=44100.0)
    p.add_argument("--fft-length", type=int, default=None)
    p.add_argument("--amplitude", choices=("binary", "uniform"), default="binary")


def _f0_args(p: argparse.ArgumentParser):
    p.add_argument("--f0", type=float, default=100.0, help="base f0 (Hz)")
    p.add_argument("--vib-rate", type=float, default=0.0, help="vibrato rate (Hz)")
    p.add_argument("--vib-depth", type=float, default=0.0, help="vibrato depth (cent)")
    p.add_argument("--duration", type=float, default=1.0, help="output length (s)")


def _params(a, seed: int | None) -> FvnParams:
    return FvnParams(b_hz=a.b_hz, fd_hz=a.fd_hz, phi_max=a.phi_max, sample_rate=a.fs,
                     fft_length=a.fft_length, seed=seed, amplitude=a.amplitude)


def _f0(a) -> F0Trajectory:
    return F0Trajectory(a.f0, a.duration, a.fs, a.vib_rate, a.vib_depth)


def _input(path) -> Path:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"input file not found: {path}")
    return path


def _write_unit(path: Path, unit, profile=None) -> None:
    write_wav(path, AudioBuffer(unit.centered(), unit.sample_rate), "float32")
    sidecar_path(path).write_text(unit_sidecar(unit, profile), encoding="utf-8")


def _load_key(path) -> HidingKey:
    path = _input(path)
    side = sidecar_path(path)
    if not side.is_file():
        raise UsageError(f"key sidecar not found: {side}")
    unit, _ = unit_from_sidecar(side.read_text(encoding="utf-8"))
    check_unit_matches(unit, read_wav(path).samples)
    return HidingKey(unit, path.stem)


def cmd_ovn(a):
    v = generate_ovn(a.length, a.td, seed=a.seed)
    write_wav(a.output, AudioBuffer(v.samples, a.fs), a.format)


def cmd_fvn(a):
    params = depuzz_params(a.seed, a.fs) if a.preset == "depuzz" else _params(a, a.seed)
    _write_unit(Path(a.output), generate_unit(params))


def cmd_ffvn(a):
    profile = parse_profile(_input(a.profile).read_text(encoding="utf-8"))
    b = bandwidth_for_duration(profile.max_duration)
    params = FvnParams(b_hz=b, fd_hz=max(1.0, b * a.fd_ratio), phi_max=a.phi_max,
                       sample_rate=a.fs, fft_length=a.fft_length, seed=a.seed,
                       amplitude=a.amplitude)
    _write_unit(Path(a.output), generate_ffvn_unit(profile, params), profile)


def cmd_filter(a):
    key = _load_key(a.key)
    write_wav(a.output, apply_allpass(read_wav(_input(a.input)), key), a.format)


def cmd_recover(a):
    key = _load_key(a.key)
    write_wav(a.output, recover(read_wav(_input(a.input)), key), a.format)


def cmd_detect(a):
    key = _load_key(a.key)
    cfg = KurtosisConfig(a.threshold, a.decision_level, a.window_s, a.hop_s)
    record = detect_tamper(read_wav(_input(a.input)), key, cfg).to_record()
    print(record)
    if a.output:
        Path(a.output).write_text(record + "\n", encoding="utf-8")


def _load_calibration(path) -> PRCalibration:
    rows = np.loadtxt(_input(path), delimiter=",", skiprows=1, ndmin=2)
    return PRCalibration(rows[:, 0], rows[:, 2], 0, np.full(len(rows), np.nan),
                         np.full(len(rows), np.nan))


def cmd_morph(a):
    params = _params(a, a.seed)
    f0 = _f0(a)
    calibration = None
    if a.eta_file:
        if not a.calibration:
            raise UsageError("--eta-file needs --calibration (from the calibrate subcommand)")
        schedule = MorphSchedule.from_text(_input(a.eta_file).read_text(encoding="utf-8"))
        calibration = _load_calibration(a.calibration)
    else:
        schedule = MorphSchedule.constant(a.r)
    out = morphed_ifvn(design_phase(params), params.with_seed(a.seed + 1), f0, schedule,
                       calibration=calibration)
    write_wav(a.output, out, a.format)


def cmd_excite(a):
    params = _params(a, a.seed)
    f0 = _f0(a)
    if a.mode == "frozen":
        out = frozen_ifvn(design_phase(params), f0)
    elif a.mode == "random":
        out = random_ifvn(params, f0)
    else:
        if not a.carrier:
            raise UsageError("--mode bursts needs --carrier")
        carrier = read_wav(_input(a.carrier))
        f0 = F0Trajectory(a.f0, len(carrier) / carrier.sample_rate, carrier.sample_rate,
                          a.vib_rate, a.vib_depth)
        out = place_bursts(carrier, f0, generate_unit(params), a.phase_in_period, a.gain)
    write_wav(a.output, out, a.format)


def cmd_analyze(a):
    x = read_wav(_input(a.input))
    if a.what == "duration":
        sigma = duration(x)
        text = columns_csv({"duration_s": [sigma], "erl_s": [erl(sigma)]})
    elif a.what == "kurtosis":
        tr = running_kurtosis(x)
        text = columns_csv({"time_s": tr.times, "kurtosis": tr.kappa})
    elif a.what == "spectrogram":
        text = spectrogram(x, window_s=a.window_s, hop_s=a.hop_s).to_csv()
    elif a.what == "levels":
        ld = level_distribution(x)
        text = columns_csv({"level": ld.levels, "cdf": ld.cdf})
    else:
        # the input is a stored unit: undo the centring before taking its phase
        h = np.roll(x.samples, -(len(x) // 2))
        phase = PhaseSpec(np.angle(np.fft.fft(h)), x.sample_rate)
        gd = group_delay(phase)
        text = columns_csv({"freq_hz": gd.frequencies, "group_delay_s": gd.tau_g})
    Path(a.output).write_text(text, encoding="utf-8")


def cmd_calibrate(a):
    params = _params(a, a.seed)
    cal = calibrate_pr_ratio(params, _f0(a), np.linspace(0, 1, a.grid_points), a.n_seeds)
    text = columns_csv({"r": cal.r_grid, "r_db": cal.r_db, "g_db": cal.g_db})
    Path(a.output).write_text(text, encoding="utf-8")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fvnkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fvnkit {__version__}")
    parser.add_argument("--provenance", default=None,
                        help="run record path (default: <output>.provenance.txt)")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, func, help_text, seeded=False, output=True, fmt=False):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        if seeded:
            p.add_argument("--seed", type=int, required=True)
        if fmt:
            p.add_argument("--format", choices=FORMATS, default="float32")
        if output:
            p.add_argument("output")
        return p

    p = add("ovn", cmd_ovn, "original velvet noise", seeded=True, fmt=True)
    p.add_argument("--length", type=int, required=True, help="samples")
    p.add_argument("--td", type=float, required=True, help="average pulse interval (samples)")
    p.add_argument("--fs", type=float, default=44100.0)

    p = add("fvn", cmd_fvn, "one FVN unit (WAV + sidecar)", seeded=True)
    _fvn_args(p)
    p.add_argument("--preset", choices=("depuzz",), default=None)

    p = add("ffvn", cmd_ffvn, "FVN unit with a duration profile", seeded=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--fd-ratio", type=float, default=1 / 3, help="F_d / B on the warped axis")
    p.add_argument("--phi-max", type=float, default=math.pi / 2)
    p.add_argument("--fs", type=float, default=44100.0)
    p.add_argument("--fft-length", type=int, default=None)
    p.add_argument("--amplitude", choices=("binary", "uniform"), default="binary")

    for name, func, text in (("filter", cmd_filter, "all-pass filter with a key"),
                             ("recover", cmd_recover, "undo filter with the same key")):
        p = sub.add_parser(name, help=text)
        p.set_defaults(func=func)
        p.add_argument("--key", required=True)
        p.add_argument("--format", choices=FORMATS, default="float32")
        p.add_argument("input")
        p.add_argument("output")

    p = sub.add_parser("detect", help="kurtosis tamper check after recovery")
    p.set_defaults(func=cmd_detect)
    p.add_argument("--key", required=True)
    p.add_argument("--threshold", type=float, default=KurtosisConfig.threshold)
    p.add_argument("--decision-level", type=float, default=KurtosisConfig.decision_level)
    p.add_argument("--window-s", type=float, default=KurtosisConfig.window_s)
    p.add_argument("--hop-s", type=float, default=KurtosisConfig.hop_s)
    p.add_argument("input")
    p.add_argument("output", nargs="?", default=None, help="optional record file")

    p = add("morph", cmd_morph, "morphed IFVN (constant r or eta schedule)", seeded=True, fmt=True)
    _fvn_args(p, 100.0, 20.0)
    _f0_args(p)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--eta-file", default=None, help="'time_s value_db' lines")
    p.add_argument("--calibration", default=None, help="CSV from the calibrate subcommand")

    p = add("excite", cmd_excite, "frozen / random IFVN or bursts on a carrier",
            seeded=True, fmt=True)
    _fvn_args(p, 100.0, 20.0)
    _f0_args(p)
    p.add_argument("--mode", choices=("frozen", "random", "bursts"), default="random")
    p.add_argument("--carrier", default=None)
    p.add_argument("--phase-in-period", type=float, default=0.0)
    p.add_argument("--gain", type=float, default=1.0)

    p = sub.add_parser("analyze", help="CSV measurements of a WAV file")
    p.set_defaults(func=cmd_analyze)
    p.add_argument("--what", choices=("duration", "kurtosis", "spectrogram", "levels",
                                      "group-delay"), required=True)
    p.add_argument("--window-s", type=float, default=0.02)
    p.add_argument("--hop-s", type=float, default=0.0005)
    p.add_argument("input")
    p.add_argument("output")

    p = add("calibrate", cmd_calibrate, "tabulate periodic-to-random ratio", seeded=True)
    _fvn_args(p, 100.0, 20.0)
    _f0_args(p)
    p.set_defaults(duration=0.05)
    p.add_argument("--n-seeds", type=int, default=50)
    p.add_argument("--grid-points", type=int, default=11)
    return parser


def _record(args) -> RunConfig:
    skip = {"func", "subcommand", "provenance", "seed"}
    params = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return RunConfig(args.subcommand, params, getattr(args, "seed", None))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        args.func(args)
    except UsageError as exc:
        print(f"fvnkit {args.subcommand}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParameterError as exc:
        print(f"fvnkit {args.subcommand}: invalid parameter: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FvnError, OSError, ValueError) as exc:
        print(f"fvnkit {args.subcommand}: {exc}", file=sys.stderr)
        return EXIT_DATA
    target = args.provenance or (f"{args.output}.provenance.txt" if getattr(args, "output", None)
                                 else f"{args.input}.{args.subcommand}.provenance.txt")
    Path(target).write_text(_record(args).to_text(), encoding="utf-8")
    return 0

