"""Mono WAV input and output: 16/24-bit PCM and 32-bit float.

Decoding and most encoding go through ``scipy.io.wavfile``; 24-bit PCM is
written with the standard ``wave`` module.  A chunk walk runs first so that
malformed files fail with the byte offset of the problem.
"""
from __future__ import annotations

import struct
import warnings
import wave
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .audio import AudioBuffer
from .errors import ParameterError, WavFormatError

FORMATS = ("pcm16", "pcm24", "float32")
_PCM, _FLOAT, _EXTENSIBLE = 1, 3, 0xFFFE


def _scan(path: Path, data: bytes) -> dict:
    """Walk the RIFF chunks and return the fmt fields; raise on any defect."""
    if len(data) < 12:
        raise WavFormatError(f"{path}: truncated RIFF header at offset {len(data)}")
    if data[0:4] != b"RIFF":
        raise WavFormatError(f"{path}: expected 'RIFF' at offset 0, found {data[0:4]!r}")
    if data[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: expected 'WAVE' at offset 8, found {data[8:12]!r}")
    riff_end = 8 + struct.unpack_from("<I", data, 4)[0]
    if riff_end > len(data):
        raise WavFormatError(
            f"{path}: RIFF size at offset 4 claims {riff_end} bytes, file has {len(data)}")
    fmt = None
    pos = 12
    while pos + 8 <= riff_end:
        cid = data[pos:pos + 4]
        size = struct.unpack_from("<I", data, pos + 4)[0]
        body = pos + 8
        if body + size > len(data):
            raise WavFormatError(
                f"{path}: chunk {cid!r} at offset {pos} runs past end of file "
                f"({body + size} > {len(data)})")
        if cid == b"fmt ":
            if size < 16:
                raise WavFormatError(f"{path}: fmt chunk at offset {pos} too short ({size} bytes)")
            tag, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", data, body)
            if tag == _EXTENSIBLE and size >= 40:
                tag = struct.unpack_from("<H", data, body + 24)[0]
            fmt = {"tag": tag, "channels": channels, "rate": rate, "bits": bits, "offset": pos}
        elif cid == b"data":
            if fmt is None:
                raise WavFormatError(f"{path}: data chunk at offset {pos} precedes fmt chunk")
            fmt["data_offset"] = pos
            break
        pos = body + size + (size & 1)
    if fmt is None:
        raise WavFormatError(f"{path}: no fmt chunk before offset {pos}")
    if "data_offset" not in fmt:
        raise WavFormatError(f"{path}: no data chunk before offset {pos}")
    if fmt["channels"] != 1:
        raise WavFormatError(
            f"{path}: {fmt['channels']} channels in fmt chunk at offset {fmt['offset']}; "
            "only mono is supported")
    kind = {(_PCM, 16): "pcm16", (_PCM, 24): "pcm24", (_FLOAT, 32): "float32"}.get(
        (fmt["tag"], fmt["bits"]))
    if kind is None:
        raise WavFormatError(
            f"{path}: unsupported codec (format tag {fmt['tag']}, {fmt['bits']} bits) "
            f"in fmt chunk at offset {fmt['offset']}")
    fmt["kind"] = kind
    return fmt


def read_wav(path) -> AudioBuffer:
    """Read a mono WAV file as float64 samples (PCM scaled to [-1, 1))."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise WavFormatError(f"{path}: {exc.strerror or exc}") from exc
    fmt = _scan(path, data)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", wavfile.WavFileWarning)
        rate, samples = wavfile.read(path)
    kind = fmt["kind"]
    if kind == "pcm16":
        x = samples.astype(np.float64) / 32768.0
    elif kind == "pcm24":
        # scipy left-justifies 24-bit samples in int32
        x = samples.astype(np.float64) / 2.0 ** 31
    else:
        x = samples.astype(np.float64)
    return AudioBuffer(x, float(rate))


def _quantize(x: np.ndarray, bits: int) -> np.ndarray:
    scale = 2.0 ** (bits - 1)
    return np.clip(np.round(x * scale), -scale, scale - 1).astype(np.int64)


def write_wav(path, audio: AudioBuffer, format: str = "float32") -> None:
    """Write mono audio; PCM formats clip to [-1, 1) and round to the nearest level."""
    if format not in FORMATS:
        raise ParameterError(f"format must be one of {FORMATS}, got {format!r}")
    rate = int(round(audio.sample_rate))
    if rate != audio.sample_rate:
        raise ParameterError(f"WAV needs an integer sample rate, got {audio.sample_rate}")
    path = Path(path)
    if format == "float32":
        wavfile.write(path, rate, audio.samples.astype(np.float32))
    elif format == "pcm16":
        wavfile.write(path, rate, _quantize(audio.samples, 16).astype(np.int16))
    else:
        q = _quantize(audio.samples, 24).astype("<i4")
        frames = q.view(np.uint8).reshape(-1, 4)[:, :3].tobytes()
        with wave.open(str(path), "wb") as w:
            w.setnchannels(1)
            w.setsampwidth(3)
            w.setframerate(rate)
            w.writeframes(frames)
