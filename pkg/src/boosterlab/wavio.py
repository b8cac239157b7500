"""Minimal WAV reading and writing for the stimulus pipeline.

Accepted input: RIFF/WAVE with 16- or 24-bit integer PCM or 32-bit IEEE
float sample data.  Anything else (compressed formats, other depths) is
rejected rather than converted, since resampling and transcoding are out
of scope.  Output is always 16-bit PCM with plain rounding (round half
to even, no dither).
"""

from __future__ import annotations

import io
import struct
import wave
from pathlib import Path

import numpy as np

from .dsp import AudioBuffer, StereoBuffer
from .errors import ParameterError

_FORMAT_PCM = 1
_FORMAT_IEEE_FLOAT = 3

FULL_SCALE_16 = 32767


def read_wav(path: str | Path) -> tuple[np.ndarray, int]:
    """Decode a WAV file to float64 in [-1, 1].

    Returns (samples, sample_rate); samples has shape (n,) for mono and
    (n, channels) otherwise.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise ParameterError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        chunk_id = raw[pos:pos + 4]
        (chunk_size,) = struct.unpack_from("<I", raw, pos + 4)
        body = raw[pos + 8: pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            fmt = body
        elif chunk_id == b"data":
            data = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None or data is None:
        raise ParameterError(f"{path}: missing fmt or data chunk")

    audio_format, channels, sample_rate, _, _, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if audio_format == 0xFFFE and len(fmt) >= 40:  # WAVE_FORMAT_EXTENSIBLE
        (audio_format,) = struct.unpack_from("<H", fmt, 24)
    if channels < 1:
        raise ParameterError(f"{path}: invalid channel count")

    if audio_format == _FORMAT_PCM and bits == 16:
        # symmetric with pcm16_encode, so write/read round-trips stay
        # within half an LSB
        samples = np.frombuffer(data, dtype="<i2").astype(np.float64) / FULL_SCALE_16
    elif audio_format == _FORMAT_PCM and bits == 24:
        b = np.frombuffer(data, dtype=np.uint8)
        b = b[: len(b) - len(b) % 3].reshape(-1, 3)
        ints = (b[:, 0].astype(np.int32)
                | (b[:, 1].astype(np.int32) << 8)
                | (b[:, 2].astype(np.int32) << 16))
        ints = np.where(ints >= 1 << 23, ints - (1 << 24), ints)
        samples = ints.astype(np.float64) / float(1 << 23)
    elif audio_format == _FORMAT_PCM and bits == 32:
        samples = np.frombuffer(data, dtype="<i4").astype(np.float64) / float(1 << 31)
    elif audio_format == _FORMAT_IEEE_FLOAT and bits == 32:
        samples = np.frombuffer(data, dtype="<f4").astype(np.float64)
    else:
        raise ParameterError(
            f"{path}: unsupported format (tag {audio_format}, {bits}-bit); "
            "expected 16/24-bit PCM or 32-bit float")

    if channels > 1:
        samples = samples[: len(samples) - len(samples) % channels]
        samples = samples.reshape(-1, channels)
    return samples, sample_rate


def load_mono_wav(path: str | Path, require_rate_hz: int | None = 48_000) -> AudioBuffer:
    """Read a WAV that must be mono (and at the required rate, if given)."""
    samples, rate = read_wav(path)
    if samples.ndim != 1:
        raise ParameterError(f"{path}: expected mono, got {samples.shape[1]} channels")
    if require_rate_hz is not None and rate != require_rate_hz:
        raise ParameterError(f"{path}: sample rate {rate} Hz, expected {require_rate_hz}")
    return AudioBuffer(samples, rate)


def pcm16_encode(samples: np.ndarray) -> np.ndarray:
    """Float [-1, 1] to int16 with plain rounding; out-of-range clips."""
    scaled = np.rint(np.asarray(samples, dtype=np.float64) * FULL_SCALE_16)
    return np.clip(scaled, -32768, 32767).astype(np.int16)


def _write_frames(w: wave.Wave_write, frames: np.ndarray, channels: int,
                  sample_rate_hz: int) -> None:
    w.setnchannels(channels)
    w.setsampwidth(2)
    w.setframerate(sample_rate_hz)
    w.writeframes(frames.tobytes())


def write_wav(path: str | Path, samples: np.ndarray, sample_rate_hz: int) -> None:
    """Write mono (n,) or interleaved stereo (n, 2) as 16-bit PCM."""
    arr = np.asarray(samples)
    channels = 1 if arr.ndim == 1 else arr.shape[1]
    if arr.ndim > 2 or channels > 2:
        raise ParameterError("expected mono or stereo sample data")
    with wave.open(str(path), "wb") as w:
        _write_frames(w, pcm16_encode(arr.reshape(len(arr), -1)), channels, sample_rate_hz)


def stereo_wav_bytes(stereo: StereoBuffer) -> bytes:
    """Encode a stereo buffer as an in-memory 16-bit WAV file."""
    interleaved = np.column_stack([stereo.left.samples, stereo.right.samples])
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        _write_frames(w, pcm16_encode(interleaved), 2, stereo.sample_rate_hz)
    return buf.getvalue()
