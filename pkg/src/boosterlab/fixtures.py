"""Synthetic stand-ins for the three speech signals and three noises.

Real sessions use recorded speech and environmental noise; these
generators produce license-free substitutes with the same level
structure so the preparation pipeline, the trial service, and the test
suite can run end to end.  Crest factors are set deliberately: under
the peak-capped RMS alignment they land on the documented post-alignment
levels (speech near -14 dB RMS, noise near -8 dB RMS).
"""

from __future__ import annotations

import math

import numpy as np

from .dsp import AudioBuffer
from .errors import ParameterError
from .pipeline import (DEFAULT_PEAK_CEILING_DB, NOISE_TARGET_RMS_DB,
                       PIPELINE_SAMPLE_RATE, SPEECH_TARGET_RMS_DB,
                       db_to_amplitude, generate_uniform_noise, normalize_rms)

DEFAULT_SEED = 20240401
SIGNAL_DURATION_S = 3.0
NOISE_DURATION_S = 3.5


def _rng(seed: int, tag: str) -> np.random.Generator:
    # independent, reproducible stream per fixture
    return np.random.default_rng([seed] + [ord(c) for c in tag])

# crest factor [dB] targets; with the -0.1 dB ceiling these reproduce the
# reference post-alignment RMS figures (-14.9 / -14.5 / -14.0 dB)
_SIGNAL_CREST_DB = {"A": 14.8, "B": 14.4, "C": 10.7}
_SIGNAL_RAW_RMS_DB = {"A": -34.4, "B": -29.1, "C": -24.3}
_SIGNAL_VOICE = {  # fundamental Hz, harmonic rolloff, hiss mix
    "A": (120.0, 1.3, 0.10),
    "B": (205.0, 1.5, 0.12),
    "C": (240.0, 0.9, 0.30),
}


def _syllable_envelope(n: int, fs: int, rng: np.random.Generator) -> np.ndarray:
    """Bursty amplitude contour: ~4.5 syllables/s with silent gaps."""
    t = np.arange(n) / fs
    gate = np.sin(2 * np.pi * 4.5 * t + 0.4)
    env = np.clip(gate, 0.0, None) ** 0.7
    # vary loudness per syllable
    syllable = np.floor(4.5 * t).astype(int)
    weights = rng.uniform(0.35, 1.0, int(syllable.max()) + 1)
    env *= weights[syllable]
    # fade both ends to kill the loop seam
    ramp = min(int(0.02 * fs), n // 4)
    env[:ramp] *= np.linspace(0.0, 1.0, ramp)
    env[-ramp:] *= np.linspace(1.0, 0.0, ramp)
    return env


def _set_crest(body: np.ndarray, crest_db: float) -> np.ndarray:
    """Normalize RMS to 1 and plant a few isolated peaks so the crest
    factor matches the target almost exactly."""
    body = body / np.sqrt(np.mean(np.square(body)))
    target = db_to_amplitude(crest_db)
    limit = 0.85 * target
    body = np.clip(body, -limit, limit)
    body /= np.sqrt(np.mean(np.square(body)))

    n = len(body)
    k = 4
    # peak amplitude corrected for its own RMS contribution
    amp = target * math.sqrt((n - k) / (n - target * target * k))
    positions = np.linspace(n // 8, n - n // 8, k).astype(int)
    for i, pos in enumerate(positions):
        body[pos] = amp if i % 2 == 0 else -amp
    return body


def make_signal(signal_id: str, seed: int = DEFAULT_SEED,
                duration_s: float = SIGNAL_DURATION_S,
                sample_rate_hz: int = PIPELINE_SAMPLE_RATE) -> AudioBuffer:
    """Speech-like fixture: harmonic voice under a syllable envelope,
    plus hiss, with a controlled crest factor and quiet raw level."""
    signal_id = signal_id.upper()
    if signal_id not in _SIGNAL_VOICE:
        raise ParameterError(f"unknown signal id {signal_id!r}")
    f0, rolloff, hiss_mix = _SIGNAL_VOICE[signal_id]
    rng = _rng(seed, "signal" + signal_id)

    n = round(duration_s * sample_rate_hz)
    t = np.arange(n) / sample_rate_hz
    vibrato = 1.0 + 0.02 * np.sin(2 * np.pi * 5.0 * t + rng.uniform(0, 2 * np.pi))
    phase = 2 * np.pi * f0 * np.cumsum(vibrato) / sample_rate_hz

    voice = np.zeros(n)
    for k in range(1, 13):
        voice += np.sin(k * phase + rng.uniform(0, 2 * np.pi)) / k ** rolloff
    hiss = np.diff(rng.uniform(-1, 1, n + 1))  # first difference tilts the noise up
    body = (voice / np.max(np.abs(voice)) + hiss_mix * hiss) * \
        _syllable_envelope(n, sample_rate_hz, rng)

    body = _set_crest(body, _SIGNAL_CREST_DB[signal_id])
    body *= db_to_amplitude(_SIGNAL_RAW_RMS_DB[signal_id])  # quiet raw recording level
    return AudioBuffer(body, sample_rate_hz)


def make_noise_a(seed: int = DEFAULT_SEED,
                 duration_s: float = NOISE_DURATION_S,
                 sample_rate_hz: int = PIPELINE_SAMPLE_RATE) -> AudioBuffer:
    """White noise at a -6 dB peak."""
    return generate_uniform_noise(duration_s, sample_rate_hz,
                                  int(_rng(seed, "noiseA").integers(2 ** 31)))


def make_noise_b(seed: int = DEFAULT_SEED,
                 duration_s: float = NOISE_DURATION_S,
                 sample_rate_hz: int = PIPELINE_SAMPLE_RATE) -> AudioBuffer:
    """Crowd-like fixture: white noise under a slow swell, crest ~7.5 dB."""
    rng = _rng(seed, "noiseB")
    n = round(duration_s * sample_rate_hz)
    t = np.arange(n) / sample_rate_hz
    swell = 0.6 * np.sin(2 * np.pi * 1.3 * t + rng.uniform(0, 2 * np.pi)) \
        + 0.4 * np.sin(2 * np.pi * 3.1 * t + rng.uniform(0, 2 * np.pi))
    x = rng.uniform(-1.0, 1.0, n) * (0.7 + 0.3 * swell)
    x *= db_to_amplitude(-9.7) / np.max(np.abs(x))  # quiet raw level
    return AudioBuffer(x, sample_rate_hz)


def make_noise_c(seed: int = DEFAULT_SEED,
                 duration_s: float = NOISE_DURATION_S,
                 sample_rate_hz: int = PIPELINE_SAMPLE_RATE) -> AudioBuffer:
    """Machine-like mix of five dense sources.

    Mirrors the multi-source recipe: each source is RMS-matched to the
    quietest, the matched sources are summed, and the sum's peak is set
    to -1 dB.  Near-binary sources keep the sum's crest around 8 dB.
    """
    rng = _rng(seed, "noiseC")
    n = round(duration_s * sample_rate_hz)
    raw_gains = [1.0, 0.8, 0.7, 0.9, 0.6]
    sources = []
    for gain in raw_gains:
        u = rng.uniform(-1.0, 1.0, n)
        dense = np.sign(u) * rng.uniform(0.7, 1.0, n)  # drill-like dense texture
        sources.append(gain * dense)

    rms = [float(np.sqrt(np.mean(np.square(s)))) for s in sources]
    floor = min(rms)
    mixed = np.sum([s * (floor / r) for s, r in zip(sources, rms)], axis=0)
    mixed *= db_to_amplitude(-1.0) / np.max(np.abs(mixed))
    return AudioBuffer(mixed, sample_rate_hz)


def make_noise(noise_id: str, seed: int = DEFAULT_SEED,
               duration_s: float = NOISE_DURATION_S,
               sample_rate_hz: int = PIPELINE_SAMPLE_RATE) -> AudioBuffer:
    maker = {"A": make_noise_a, "B": make_noise_b, "C": make_noise_c}
    noise_id = noise_id.upper()
    if noise_id not in maker:
        raise ParameterError(f"unknown noise id {noise_id!r}")
    return maker[noise_id](seed, duration_s, sample_rate_hz)


def prepared_fixture_kit(seed: int = DEFAULT_SEED) -> dict:
    """Aligned signal/noise buffers keyed by id, ready for rendering."""
    signals = {}
    noises = {}
    for sid in ("A", "B", "C"):
        signals[sid], _ = normalize_rms(make_signal(sid, seed),
                                        SPEECH_TARGET_RMS_DB, DEFAULT_PEAK_CEILING_DB)
        noises[sid], _ = normalize_rms(make_noise(sid, seed),
                                       NOISE_TARGET_RMS_DB, DEFAULT_PEAK_CEILING_DB)
    return {"signals": signals, "noises": noises}
