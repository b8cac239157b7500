"""Stimulus preparation and trial-pair rendering.

Levels here are dBFS with amplitude 1.0 as the 0 dB reference (a
full-scale square wave has 0 dB RMS).  Alignment is a plain gain toward
a target RMS; if that gain would push the peak past the ceiling it is
capped so the peak lands exactly on the ceiling and the shortfall shows
up in the reported achieved RMS.  No compression, no dither.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dsp import (AudioBuffer, BoosterKind, BoosterMethod, StereoBuffer,
                  DEFAULT_TAPS, apply_booster)
from .errors import NormalizationError, ParameterError

PIPELINE_SAMPLE_RATE = 48_000
DEFAULT_PEAK_CEILING_DB = -0.1
NOISE_PEAK_DB = -6.0
NOISE_TARGET_RMS_DB = -8.0
SPEECH_TARGET_RMS_DB = -14.0

# default initial speech gains, one entry per (signal, noise) pair
DEFAULT_INITIAL_GAINS_DB = {
    ("A", "A"): -21.2, ("A", "B"): -27.7, ("A", "C"): -17.1,
    ("B", "A"): -22.6, ("B", "B"): -30.5, ("B", "C"): -21.1,
    ("C", "A"): -19.7, ("C", "B"): -22.1, ("C", "C"): -20.0,
}

SOURCE_IDS = ("A", "B", "C")


def db_to_amplitude(gain_db: float) -> float:
    return 10.0 ** (gain_db / 20.0)


def amplitude_to_db(amplitude: float) -> float:
    return 20.0 * math.log10(amplitude) if amplitude > 0 else -math.inf


@dataclass(frozen=True)
class LevelReport:
    """Peak and RMS of a buffer, in dBFS."""

    peak_db: float
    rms_db: float
    silent: bool = False

    def __post_init__(self):
        if not self.silent and self.peak_db < self.rms_db:
            raise ParameterError("peak below RMS is not a valid level report")


@dataclass(frozen=True)
class GainTable:
    """Initial speech gain per (signal id, noise id) pair."""

    gains_db: dict[tuple[str, str], float]

    def __post_init__(self):
        missing = [(s, n) for s in SOURCE_IDS for n in SOURCE_IDS
                   if (s, n) not in self.gains_db]
        if missing:
            raise ParameterError(f"gain table missing entries for {missing}")

    def initial_gain_db(self, signal_id: str, noise_id: str) -> float:
        key = (signal_id.upper(), noise_id.upper())
        if key not in self.gains_db:
            raise ParameterError(f"no gain-table entry for {key}")
        return self.gains_db[key]

    @classmethod
    def default(cls) -> "GainTable":
        return cls(dict(DEFAULT_INITIAL_GAINS_DB))

    @classmethod
    def parse(cls, text: str) -> "GainTable":
        """Parse ``signal.noise = dB`` lines; '#' starts a comment."""
        gains = dict(DEFAULT_INITIAL_GAINS_DB)
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                key, value = line.split("=", 1)
                sig, noise = key.strip().split(".")
                gains[(sig.strip().upper(), noise.strip().upper())] = float(value)
            except ValueError as exc:
                raise ParameterError(f"gain table line {lineno}: {line!r}") from exc
        return cls(gains)

    def format(self) -> str:
        lines = ["# initial speech gain [dB] per signal.noise pair"]
        for (sig, noise), gain in sorted(self.gains_db.items()):
            lines.append(f"{sig.lower()}.{noise.lower()} = {gain}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class TrialStimulus:
    """Rendered Sound A / Sound B pair for one trial.

    Both sounds share the identical noise at both ears; only the speech
    path differs (gain on A, the booster method on B's left ear).
    """

    sound_a: StereoBuffer
    sound_b: StereoBuffer
    condition: object
    initial_gain_db: float
    variable_gain_db: float
    clip_count_a: int = 0
    clip_count_b: int = 0


def generate_uniform_noise(duration_s: float, sample_rate_hz: int,
                           seed: int) -> AudioBuffer:
    """White noise from i.i.d. uniform samples, scaled to a -6 dB peak."""
    if duration_s <= 0:
        raise ParameterError("duration must be positive")
    if sample_rate_hz <= 0:
        raise ParameterError("sample rate must be positive")
    n = round(duration_s * sample_rate_hz)
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, n)
    x *= db_to_amplitude(NOISE_PEAK_DB) / np.max(np.abs(x))
    return AudioBuffer(x, sample_rate_hz)


def downmix_mono(stereo: StereoBuffer) -> AudioBuffer:
    """Average the two channels into one."""
    mono = (stereo.left.samples + stereo.right.samples) / 2.0
    return AudioBuffer(mono, stereo.sample_rate_hz)


def measure_levels(buffer: AudioBuffer) -> LevelReport:
    if len(buffer) == 0:
        raise ParameterError("cannot measure an empty buffer")
    peak = float(np.max(np.abs(buffer.samples)))
    if peak == 0.0:
        return LevelReport(-math.inf, -math.inf, silent=True)
    rms = float(np.sqrt(np.mean(np.square(buffer.samples))))
    return LevelReport(amplitude_to_db(peak), amplitude_to_db(rms))


def apply_gain_db(buffer: AudioBuffer, gain_db: float) -> AudioBuffer:
    if not math.isfinite(gain_db):
        raise ParameterError("gain must be finite")
    return AudioBuffer(buffer.samples * db_to_amplitude(gain_db),
                       buffer.sample_rate_hz)


def normalize_rms(buffer: AudioBuffer, target_rms_db: float,
                  peak_ceiling_db: float = DEFAULT_PEAK_CEILING_DB
                  ) -> tuple[AudioBuffer, LevelReport]:
    """Gain toward the target RMS, capped so the peak never exceeds the
    ceiling.  Returns the adjusted buffer and its achieved levels."""
    levels = measure_levels(buffer)
    if levels.silent:
        raise NormalizationError("cannot normalize a silent buffer")
    gain_db = target_rms_db - levels.rms_db
    if levels.peak_db + gain_db > peak_ceiling_db:
        gain_db = peak_ceiling_db - levels.peak_db
    adjusted = apply_gain_db(buffer, gain_db)
    return adjusted, measure_levels(adjusted)


def loop_seam_db(buffer: AudioBuffer) -> float:
    """Start/end discontinuity when the buffer is looped, in dBFS.

    Reported in the preparation manifest; large values hint that a
    repeated segment will click.  Not a gate.
    """
    if len(buffer) < 2:
        return -math.inf
    step = abs(float(buffer.samples[0]) - float(buffer.samples[-1]))
    return amplitude_to_db(step) if step > 0 else -math.inf


def _clamped(samples: np.ndarray) -> tuple[np.ndarray, int]:
    clipped = int(np.count_nonzero(np.abs(samples) > 1.0))
    return np.clip(samples, -1.0, 1.0), clipped


def _mix_with_noise(speech_stereo: StereoBuffer,
                    noise: np.ndarray) -> tuple[StereoBuffer, int]:
    left, clip_l = _clamped(speech_stereo.left.samples + noise)
    right, clip_r = _clamped(speech_stereo.right.samples + noise)
    rate = speech_stereo.sample_rate_hz
    return StereoBuffer(AudioBuffer(left, rate), AudioBuffer(right, rate)), clip_l + clip_r


def render_trial_pair(speech: AudioBuffer, noise: AudioBuffer, condition,
                      gains: GainTable, variable_gain_db: float = 0.0,
                      taps: int = DEFAULT_TAPS) -> TrialStimulus:
    """Render the Sound A / Sound B pair for one condition.

    Sound A carries the speech at initial + variable gain through the
    unprocessed ([1,1] both ears) path; Sound B carries it at the fixed
    initial gain with the condition's method applied to the left ear.
    The same noise is added to both ears of both sounds, unfiltered, so
    it stays bit-identical across the pair.  Speech is delayed
    (taps-1)/2 samples by the filter bank in both sounds alike.
    """
    if speech.sample_rate_hz != PIPELINE_SAMPLE_RATE or \
            noise.sample_rate_hz != PIPELINE_SAMPLE_RATE:
        raise ParameterError("trial rendering expects 48 kHz speech and noise")
    if len(noise) < len(speech):
        raise ParameterError("noise must be at least as long as the speech")
    noise_cut = noise.samples[: len(speech)]

    initial_gain_db = gains.initial_gain_db(condition.signal_id, condition.noise_id)

    def speech_path(gain_db: float, method: BoosterMethod) -> StereoBuffer:
        voiced = apply_gain_db(speech, gain_db)
        return apply_booster(StereoBuffer(voiced, voiced), method, taps)

    path_a = speech_path(initial_gain_db + variable_gain_db,
                         BoosterMethod(BoosterKind.ORIGINAL))
    path_b = speech_path(initial_gain_db, condition.method)

    sound_a, clip_a = _mix_with_noise(path_a, noise_cut)
    sound_b, clip_b = _mix_with_noise(path_b, noise_cut)
    return TrialStimulus(sound_a, sound_b, condition, initial_gain_db,
                         variable_gain_db, clip_a, clip_b)
