"""FIR band-splitting and one-ear phase inversion ("Booster" processing).

The processing chain splits a signal into a low and a high band at a
crossover frequency Fc, optionally flips the sign of one or both bands,
and sums them again.  With coefficients [+1, +1] the chain is a pure
delay of (taps-1)/2 samples; flipping one band produces a deep notch
("dip") near Fc; flipping both is full phase inversion.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ParameterError

DEFAULT_SAMPLE_RATE = 48_000
DEFAULT_TAPS = 513
CUTOFF_CHOICES = (250, 500, 1000)

# symmetry tolerance for linear-phase validation
_SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class AudioBuffer:
    """Mono sample sequence at a fixed sample rate, full scale +-1.0."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise ParameterError("audio buffer must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("audio buffer contains non-finite samples")
        if self.sample_rate_hz <= 0:
            raise ParameterError("sample rate must be positive")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


@dataclass(frozen=True)
class StereoBuffer:
    """Left/right pair of equal-length, equal-rate buffers."""

    left: AudioBuffer
    right: AudioBuffer

    def __post_init__(self):
        if len(self.left) != len(self.right):
            raise ParameterError("stereo channels differ in length")
        if self.left.sample_rate_hz != self.right.sample_rate_hz:
            raise ParameterError("stereo channels differ in sample rate")

    def __len__(self) -> int:
        return len(self.left)

    @property
    def sample_rate_hz(self) -> int:
        return self.left.sample_rate_hz


@dataclass(frozen=True)
class FirFilter:
    """Linear-phase FIR filter with an odd tap count.

    The odd length makes the group delay (taps-1)/2 an integer number of
    samples, so delay compensation between processed and unprocessed
    channels is a plain sample shift.
    """

    coefficients: np.ndarray
    cutoff_hz: float
    sample_rate_hz: int

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=np.float64)
        if coeffs.ndim != 1 or len(coeffs) < 3:
            raise ParameterError("filter needs at least 3 coefficients")
        if len(coeffs) % 2 == 0:
            raise ParameterError("tap count must be odd")
        coeffs = coeffs.copy()
        coeffs.flags.writeable = False
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def taps(self) -> int:
        return len(self.coefficients)

    @property
    def group_delay_samples(self) -> int:
        return (self.taps - 1) // 2

    def is_linear_phase(self, tol: float = _SYMMETRY_TOL) -> bool:
        c = self.coefficients
        return bool(np.max(np.abs(c - c[::-1])) <= tol)


class BoosterKind(str, enum.Enum):
    ORIGINAL = "original"
    LOW = "low"
    HIGH = "high"
    ALL = "all"


@dataclass(frozen=True)
class BoosterMethod:
    """One of the eight processing methods: Original, Low/High at each
    Fc in {250, 500, 1000} Hz, and All (Fc fixed at 250 for keying)."""

    kind: BoosterKind
    fc_hz: int = 250

    def __post_init__(self):
        if self.fc_hz not in CUTOFF_CHOICES:
            raise ParameterError(f"unsupported crossover frequency {self.fc_hz}")
        if self.kind in (BoosterKind.ORIGINAL, BoosterKind.ALL) and self.fc_hz != 250:
            raise ParameterError(f"{self.kind.value} is keyed at fc 250 only")

    @property
    def key(self) -> str:
        if self.kind is BoosterKind.ORIGINAL:
            return "original"
        return f"{self.kind.value}{self.fc_hz}"

    @classmethod
    def parse(cls, key: str) -> "BoosterMethod":
        key = key.strip().lower()
        if key == "original":
            return cls(BoosterKind.ORIGINAL)
        if key == "all250" or key == "all":
            return cls(BoosterKind.ALL)
        for kind in (BoosterKind.LOW, BoosterKind.HIGH):
            if key.startswith(kind.value):
                try:
                    fc = int(key[len(kind.value):])
                except ValueError:
                    break
                return cls(kind, fc)
        raise ParameterError(f"unknown booster method {key!r}")

    @classmethod
    def all_methods(cls) -> list["BoosterMethod"]:
        """Canonical ordering: Original, Low x3, High x3, All."""
        methods = [cls(BoosterKind.ORIGINAL)]
        methods += [cls(BoosterKind.LOW, fc) for fc in CUTOFF_CHOICES]
        methods += [cls(BoosterKind.HIGH, fc) for fc in CUTOFF_CHOICES]
        methods.append(cls(BoosterKind.ALL))
        return methods


@dataclass(frozen=True)
class BandCoefficients:
    """Signs applied to the low and high band before summation."""

    low: int
    high: int

    def __post_init__(self):
        if self.low not in (-1, 1) or self.high not in (-1, 1):
            raise ParameterError("band coefficients are restricted to +-1")


def band_coefficients(method: BoosterMethod) -> BandCoefficients:
    """Band signs for the processed ear: Original [1,1], Low [-1,1],
    High [1,-1], All [-1,-1]."""
    return {
        BoosterKind.ORIGINAL: BandCoefficients(1, 1),
        BoosterKind.LOW: BandCoefficients(-1, 1),
        BoosterKind.HIGH: BandCoefficients(1, -1),
        BoosterKind.ALL: BandCoefficients(-1, -1),
    }[method.kind]


@dataclass(frozen=True)
class ResponseCurve:
    freq_hz: np.ndarray
    magnitude_db: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freq_hz, dtype=np.float64)
        m = np.asarray(self.magnitude_db, dtype=np.float64)
        if f.shape != m.shape:
            raise ParameterError("frequency and magnitude grids differ in length")
        object.__setattr__(self, "freq_hz", f)
        object.__setattr__(self, "magnitude_db", m)


def design_lowpass_fir(fc_hz: float, sample_rate_hz: int, taps: int) -> FirFilter:
    """Design a Blackman windowed-sinc lowpass, normalized to unity DC gain.

    The -6 dB point lands at fc_hz; with 513 taps the stopband floor sits
    around -74 dB, comfortably below the -55 dB requirement.
    """
    if taps < 3 or taps % 2 == 0:
        raise ParameterError("taps must be an odd integer >= 3")
    if not 0 < fc_hz < sample_rate_hz / 2:
        raise ParameterError("cutoff must lie strictly between 0 and Nyquist")
    mid = (taps - 1) // 2
    n = np.arange(taps) - mid
    ideal = (2.0 * fc_hz / sample_rate_hz) * np.sinc(2.0 * fc_hz / sample_rate_hz * n)
    h = ideal * np.blackman(taps)
    h /= h.sum()
    return FirFilter(h, float(fc_hz), int(sample_rate_hz))


def derive_complementary_highpass(lpf: FirFilter) -> FirFilter:
    """Highpass as a delayed unit impulse minus the lowpass.

    By construction low + high is an exact unit impulse at the common
    group delay, which guarantees bit-transparent reconstruction when the
    two band outputs are summed with coefficients [+1, +1].
    """
    if not lpf.is_linear_phase():
        raise ParameterError("complementary construction requires a symmetric lowpass")
    h = -np.asarray(lpf.coefficients)
    h = h.copy()
    h[lpf.group_delay_samples] += 1.0
    return FirFilter(h, lpf.cutoff_hz, lpf.sample_rate_hz)


@lru_cache(maxsize=32)
def design_crossover(fc_hz: float, sample_rate_hz: int, taps: int) -> tuple[FirFilter, FirFilter]:
    """(lowpass, highpass) pair sharing length and group delay."""
    lpf = design_lowpass_fir(fc_hz, sample_rate_hz, taps)
    return lpf, derive_complementary_highpass(lpf)


def apply_fir(buffer: AudioBuffer, filt: FirFilter) -> AudioBuffer:
    """Convolve with zero-padded history, truncated to the input length.

    Output sample k is sum_m h[m] * x[k-m]; the result carries the
    filter's group delay.
    """
    if buffer.sample_rate_hz != filt.sample_rate_hz:
        raise ParameterError("buffer and filter sample rates differ")
    y = np.convolve(buffer.samples, filt.coefficients)[: len(buffer)]
    return AudioBuffer(y, buffer.sample_rate_hz)


def recombine_bands(low: AudioBuffer, high: AudioBuffer,
                    coeffs: BandCoefficients) -> AudioBuffer:
    if len(low) != len(high):
        raise ParameterError("band buffers differ in length")
    if low.sample_rate_hz != high.sample_rate_hz:
        raise ParameterError("band buffers differ in sample rate")
    out = coeffs.low * low.samples + coeffs.high * high.samples
    return AudioBuffer(out, low.sample_rate_hz)


def _split_and_sum(buffer: AudioBuffer, lpf: FirFilter, hpf: FirFilter,
                   coeffs: BandCoefficients) -> AudioBuffer:
    low = apply_fir(buffer, lpf)
    high = apply_fir(buffer, hpf)
    return recombine_bands(low, high, coeffs)


def apply_booster(stimulus: StereoBuffer, method: BoosterMethod,
                  taps: int = DEFAULT_TAPS) -> StereoBuffer:
    """Run both ears through the band-split chain; invert bands on the
    left ear only, per the method.

    The right ear is split and summed with [+1, +1] purely to match the
    left ear's group delay, so both outputs are delayed (taps-1)/2
    samples regardless of method.
    """
    lpf, hpf = design_crossover(float(method.fc_hz), stimulus.sample_rate_hz, taps)
    left = _split_and_sum(stimulus.left, lpf, hpf, band_coefficients(method))
    right = _split_and_sum(stimulus.right, lpf, hpf, BandCoefficients(1, 1))
    return StereoBuffer(left, right)


def frequency_response(filt: FirFilter,
                       band_coeffs: BandCoefficients | None = None,
                       grid_points: int = 4096,
                       min_freq_hz: float = 10.0) -> ResponseCurve:
    """Magnitude response on a log-spaced grid up to Nyquist.

    Without band_coeffs this is the response of ``filt`` itself.  With
    band_coeffs, ``filt`` is taken as the lowpass of a complementary
    pair and the response of low*L + high*H is returned, which exposes
    the crossover dip when the signs differ.
    """
    if grid_points < 2:
        raise ParameterError("grid needs at least two points")
    if band_coeffs is None:
        seq = np.asarray(filt.coefficients)
    else:
        hpf = derive_complementary_highpass(filt)
        seq = band_coeffs.low * filt.coefficients + band_coeffs.high * hpf.coefficients
    fs = filt.sample_rate_hz
    freqs = np.geomspace(min_freq_hz, fs / 2.0, grid_points)
    n = np.arange(len(seq))
    phases = np.exp(-2j * np.pi * np.outer(freqs, n) / fs)
    mags = np.abs(phases @ seq)
    mag_db = 20.0 * np.log10(np.maximum(mags, 1e-15))
    return ResponseCurve(freqs, mag_db)
