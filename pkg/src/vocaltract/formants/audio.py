"""Mono PCM audio clips: WAV input/output, segmenting, resampling."""

from __future__ import annotations

import wave
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.io.wavfile
import scipy.signal


class AudioError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class AudioClip:
    sample_rate: int
    samples: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float).ravel()
        if self.sample_rate < 8000:
            raise AudioError(f"sample rate {self.sample_rate} Hz is below 8000 Hz")
        if x.size == 0:
            raise AudioError("audio clip is empty")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def segment(self, start: float, stop: float) -> "AudioClip":
        """Sub-clip between ``start`` and ``stop`` seconds; negative values count from the end."""
        n = len(self.samples)
        i0 = int(round((start if start >= 0 else self.duration + start) * self.sample_rate))
        i1 = int(round((stop if stop >= 0 else self.duration + stop) * self.sample_rate))
        i0, i1 = max(0, i0), min(n, i1)
        if i1 <= i0:
            raise AudioError(f"empty segment [{start}, {stop}] s of a {self.duration:.3f} s clip")
        return AudioClip(self.sample_rate, self.samples[i0:i1])

    def resampled(self, rate: int) -> "AudioClip":
        if rate == self.sample_rate:
            return self
        frac = Fraction(rate, self.sample_rate).limit_denominator(1000)
        y = scipy.signal.resample_poly(self.samples, frac.numerator, frac.denominator)
        return AudioClip(rate, y)


def read_wav(path) -> AudioClip:
    """Read integer PCM WAV (16 or 24 bit, mono or stereo averaged to mono).

    Samples are scaled by 2**(bits-1), so 16-bit full scale is 32767/32768.
    """
    try:
        rate, data = scipy.io.wavfile.read(path)
    except (ValueError, EOFError) as e:
        raise AudioError(f"{path}: unreadable or unsupported WAV: {e}") from None
    if data.dtype.kind == "f":
        raise AudioError(f"{path}: floating-point WAV is not supported (PCM 16/24-bit only)")
    if data.dtype == np.int16:
        scale = 32768.0
    elif data.dtype == np.int32:
        # scipy left-justifies 24-bit samples into int32
        scale = 2147483648.0
    else:
        raise AudioError(f"{path}: unsupported PCM sample type {data.dtype} (16/24-bit only)")
    x = data.astype(float) / scale
    if x.ndim == 2:
        x = x.mean(axis=1)
    return AudioClip(rate, x)


def write_wav(clip: AudioClip, path, bits: int = 16) -> None:
    """Write mono PCM; samples are clipped to the representable range."""
    if bits not in (16, 24):
        raise AudioError("bits must be 16 or 24")
    full = 2 ** (bits - 1)
    q = np.clip(np.round(clip.samples * full), -full, full - 1).astype(np.int32)
    if bits == 16:
        raw = q.astype("<i2").tobytes()
    else:
        b = q.astype("<i4").view(np.uint8).reshape(-1, 4)
        raw = b[:, :3].tobytes()
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(bits // 8)
        w.setframerate(clip.sample_rate)
        w.writeframes(raw)
