"""Synthetic vowels: an impulse train through a cascade of two-pole resonators."""

from __future__ import annotations

import math

import numpy as np
import scipy.signal

from .audio import AudioClip, AudioError


def resonator_polynomial(formants, sample_rate: float) -> np.ndarray:
    """Denominator of the all-pole cascade for (frequency Hz, bandwidth Hz) pairs."""
    a = np.array([1.0])
    for f, bw in formants:
        if not (0 < f < sample_rate / 2):
            raise AudioError(f"formant {f} Hz outside (0, {sample_rate / 2}) Hz")
        if not bw > 0:
            raise AudioError(f"bandwidth must be positive, got {bw}")
        r = math.exp(-math.pi * bw / sample_rate)
        w = 2 * math.pi * f / sample_rate
        a = np.convolve(a, [1.0, -2 * r * math.cos(w), r * r])
    return a


def synth_vowel(formants, f0: float = 110.0, duration: float = 1.0,
                sample_rate: int = 16000, peak: float = 0.9) -> AudioClip:
    """Impulse train at ``f0`` filtered by the resonances, scaled to ``peak``.

    ``formants`` is a sequence of (frequency, bandwidth) in Hz. Pulses sit at
    the sample nearest each period boundary.
    """
    if not f0 > 0:
        raise AudioError("f0 must be positive")
    if not duration > 0:
        raise AudioError("duration must be positive")
    n = int(round(duration * sample_rate))
    if n == 0:
        raise AudioError("duration shorter than one sample")
    formants = [tuple(f) for f in formants]
    if not formants:
        raise AudioError("at least one formant is required")
    a = resonator_polynomial(formants, sample_rate)
    x = np.zeros(n)
    pulses = np.round(np.arange(0.0, n, sample_rate / f0)).astype(int)
    x[pulses[pulses < n]] = 1.0
    y = scipy.signal.lfilter([1.0], a, x)
    return AudioClip(sample_rate, peak * y / np.abs(y).max())
