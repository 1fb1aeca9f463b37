"""Welch-averaged power spectra and spectral notching."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
import scipy.signal

from .audio import AudioClip, AudioError


@dataclass(frozen=True, eq=False)
class PowerSpectrum:
    """One-sided power on the uniform grid ``k * fs / window_len``, k = 0..window_len/2.

    Interior bins carry the power of both the positive and negative
    frequency, so ``power.sum()`` equals the mean windowed frame energy.
    """

    freqs: np.ndarray
    power: np.ndarray
    sample_rate: int
    window_len: int
    n_frames: int = 1

    def __post_init__(self):
        if len(self.freqs) != len(self.power):
            raise ValueError("frequency grid and power lengths differ")
        if np.any(self.power < 0):
            raise ValueError("power must be nonnegative")

    @property
    def df(self) -> float:
        return self.sample_rate / self.window_len

    def two_sided_half(self) -> np.ndarray:
        """Per-bin |X_k|^2 / N for k = 0..N/2 (interior bins halved)."""
        p = self.power.copy()
        p[1:-1] *= 0.5
        return p

    def autocorrelation(self, n_lags: int) -> np.ndarray:
        r = np.fft.irfft(self.two_sided_half(), n=self.window_len) * self.window_len
        return r[:n_lags]

    def with_power(self, power) -> "PowerSpectrum":
        return PowerSpectrum(self.freqs, np.asarray(power, dtype=float), self.sample_rate,
                             self.window_len, self.n_frames)


def _frames(x, window_len, hop):
    return sliding_window_view(x, window_len)[::hop]


def power_spectrum(clip: AudioClip, window_len: int = 1024, hop: int | None = None,
                   window: str = "hann") -> PowerSpectrum:
    """Average of ``|FFT(w * frame)|^2 / N`` over frames spaced ``hop`` apart."""
    n = int(window_len)
    if n < 2 or n & (n - 1):
        raise AudioError(f"window length must be a power of two, got {window_len}")
    if len(clip.samples) < n:
        raise AudioError(f"clip of {len(clip.samples)} samples is shorter than one window ({n})")
    hop = n // 2 if hop is None else int(hop)
    if hop < 1:
        raise AudioError("hop must be >= 1")
    w = scipy.signal.get_window(window, n, fftbins=True)
    fr = _frames(clip.samples, n, hop) * w
    X = np.fft.rfft(fr, axis=1)
    p = (np.abs(X) ** 2).mean(axis=0) / n
    p[1:-1] *= 2.0
    freqs = np.arange(n // 2 + 1) * clip.sample_rate / n
    return PowerSpectrum(freqs, p, clip.sample_rate, n, len(fr))


def frame_energies(clip: AudioClip, window_len: int = 1024, hop: int | None = None,
                   window: str = "hann") -> np.ndarray:
    """Windowed time-domain energy of each frame ``sum((w * frame)**2)``."""
    hop = window_len // 2 if hop is None else hop
    w = scipy.signal.get_window(window, window_len, fftbins=True)
    return ((_frames(clip.samples, window_len, hop) * w) ** 2).sum(axis=1)


def apply_notches(spectrum: PowerSpectrum, notches) -> PowerSpectrum:
    """Replace each band ``(center_hz, width_hz)`` by a log-linear bridge between its edges.

    Used to remove known contaminating resonances before LPC.
    """
    if not notches:
        return spectrum
    f = spectrum.freqs
    out = spectrum.power.copy()
    logp = np.log(np.maximum(out, out.max() * 1e-15 + 1e-300))
    for center, width in notches:
        if width <= 0:
            raise ValueError("notch width must be positive")
        lo, hi = center - width / 2, center + width / 2
        inside = np.nonzero((f >= lo) & (f <= hi))[0]
        if len(inside) == 0:
            continue
        i0, i1 = max(inside[0] - 1, 0), min(inside[-1] + 1, len(f) - 1)
        seg = np.interp(f[i0:i1 + 1], [f[i0], f[i1]], [logp[i0], logp[i1]])
        logp[i0 + 1:i1] = seg[1:-1]
        out[i0 + 1:i1] = np.exp(seg[1:-1])
    return spectrum.with_power(out)
