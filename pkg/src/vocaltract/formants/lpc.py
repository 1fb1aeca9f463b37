"""Linear prediction from power spectra.

``lpc_from_spectrum`` is the classical autocorrelation method: the inverse
FFT of the power spectrum gives the autocorrelation and the Levinson-Durbin
recursion solves the normal equations.

Voiced spectra are line spectra, and at low pitch the autocorrelation
method drags narrow-band poles (mostly F1) toward the nearest harmonic.
``refine_discrete_all_pole`` corrects this. It refits the all-pole model to
the spectrum sampled only at its harmonic peaks by minimizing the discrete
Itakura-Saito distortion, starting from the autocorrelation solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize
from scipy.ndimage import maximum_filter1d

from .spectrum import PowerSpectrum


class LpcError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LpcModel:
    """A(z) = 1 - sum_k a_k z^-k with prediction error energy ``error``."""

    a: np.ndarray
    error: float
    reflection: np.ndarray
    sample_rate: int | None = None

    def __post_init__(self):
        if not self.error > 0:
            raise LpcError("prediction error energy must be positive")

    @property
    def order(self) -> int:
        return len(self.a)

    @property
    def polynomial(self) -> np.ndarray:
        """Coefficients of A(z) in powers of z^-1: [1, -a_1, ..., -a_p]."""
        return np.concatenate([[1.0], -np.asarray(self.a)])

    def roots(self) -> np.ndarray:
        return np.roots(self.polynomial)

    def envelope(self, freqs, sample_rate=None) -> np.ndarray:
        fs = sample_rate or self.sample_rate
        w = 2 * np.pi * np.asarray(freqs) / fs
        A = np.exp(-1j * np.outer(w, np.arange(self.order + 1))) @ self.polynomial
        return self.error / np.abs(A) ** 2


def levinson_durbin(r, order: int):
    """Solve the Toeplitz normal equations for predictor coefficients.

    Returns ``(a, error, k)`` with ``a[0..p-1]`` the predictor coefficients
    (A(z) = 1 - sum a_k z^-k), ``error = r0 * prod(1 - k_i**2)`` and ``k``
    the reflection coefficients.
    """
    r = np.asarray(r, dtype=float)
    if order < 1:
        raise LpcError("order must be >= 1")
    if len(r) <= order:
        raise LpcError(f"need {order + 1} autocorrelation lags, got {len(r)}")
    if not r[0] > 0:
        raise LpcError("r0 must be positive")
    a = np.zeros(order)
    k = np.zeros(order)
    err = r[0]
    for i in range(order):
        acc = r[i + 1] - np.dot(a[:i], r[i:0:-1])
        ki = acc / err
        if not abs(ki) < 1:
            raise LpcError(f"autocorrelation is not positive definite (|k_{i + 1}| = {abs(ki):.6g})")
        k[i] = ki
        prev = a[:i].copy()
        a[:i] = prev - ki * prev[::-1]
        a[i] = ki
        err *= 1.0 - ki * ki
    if not err > 0:
        raise LpcError("non-positive prediction error")
    return a, float(err), k


def lpc_from_spectrum(spectrum: PowerSpectrum, order: int) -> LpcModel:
    n_lags = spectrum.window_len // 2 + 1
    if order >= n_lags:
        raise LpcError(f"order {order} exceeds available lags ({n_lags})")
    r = spectrum.autocorrelation(order + 1)
    a, err, k = levinson_durbin(r, order)
    return LpcModel(a, err, k, spectrum.sample_rate)


def step_down(poly: np.ndarray) -> np.ndarray:
    """Reflection coefficients of a monic polynomial [1, c_1, ..., c_p] in z^-1."""
    c = np.asarray(poly, dtype=float)[1:].copy()
    p = len(c)
    k = np.zeros(p)
    for i in range(p - 1, -1, -1):
        ki = -c[i]
        k[i] = ki
        if i == 0:
            break
        if abs(ki) >= 1:
            raise LpcError("polynomial is not minimum phase")
        c = (c[:i] + ki * c[:i][::-1]) / (1 - ki * ki)
    return k


def minimum_phase(poly: np.ndarray) -> np.ndarray:
    """Reflect roots outside the unit circle to 1/conj(z); |A| changes only by a constant."""
    z = np.roots(poly)
    out = np.abs(z) >= 1
    if not np.any(out):
        return np.asarray(poly, dtype=float)
    z[out] = 1.0 / np.conj(z[out])
    # keep roots off the circle itself
    mag = np.abs(z)
    z = np.where(mag > 1 - 1e-9, z / mag * (1 - 1e-9), z)
    return np.real(np.poly(z))


def harmonic_peaks(spectrum: PowerSpectrum, min_spacing_hz: float = 90.0,
                   dynamic_range_db: float = 80.0, fmax: float | None = None):
    """Local maxima at least ``min_spacing_hz`` apart, refined by log-parabolic interpolation.

    Returns (frequencies Hz, power).
    """
    p = spectrum.power
    floor = p.max() * 10 ** (-dynamic_range_db / 10)
    L = np.log(np.maximum(p, floor))
    half = max(1, int(round(0.5 * min_spacing_hz / spectrum.df)))
    mf = maximum_filter1d(L, 2 * half + 1, mode="nearest")
    i = np.nonzero(L[1:-1] == mf[1:-1])[0] + 1
    i = i[L[i] > np.log(floor) + 1e-9]
    a, b, c = L[i - 1], L[i], L[i + 1]
    den = a - 2 * b + c
    d = np.where(den < 0, 0.5 * (a - c) / np.where(den < 0, den, -1), 0.0)
    d = np.clip(d, -0.5, 0.5)
    f = (i + d) * spectrum.df
    lp = b - 0.25 * (a - c) * d
    if fmax is not None:
        keep = f <= fmax
        f, lp = f[keep], lp[keep]
    return f, np.exp(lp)


def refine_discrete_all_pole(spectrum: PowerSpectrum, model: LpcModel,
                             min_spacing_hz: float = 90.0, max_iter: int = 400) -> LpcModel:
    """Refit ``model`` to the harmonic peaks of ``spectrum`` (discrete Itakura-Saito fit).

    With gain optimized in closed form the objective over the predictor is
    ``log(mean(P_m |A_m|^2)) - mean(log |A_m|^2)``. The result is made
    minimum phase. Falls back to ``model`` if too few peaks are found.
    """
    fs = spectrum.sample_rate
    f, P = harmonic_peaks(spectrum, min_spacing_hz)
    p = model.order
    if len(f) < p + 1:
        return model
    w = 2 * np.pi * f / fs
    E = np.exp(-1j * np.outer(w, np.arange(p + 1)))
    scale = P.mean()
    P = P / scale

    def objective(c):
        poly = np.concatenate([[1.0], c])
        Aw = E @ poly
        A2 = np.abs(Aw) ** 2
        m = np.mean(P * A2)
        G = 2 * np.real(np.conj(Aw)[:, None] * E[:, 1:])
        g = (P[:, None] * G).mean(axis=0) / m - (G / A2[:, None]).mean(axis=0)
        return np.log(m) - np.mean(np.log(A2)), g

    res = scipy.optimize.minimize(objective, model.polynomial[1:], jac=True, method="BFGS",
                                  options={"maxiter": max_iter, "gtol": 1e-10})
    poly = minimum_phase(np.concatenate([[1.0], res.x]))
    Aw = E @ poly
    gain = float(np.mean(P * np.abs(Aw) ** 2) * scale)
    k = step_down(poly)
    return LpcModel(-poly[1:], gain, k, fs)
