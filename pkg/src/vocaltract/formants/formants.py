"""Formant candidates from LPC roots and the begin/end averaging protocol."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .audio import AudioClip, AudioError
from .lpc import LpcModel, lpc_from_spectrum, refine_discrete_all_pole
from .spectrum import apply_notches, power_spectrum

FORMANT_BAND = (90.0, 5000.0)


@dataclass(frozen=True)
class Formant:
    frequency: float
    bandwidth: float = float("nan")
    # half distance |begin - end| / 2; nan when estimated from one clip
    spread: float = float("nan")
    source: str = "single"  # single | both | begin | end | merged
    # sign of (begin - end): shown as "±" for +1 or 0 and "∓" for -1
    trend: int = 0

    @property
    def paired(self) -> bool:
        return self.source == "both"

    @property
    def signed_spread(self) -> float:
        """(begin - end) / 2."""
        return self.spread if self.trend >= 0 else -self.spread

    def display(self, digits: int = 0) -> str:
        f = f"{self.frequency:.{digits}f}"
        if self.paired and self.spread == self.spread:
            s = f"{self.spread:.{digits}f}"
            sign = "∓" if self.trend < 0 and float(s) != 0 else "±"
            return f"{f} {sign} {s}"
        return f


@dataclass(frozen=True)
class DoublePeak:
    low: float
    high: float

    @property
    def mean(self) -> float:
        return 0.5 * (self.low + self.high)


@dataclass(frozen=True)
class FormantSet:
    formants: tuple = ()
    double_peaks: tuple = ()
    flags: tuple = ()

    def __post_init__(self):
        fs = [f.frequency for f in self.formants]
        if fs != sorted(fs):
            raise ValueError("formants must be sorted ascending")

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([f.frequency for f in self.formants])

    def __len__(self):
        return len(self.formants)

    def merged_double_peaks(self) -> "FormantSet":
        """Replace each flagged double peak by a single formant at its mean."""
        if not self.double_peaks:
            return self
        out = list(self.formants)
        for dp in self.double_peaks:
            lo = next((f for f in out if f.frequency == dp.low), None)
            hi = next((f for f in out if f.frequency == dp.high), None)
            if lo is None or hi is None:
                continue
            out.remove(lo)
            out.remove(hi)
            out.append(Formant(dp.mean, max(lo.bandwidth, hi.bandwidth), source="merged"))
        out.sort(key=lambda f: f.frequency)
        return FormantSet(tuple(out), (), self.flags + ("double peaks merged",))


@dataclass(frozen=True)
class AnalysisConfig:
    lpc_order: int = 18
    analysis_rate: int = 16000
    window_len: int = 1024
    hop: int | None = None
    band: tuple = FORMANT_BAND
    max_bandwidth: float = 500.0
    notches: tuple = ()
    exclude: tuple = ()
    exclude_tol: float = 150.0  # Hz
    double_peak_hz: float = 600.0
    double_peak_db: float = 6.0
    refine: bool = True
    min_harmonic_spacing: float = 90.0  # Hz
    pair_tol_st: float = 5.0


def pole_frequencies(model: LpcModel, sample_rate: float):
    """(frequency Hz, bandwidth Hz) of every root with positive imaginary part."""
    z = model.roots()
    z = z[z.imag > 0]
    f = np.angle(z) * sample_rate / (2 * math.pi)
    b = -(sample_rate / math.pi) * np.log(np.abs(z))
    order = np.argsort(f)
    return f[order], b[order]


def formants_from_lpc(model: LpcModel, sample_rate: float, band=FORMANT_BAND,
                      max_bandwidth: float = 500.0, exclude=(), exclude_tol: float = 150.0,
                      double_peak_hz: float = 600.0, double_peak_db: float = 6.0) -> FormantSet:
    """Formants as LPC pole angles; bandwidth ``-(fs/pi) ln|z|``.

    Candidates outside ``band`` or wider than ``max_bandwidth`` are dropped.
    Each frequency in ``exclude`` removes the nearest candidate within
    ``exclude_tol`` Hz. Neighbours closer than ``double_peak_hz`` whose
    envelope levels differ by at most ``double_peak_db`` are flagged as
    double peaks; they stay in the list individually.
    """
    f, b = pole_frequencies(model, sample_rate)
    keep = (f >= band[0]) & (f <= band[1]) & (b <= max_bandwidth)
    f, b = list(f[keep]), list(b[keep])
    flags = []
    for x in exclude:
        if not f:
            break
        i = int(np.argmin([abs(v - x) for v in f]))
        if abs(f[i] - x) <= exclude_tol:
            flags.append(f"excluded candidate at {f[i]:.1f} Hz (requested {x:g} Hz)")
            del f[i], b[i]
    forms = tuple(Formant(float(fi), float(bi)) for fi, bi in zip(f, b))
    doubles = []
    if len(f) > 1:
        level = 10 * np.log10(model.envelope(f, sample_rate))
        for i in range(len(f) - 1):
            if f[i + 1] - f[i] < double_peak_hz and abs(level[i + 1] - level[i]) <= double_peak_db:
                doubles.append(DoublePeak(float(f[i]), float(f[i + 1])))
    if doubles:
        flags.append(f"{len(doubles)} double peak(s) closer than {double_peak_hz:g} Hz")
    if len(forms) < 4:
        flags.append(f"only {len(forms)} formant(s) found")
    return FormantSet(forms, tuple(doubles), tuple(flags))


def analyze(clip: AudioClip, config: AnalysisConfig = AnalysisConfig()):
    """Spectrum, LPC model and formants of one clip. Returns (FormantSet, LpcModel, PowerSpectrum)."""
    x = clip.resampled(config.analysis_rate) if config.analysis_rate else clip
    spec = power_spectrum(x, config.window_len, config.hop)
    spec = apply_notches(spec, config.notches)
    model = lpc_from_spectrum(spec, config.lpc_order)
    if config.refine:
        model = refine_discrete_all_pole(spec, model, config.min_harmonic_spacing)
    fset = formants_from_lpc(model, x.sample_rate, config.band, config.max_bandwidth,
                             config.exclude, config.exclude_tol,
                             config.double_peak_hz, config.double_peak_db)
    return fset, model, spec


def extract_formants(clip: AudioClip, config: AnalysisConfig = AnalysisConfig()) -> FormantSet:
    return analyze(clip, config)[0]


def _semitones(a, b):
    return 12.0 * math.log2(a / b)


def combine_begin_end(begin: FormantSet, end: FormantSet, pair_tol_st: float = 5.0) -> FormantSet:
    """Average begin/end estimates index-wise in ascending order.

    Two candidates pair when they lie within ``pair_tol_st`` semitones;
    otherwise the lower one is reported alone, marked with the clip it
    came from. The spread is the half distance |begin - end| / 2 and
    ``trend`` records which clip was higher.
    """
    b, e = list(begin.formants), list(end.formants)
    out = []
    flags = []
    i = j = 0
    while i < len(b) or j < len(e):
        if i < len(b) and j < len(e) and abs(_semitones(b[i].frequency, e[j].frequency)) <= pair_tol_st:
            fb, fe = b[i], e[j]
            d = fb.frequency - fe.frequency
            out.append(Formant(0.5 * (fb.frequency + fe.frequency),
                               0.5 * (fb.bandwidth + fe.bandwidth),
                               0.5 * abs(d), "both", int(np.sign(d))))
            i += 1
            j += 1
        elif j >= len(e) or (i < len(b) and b[i].frequency < e[j].frequency):
            out.append(replace(b[i], source="begin", spread=float("nan")))
            flags.append(f"{b[i].frequency:.1f} Hz found in the beginning only (unpaired)")
            i += 1
        else:
            out.append(replace(e[j], source="end", spread=float("nan")))
            flags.append(f"{e[j].frequency:.1f} Hz found in the end only (unpaired)")
            j += 1
    # re-express double peaks in terms of the combined formants
    freqs = np.array([f.frequency for f in out])
    doubles = []
    for dp in begin.double_peaks + end.double_peaks:
        if len(freqs) < 2:
            break
        lo, hi = (float(freqs[np.argmin(np.abs(freqs - v))]) for v in (dp.low, dp.high))
        if lo < hi and DoublePeak(lo, hi) not in doubles:
            doubles.append(DoublePeak(lo, hi))
    doubles = tuple(doubles)
    return FormantSet(tuple(out), doubles, tuple(flags))


def extract_formants_protocol(clip_begin: AudioClip, clip_end: AudioClip,
                              lpc_order: int | None = None, notch_list=None,
                              config: AnalysisConfig = AnalysisConfig()) -> FormantSet:
    """Formants from the beginning and end of a sample, averaged with half-spreads."""
    if lpc_order is not None:
        config = replace(config, lpc_order=int(lpc_order))
    if notch_list is not None:
        config = replace(config, notches=tuple(tuple(n) for n in notch_list))
    sets = []
    for name, clip in (("beginning", clip_begin), ("end", clip_end)):
        n_need = config.window_len * (clip.sample_rate / config.analysis_rate if config.analysis_rate else 1)
        if len(clip.samples) < n_need:
            raise AudioError(f"{name} clip too short for one {config.window_len}-sample window")
        sets.append(extract_formants(clip, config))
    out = combine_begin_end(sets[0], sets[1], config.pair_tol_st)
    clip_flags = tuple(f"{name}: {f}" for name, fs in zip(("beginning", "end"), sets) for f in fs.flags)
    return replace(out, flags=clip_flags + out.flags)
