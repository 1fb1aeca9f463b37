"""Formant extraction: WAV input, power spectra, LPC and the begin/end protocol."""

from .audio import AudioClip, AudioError, read_wav, write_wav
from .formants import (
    AnalysisConfig,
    DoublePeak,
    Formant,
    FormantSet,
    analyze,
    combine_begin_end,
    extract_formants,
    extract_formants_protocol,
    formants_from_lpc,
)
from .lpc import LpcError, LpcModel, levinson_durbin, lpc_from_spectrum, refine_discrete_all_pole
from .spectrum import PowerSpectrum, apply_notches, power_spectrum
from .synthesis import resonator_polynomial, synth_vowel

__all__ = [
    "AnalysisConfig",
    "AudioClip",
    "AudioError",
    "DoublePeak",
    "Formant",
    "FormantSet",
    "LpcError",
    "LpcModel",
    "PowerSpectrum",
    "analyze",
    "apply_notches",
    "combine_begin_end",
    "extract_formants",
    "extract_formants_protocol",
    "formants_from_lpc",
    "levinson_durbin",
    "lpc_from_spectrum",
    "power_spectrum",
    "read_wav",
    "refine_discrete_all_pole",
    "resonator_polynomial",
    "synth_vowel",
    "write_wav",
]
