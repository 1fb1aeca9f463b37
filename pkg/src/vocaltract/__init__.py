"""Vocal-tract resonance computation and formant comparison."""

__version__ = "0.1.0"
