"""Semitone discrepancy between computed resonances and measured formants."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def semitone(R: float, F: float) -> float:
    """``12 ln(R/F) / ln 2``; positive when the resonance is above the formant."""
    if not (R > 0 and F > 0):
        raise ValueError(f"frequencies must be positive, got R={R}, F={F}")
    # difference of logs keeps semitone(R, F) == -semitone(F, R) exact
    return 12.0 * (math.log(R) - math.log(F)) / math.log(2.0)


@dataclass(frozen=True)
class DiscrepancyRow:
    label: str
    R: float
    F: float
    D: float


@dataclass(frozen=True)
class DiscrepancyReport:
    rows: tuple
    mean_abs_discrepancy: float
    name: str = ""
    flags: tuple = ()

    @property
    def discrepancies(self) -> np.ndarray:
        return np.array([r.D for r in self.rows])

    @property
    def partial(self) -> bool:
        return bool(self.flags)


def build_report(resonances, formants, name: str = "", labels=None) -> DiscrepancyReport:
    """Pair R_i with F_i index-wise after ascending sort.

    A count mismatch gives a partial report over the common prefix, with a flag.
    """
    R = sorted(float(r) for r in resonances)
    F = sorted(float(f) for f in formants)
    n = min(len(R), len(F))
    flags = ()
    if len(R) != len(F):
        flags = (f"count mismatch: {len(R)} resonances vs {len(F)} formants; "
                 f"compared the lowest {n}",)
    if labels is None:
        labels = [f"{i}" for i in range(1, n + 1)]
    rows = tuple(DiscrepancyRow(str(labels[i]), R[i], F[i], semitone(R[i], F[i])) for i in range(n))
    mean_abs = float(np.mean([abs(r.D) for r in rows])) if rows else float("nan")
    return DiscrepancyReport(rows, mean_abs, name, flags)
