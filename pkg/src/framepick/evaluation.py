"""Scoring detected peak lists against annotated references."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

__all__ = ["MatchResult", "EvalReport", "match_peaks", "score", "f1_score", "evaluate_many"]


@dataclass
class MatchResult:
    """Outcome of matching: (detected, reference) pairs plus leftovers."""

    matches: list
    unmatched_detected: list
    unmatched_reference: list

    @property
    def n_correct(self):
        return len(self.matches)

    @property
    def n_detected(self):
        return len(self.matches) + len(self.unmatched_detected)

    @property
    def n_reference(self):
        return len(self.matches) + len(self.unmatched_reference)


def match_peaks(detected, reference, rel_tol=0.01):
    """Greedy one-to-one matching by descending detected score.

    Each detected peak takes the nearest still-unmatched reference peak
    with ``|mz_d - mz_r| <= rel_tol * mz_r``. Ties on distance go to the
    lower reference m/z, so the result does not depend on reference order.
    """
    if not rel_tol > 0:
        raise ParameterError("rel_tol must be positive")
    refs = sorted(reference, key=lambda p: p.mz)
    ref_mz = np.array([p.mz for p in refs], dtype=float)
    used = np.zeros(len(refs), dtype=bool)
    order = sorted(range(len(detected)), key=lambda i: (-detected[i].score, detected[i].mz))
    matches, missed = [], []
    for i in order:
        d = detected[i]
        if ref_mz.size:
            dist = np.abs(ref_mz - d.mz)
            ok = (dist <= rel_tol * ref_mz) & ~used
        else:
            ok = np.zeros(0, dtype=bool)
        if ok.any():
            j = int(np.flatnonzero(ok)[np.argmin(dist[ok])])
            used[j] = True
            matches.append((d, refs[j]))
        else:
            missed.append(d)
    leftover = [r for r, u in zip(refs, used) if not u]
    return MatchResult(matches, missed, leftover)


def f1_score(sensitivity, fdr):
    """Harmonic mean of ``1 - fdr`` and `sensitivity` (0 when both vanish)."""
    precision = 1.0 - fdr
    if precision + sensitivity == 0:
        return 0.0
    return 2.0 * precision * sensitivity / (precision + sensitivity)


def _rates(n_reference, n_detected, n_correct):
    if n_reference == 0:
        sens = 1.0 if n_detected == 0 else 0.0
    else:
        sens = n_correct / n_reference
    fdr = 0.0 if n_detected == 0 else (n_detected - n_correct) / n_detected
    return sens, fdr, f1_score(sens, fdr)


@dataclass
class EvalReport:
    """Sensitivity, FDR and F1 with the underlying counts.

    For multi-spectrum reports the rates come from pooled counts, and
    ``mean_*`` hold the averages of the per-spectrum rates.
    """

    sensitivity: float
    fdr: float
    f1: float
    n_reference: int
    n_detected: int
    n_correct: int
    n_false: int
    per_spectrum: list = field(default_factory=list)
    mean_sensitivity: float | None = None
    mean_fdr: float | None = None
    mean_f1: float | None = None

    @classmethod
    def from_counts(cls, n_reference, n_detected, n_correct):
        if not 0 <= n_correct <= min(n_reference, n_detected):
            raise ParameterError("inconsistent match counts")
        sens, fdr, f1 = _rates(n_reference, n_detected, n_correct)
        return cls(sens, fdr, f1, n_reference, n_detected, n_correct, n_detected - n_correct)

    def to_dict(self):
        out = {k: getattr(self, k) for k in (
            "sensitivity", "fdr", "f1", "n_reference", "n_detected", "n_correct", "n_false")}
        if self.per_spectrum:
            out["mean_sensitivity"] = self.mean_sensitivity
            out["mean_fdr"] = self.mean_fdr
            out["mean_f1"] = self.mean_f1
            out["per_spectrum"] = [r.to_dict() for r in self.per_spectrum]
        return out

    def format(self):
        lines = [
            f"spectra      {max(1, len(self.per_spectrum))}",
            f"reference    {self.n_reference}",
            f"detected     {self.n_detected}",
            f"correct      {self.n_correct}",
            f"false        {self.n_false}",
            f"sensitivity  {self.sensitivity:.4f}",
            f"fdr          {self.fdr:.4f}",
            f"f1           {self.f1:.4f}",
        ]
        if self.per_spectrum:
            lines.append(f"mean f1      {self.mean_f1:.4f}")
        return "\n".join(lines)


def score(result):
    """EvalReport of one :class:`MatchResult`."""
    return EvalReport.from_counts(result.n_reference, result.n_detected, result.n_correct)


def evaluate_many(detected_lists, reference_lists, rel_tol=0.01):
    """Pooled report over spectra, with the per-spectrum reports attached."""
    if len(detected_lists) != len(reference_lists):
        raise ParameterError("need one detected list per reference list")
    parts = [score(match_peaks(d, r, rel_tol)) for d, r in zip(detected_lists, reference_lists)]
    n_ref = sum(p.n_reference for p in parts)
    n_det = sum(p.n_detected for p in parts)
    n_cor = sum(p.n_correct for p in parts)
    report = EvalReport.from_counts(n_ref, n_det, n_cor)
    report.per_spectrum = parts
    if parts:
        report.mean_sensitivity = math.fsum(p.sensitivity for p in parts) / len(parts)
        report.mean_fdr = math.fsum(p.fdr for p in parts) / len(parts)
        report.mean_f1 = math.fsum(p.f1 for p in parts) / len(parts)
    return report
