"""Baseline removal and intensity normalisation."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DegenerateSpectrumError, ParameterError

__all__ = ["tophat_baseline", "tic_normalize", "DEFAULT_TOPHAT_WINDOW"]

DEFAULT_TOPHAT_WINDOW = 100


def tophat_baseline(f, window_bins=DEFAULT_TOPHAT_WINDOW):
    """Top-hat baseline removal.

    The baseline is the morphological opening of `f` by a flat segment of
    `window_bins` samples; only segments lying entirely inside the signal
    are used, so no padding values leak into the estimate.

    Returns
    -------
    corrected, baseline : numpy.ndarray
        ``corrected = f - baseline``.
    """
    f = np.asarray(f, dtype=float)
    w = int(window_bins)
    if w < 1:
        raise ParameterError(f"window_bins must be positive, got {window_bins}")
    if w > f.shape[-1]:
        raise ParameterError(f"window_bins {w} exceeds spectrum length {f.shape[-1]}")
    eroded = sliding_window_view(f, w, axis=-1).min(axis=-1)
    pad = [(0, 0)] * (f.ndim - 1) + [(w - 1, w - 1)]
    padded = np.pad(eroded, pad, constant_values=-np.inf)
    baseline = sliding_window_view(padded, w, axis=-1).max(axis=-1)
    return f - baseline, baseline


def tic_normalize(f):
    """Scale a spectrum so its total ion count is 1.

    Negative intensities are clamped to zero before summing.
    """
    f = np.asarray(f, dtype=float)
    total = np.clip(f, 0.0, None).sum()
    if not total > 0:
        raise DegenerateSpectrumError("spectrum has no positive intensity")
    return f / total
