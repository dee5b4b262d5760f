"""Slice-pair mask estimation along a spectrum and peak extraction.

A spectrum is cut into overlapping slices; the multiplier mask between
each slice and its successor is estimated in the frame domain, and the
negative mask deviations, summed over channels, give a per-bin indicator
``z``. Local maxima of ``z`` are the detected peaks.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InputShapeError,
    InsufficientLengthError,
    ParameterError,
    UnattainableTargetError,
)
from .frames import mad_noise_sigma
from .multiplier import estimate_mask, trivial_floor

__all__ = [
    "SliceConfig",
    "LambdaPolicy",
    "Peak",
    "slice_spectrum",
    "slice_starts",
    "spectrum_coefficients",
    "pair_scores",
    "pick_spectrum",
    "resolve_lambda",
    "extract_peaks",
    "count_peaks",
    "tune_lambda",
    "DEFAULT_LAMBDA",
]

log = logging.getLogger(__name__)

DEFAULT_LAMBDA = 1.5e-3
LAMBDA_FLOOR = 1e-15
TUNE_RANGE = (1e-9, 1e3)
TUNE_MAX_ITER = 60
NOISE_EXCLUDE_QUANTILE = 0.9


def _round_half_up(x):
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class SliceConfig:
    """Slice length `slice_len` (M) and fractional overlap `overlap` (O)."""

    slice_len: int = 60
    overlap: float = 0.5

    def __post_init__(self):
        if self.slice_len < 1:
            raise ParameterError("slice_len must be positive")
        if not 0.0 < self.overlap < 1.0:
            raise ParameterError(f"overlap must lie in (0, 1), got {self.overlap}")
        if self.hop < 1:
            raise ParameterError("overlap too large: hop would be zero")
        if self.overlap < 0.5:
            warnings.warn(
                "overlap below 0.5: rising mask deviations are not revisited by the next pair",
                stacklevel=3,
            )

    @property
    def hop(self):
        return _round_half_up(self.slice_len * (1.0 - self.overlap))

    def n_slices(self, length):
        if length < self.slice_len:
            return 0
        return -(-(length - self.slice_len) // self.hop) + 1


@dataclass(frozen=True)
class LambdaPolicy:
    """How lambda is chosen per slice pair.

    ``fixed`` uses `base_lambda`; ``noise_adaptive`` scales it by the
    squared robust noise level of the pair; ``target_count`` tunes it so a
    spectrum yields `target` peaks.
    """

    mode: str = "fixed"
    base_lambda: float = DEFAULT_LAMBDA
    target: int | None = None

    def __post_init__(self):
        if self.mode not in ("fixed", "noise_adaptive", "target_count"):
            raise ParameterError(f"unknown lambda mode {self.mode!r}")
        if not self.base_lambda > 0:
            raise ParameterError("base_lambda must be positive")
        if (self.mode == "target_count") != (self.target is not None):
            raise ParameterError("target is required exactly when mode is target_count")
        if self.target is not None and self.target < 1:
            raise ParameterError("target must be a positive integer")

    def to_dict(self):
        return {"mode": self.mode, "base_lambda": self.base_lambda, "target": self.target}


@dataclass(frozen=True, order=True)
class Peak:
    bin_index: int
    mz: float
    score: float = field(compare=False)

    def to_dict(self):
        return {"bin": self.bin_index, "mz": self.mz, "score": self.score}


def slice_starts(length, cfg):
    return np.arange(cfg.n_slices(length)) * cfg.hop


def slice_spectrum(f, cfg):
    """Overlapping slices of `f` as an array of shape (K, M).

    The final slice is zero-padded when it runs past the end.
    """
    f = np.asarray(f, dtype=float)
    if f.ndim != 1:
        raise InputShapeError("expected a one-dimensional spectrum")
    L, M = f.shape[0], cfg.slice_len
    if L < M:
        raise InputShapeError(f"spectrum length {L} is shorter than the slice length {M}")
    starts = slice_starts(L, cfg)
    padded = np.zeros(starts[-1] + M)
    padded[:L] = f
    return padded[starts[:, None] + np.arange(M)]


def spectrum_coefficients(f, cfg, frame):
    """Frame coefficients of every slice, shape (K, n_times, n_channels)."""
    if frame.slice_len != cfg.slice_len:
        raise ParameterError(
            f"frame slice length {frame.slice_len} differs from slicing {cfg.slice_len}"
        )
    return frame.analyze(slice_spectrum(f, cfg))


def _pair_noise_sigma(c1, c2):
    mags = np.abs(np.stack([c1, c2]))
    cut = np.quantile(mags, NOISE_EXCLUDE_QUANTILE)
    exclude = mags > cut
    if exclude.all():
        exclude = np.zeros_like(exclude)
    return mad_noise_sigma(np.stack([c1, c2]), exclude=exclude)


def resolve_lambda(policy, c1, c2):
    """Lambda for one slice pair under a fixed or noise-adaptive policy."""
    if policy.mode == "fixed":
        return policy.base_lambda
    if policy.mode == "noise_adaptive":
        sigma = _pair_noise_sigma(c1, c2)
        return max(policy.base_lambda * sigma * sigma, LAMBDA_FLOOR)
    raise ParameterError("target_count lambdas come from tune_lambda, not resolve_lambda")


def _pair_lambdas(policy, coeffs):
    if policy.mode == "fixed":
        return np.asarray(policy.base_lambda)
    lams = [resolve_lambda(policy, coeffs[i], coeffs[i + 1]) for i in range(len(coeffs) - 1)]
    return np.asarray(lams)[:, None, None]


def pair_scores(masks):
    """Per-time score ``sum_l |min(0, m - 1)|`` of each pair mask."""
    return np.sum(np.abs(np.minimum(masks - 1.0, 0.0)), axis=-1)


def edge_guard(cfg, frame):
    """Time indices at each slice end whose scores yield to interior ones.

    Near the slice ends the periodic analysis wraps a peak cut off at one
    end onto the other, producing echoes. Bins covered by the interior of
    some slice take their score from interiors only. The guard never
    exceeds ``(M - H) // 2``, so interiors of consecutive slices still
    tile the spectrum.
    """
    limit = (cfg.slice_len - cfg.hop) // 2
    return max(0, min(frame.wrap_extent, limit))


class _Layout:
    """Spectrum bin of every (pair, time index) cell and its interior flag."""

    def __init__(self, n_pairs, n_times, length, cfg, frame):
        stride = frame.time_stride
        k = np.arange(n_times)
        pos = np.arange(n_pairs)[:, None] * cfg.hop + k[None, :] * stride
        guard = edge_guard(cfg, frame)
        interior = np.broadcast_to((k * stride >= guard) & (k * stride < cfg.slice_len - guard), pos.shape)
        inside = pos < length
        self.length = length
        self.pos_int = pos[interior & inside]
        self.pos_edge = pos[~interior & inside]
        self.sel_int = (interior & inside).ravel()
        self.sel_edge = (~interior & inside).ravel()
        self.covered = np.zeros(length, dtype=bool)
        self.covered[self.pos_int] = True

    def accumulate(self, scores):
        # z[i*H + k*a] = max over pairs of score[i, k]
        flat = np.asarray(scores).ravel()
        z = np.zeros(self.length)
        np.maximum.at(z, self.pos_int, flat[self.sel_int])
        edge = np.zeros(self.length)
        np.maximum.at(edge, self.pos_edge, flat[self.sel_edge])
        return np.where(self.covered, z, edge)


def _require_pairs(n_slices):
    if n_slices < 2:
        raise InsufficientLengthError("need at least two slices to form a slice pair")


def pick_spectrum(f, cfg, frame, policy=None, coeffs=None):
    """Peak indicator ``z`` of one spectrum.

    Parameters
    ----------
    f : array_like
        Intensities, length L.
    cfg : SliceConfig
    frame : GaborFrame or filterbank frame
    policy : LambdaPolicy, optional
        Fixed lambda 1.5e-3 by default.
    coeffs : numpy.ndarray, optional
        Precomputed :func:`spectrum_coefficients` of `f`.

    Returns
    -------
    numpy.ndarray
        Nonnegative indicator of length L.
    """
    policy = policy or LambdaPolicy()
    f = np.asarray(f, dtype=float)
    if coeffs is None:
        coeffs = spectrum_coefficients(f, cfg, frame)
    _require_pairs(len(coeffs))
    lam = _pair_lambdas(policy, coeffs)
    masks = estimate_mask(coeffs[:-1], coeffs[1:], lam)
    scores = pair_scores(masks)
    return _Layout(*scores.shape, f.shape[0], cfg, frame).accumulate(scores)


def _strict_maxima(z):
    z = np.asarray(z, dtype=float)
    if z.size == 0:
        return np.empty(0, dtype=int)
    left = np.concatenate(([-np.inf], z[:-1]))
    right = np.concatenate((z[1:], [-np.inf]))
    return np.flatnonzero((z > left) & (z > right))


def _select_peaks(z, min_score, min_separation):
    idx = _strict_maxima(z)
    idx = idx[z[idx] > min_score]
    # stable sort: ties resolve towards the lower bin
    idx = idx[np.argsort(-z[idx], kind="stable")]
    accepted = []
    taken = np.zeros(z.shape[0], dtype=bool)
    sep = int(min_separation)
    for i in idx:
        if taken[i]:
            continue
        accepted.append(i)
        taken[max(0, i - sep + 1): i + sep] = True
    return accepted


def extract_peaks(z, axis=None, min_score=0.0, min_separation_bins=3):
    """Discrete peaks from an indicator.

    Strict local maxima with score above `min_score` are visited in
    descending score order; a maximum closer than `min_separation_bins`
    to an already accepted one is dropped.

    Returns
    -------
    list of Peak
        Sorted by descending score.
    """
    z = np.asarray(z, dtype=float)
    if axis is None:
        axis = np.arange(z.shape[0], dtype=float)
    axis = np.asarray(axis, dtype=float)
    if axis.shape != z.shape:
        raise InputShapeError(f"axis length {axis.shape} does not match indicator {z.shape}")
    if min_separation_bins < 1:
        raise ParameterError("min_separation_bins must be positive")
    chosen = _select_peaks(z, min_score, min_separation_bins)
    return [Peak(int(i), float(axis[i]), float(z[i])) for i in chosen]


def count_peaks(z, min_score=0.0, min_separation_bins=3):
    return len(_select_peaks(np.asarray(z, dtype=float), min_score, min_separation_bins))


class _SparseDeviations:
    """Negative mask deviations of a spectrum as a function of lambda.

    For a coefficient with ``|c2| < |c1|`` the score contribution is
    ``(e - lam) / |c1|^2`` when positive, with ``e = |c1| (|c1| - |c2|)``.
    Only used to search lambda quickly; final indicators always come from
    :func:`pick_spectrum`.
    """

    def __init__(self, coeffs, length, cfg, frame, noise_scale=None):
        c1 = coeffs[:-1]
        a1 = np.abs(c1)
        a2 = np.abs(coeffs[1:])
        trivial = a1 <= trivial_floor(a1)
        e = a1 * (a1 - a2)
        inv = 1.0 / np.where(trivial, 1.0, a1 * a1)
        if noise_scale is not None:
            e = e / noise_scale[:, None, None]
            inv = inv * noise_scale[:, None, None]
        active = (e > 0) & ~trivial
        n_pairs, n_times, _ = c1.shape
        cell = np.arange(n_pairs * n_times).reshape(n_pairs, n_times)
        self.e = e[active]
        self.inv = inv[active]
        self.cell = np.broadcast_to(cell[..., None], c1.shape)[active]
        self.n_cells = n_pairs * n_times
        self.layout = _Layout(n_pairs, n_times, length, cfg, frame)

    def prune(self, lam):
        """Drop entries that cannot contribute for any lambda >= `lam`."""
        keep = self.e > lam
        self.e, self.inv, self.cell = self.e[keep], self.inv[keep], self.cell[keep]

    def indicator(self, lam):
        on = self.e > lam
        scores = np.bincount(
            self.cell[on], weights=(self.e[on] - lam) * self.inv[on], minlength=self.n_cells
        )
        return self.layout.accumulate(scores)


def _noise_scales(coeffs):
    return np.array([
        max(_pair_noise_sigma(coeffs[i], coeffs[i + 1]) ** 2, LAMBDA_FLOOR)
        for i in range(len(coeffs) - 1)
    ])


def tune_lambda(f, cfg, frame, target_peaks, min_score=0.0, min_separation_bins=3,
                mode="fixed", coeffs=None):
    """Largest lambda whose indicator yields at least `target_peaks` peaks.

    Bisection on log(lambda) over [1e-9, 1e3]; stops as soon as the count
    equals the target. With ``mode="noise_adaptive"`` the returned value is
    the base lambda of a noise-adaptive policy.

    Raises
    ------
    UnattainableTargetError
        If even lambda = 1e-9 gives fewer peaks than requested.
    """
    if target_peaks < 1:
        raise ParameterError("target_peaks must be at least 1")
    if mode not in ("fixed", "noise_adaptive"):
        raise ParameterError(f"cannot tune lambda in mode {mode!r}")
    f = np.asarray(f, dtype=float)
    if coeffs is None:
        coeffs = spectrum_coefficients(f, cfg, frame)
    _require_pairs(len(coeffs))
    scale = _noise_scales(coeffs) if mode == "noise_adaptive" else None
    dev = _SparseDeviations(coeffs, f.shape[0], cfg, frame, scale)

    def count(lam):
        return count_peaks(dev.indicator(lam), min_score, min_separation_bins)

    lo, hi = (math.log(v) for v in TUNE_RANGE)
    n_lo = count(math.exp(lo))
    if n_lo < target_peaks:
        raise UnattainableTargetError(target_peaks, n_lo)
    if n_lo == target_peaks:
        return math.exp(lo)
    n_hi = count(math.exp(hi))
    if n_hi >= target_peaks:
        return math.exp(hi)
    for _ in range(TUNE_MAX_ITER):
        mid = 0.5 * (lo + hi)
        n = count(math.exp(mid))
        if n == target_peaks:
            return math.exp(mid)
        if n > target_peaks:
            lo = mid
            dev.prune(math.exp(lo))
        else:
            hi = mid
    log.debug("lambda search ended without an exact match for %d peaks", target_peaks)
    return math.exp(lo)
