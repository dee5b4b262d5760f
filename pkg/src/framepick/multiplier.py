"""Sparse frame-multiplier masks between two coefficient grids.

The mask solves, independently for every coefficient,

    min_m  1/2 (|c2| - m |c1|)^2 + lam |m - 1|

whose solution is a soft threshold of the magnitude ratio ``|c2|/|c1|``
towards 1 with threshold ``lam / |c1|^2``. Only magnitudes enter; phases
of the coefficients are ignored.
"""

from __future__ import annotations

import numpy as np

from .errors import InputShapeError, ParameterError

__all__ = [
    "estimate_mask",
    "estimate_mask_spatial",
    "mask_objective",
    "trivial_floor",
    "REDUCERS",
]

#: relative size below which a coefficient counts as zero
TRIVIAL_REL = 1e-12
TRIVIAL_ABS = 1e-300

REDUCERS = ("linear", "median")


def _grid_axes(arr):
    return (-2, -1) if arr.ndim >= 2 else None


def trivial_floor(mag):
    """Per-grid magnitude floor: 1e-12 times the grid maximum (at least 1e-300).

    The last two axes form one grid; leading axes are batch axes.
    """
    axes = _grid_axes(mag)
    peak = np.max(mag, axis=axes, keepdims=axes is not None) if mag.size else 0.0
    return TRIVIAL_REL * np.maximum(peak, TRIVIAL_ABS)


def _safe_ratio(num, den, trivial):
    out = np.ones(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=~trivial)
    return out


def _shrink(y, y_ref, c1_ref_sq, lam, trivial):
    # m = (y - 1) * (1 - lam / (|c1_ref|^2 |y_ref - 1|))^+ + 1, evaluated
    # through the equivalent test |y_ref - 1| > lam / |c1_ref|^2 so that
    # the keep/drop decision is exact.
    dev = np.abs(y_ref - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        thresh = lam / c1_ref_sq
        keep = (dev > thresh) & ~trivial
        factor = np.where(keep, 1.0 - thresh / np.where(keep, dev, 1.0), 0.0)
    return np.where(keep, (y - 1.0) * factor + 1.0, 1.0)


def _check_lambda(lam):
    lam = np.asarray(lam, dtype=float)
    if np.any(~(lam > 0)) or np.any(~np.isfinite(lam)):
        raise ParameterError(f"lambda must be positive and finite, got {lam}")
    return lam


def estimate_mask(c1, c2, lam):
    """Closed-form sparse multiplier mask taking `c1` to `c2`.

    Parameters
    ----------
    c1, c2 : array_like
        Coefficient grids of equal shape. The last two axes are one grid;
        leading axes are a batch of independent grids.
    lam : float or array_like
        Positive regularisation weight, broadcastable against the batch
        (e.g. shape ``(n, 1, 1)`` for one value per grid).

    Returns
    -------
    numpy.ndarray
        Real mask, equal to 1 wherever ``|c1|`` is trivial.
    """
    c1 = np.asarray(c1)
    c2 = np.asarray(c2)
    if c1.shape != c2.shape:
        raise InputShapeError(f"grid shapes differ: {c1.shape} vs {c2.shape}")
    lam = _check_lambda(lam)
    a1 = np.abs(c1)
    a2 = np.abs(c2)
    trivial = a1 <= trivial_floor(a1)
    y = _safe_ratio(a2, a1, trivial)
    return _shrink(y, y, a1 * a1, lam, trivial)


def estimate_mask_spatial(c1, c2, neighbor_c1, neighbor_c2, weights, lam, reducer="linear"):
    """Mask whose threshold pools ratios and coefficients of neighbouring spots.

    With ``y_j = |c2_j| / |c1_j|`` the pooled quantities are
    ``y_pool = sum_j w_j y_j`` and ``c1_pool = sum_j w_j c1_j`` for the
    linear reducer, or elementwise medians (real and imaginary parts
    separately for ``c1_pool``) for ``reducer="median"``. The mask is then
    ``(y - 1) * (1 - lam / (|c1_pool|^2 |y_pool - 1|))^+ + 1`` with ``y``
    taken at the centre spot.

    `neighbor_c1` and `neighbor_c2` are sequences (or stacked arrays with
    the neighbour axis first) that include the centre spot itself.
    Ratio terms of a neighbour whose ``|c1_j|`` is trivial count as 1.
    """
    c1 = np.asarray(c1)
    c2 = np.asarray(c2)
    nc1 = np.asarray(neighbor_c1)
    nc2 = np.asarray(neighbor_c2)
    w = np.asarray(weights, dtype=float)
    if c1.shape != c2.shape:
        raise InputShapeError(f"grid shapes differ: {c1.shape} vs {c2.shape}")
    if nc1.shape != nc2.shape or nc1.shape[1:] != c1.shape:
        raise InputShapeError("neighbour grids must match the centre grid shape")
    if w.ndim != 1 or w.shape[0] != nc1.shape[0]:
        raise ParameterError(f"{w.shape[0] if w.ndim else 0} weights for {nc1.shape[0]} neighbours")
    if reducer not in REDUCERS:
        raise ParameterError(f"unknown reducer {reducer!r}")
    lam = _check_lambda(lam)

    a1 = np.abs(c1)
    trivial = a1 <= trivial_floor(a1)
    y = _safe_ratio(np.abs(c2), a1, trivial)

    na1 = np.abs(nc1)
    ratios = _safe_ratio(np.abs(nc2), na1, na1 <= trivial_floor(na1))
    if reducer == "linear":
        # fixed summation order keeps results independent of batch layout
        y_pool = w[0] * ratios[0]
        c1_pool = w[0] * nc1[0]
        for j in range(1, w.shape[0]):
            y_pool = y_pool + w[j] * ratios[j]
            c1_pool = c1_pool + w[j] * nc1[j]
    else:
        y_pool = np.median(ratios, axis=0)
        if np.iscomplexobj(nc1):
            c1_pool = np.median(nc1.real, axis=0) + 1j * np.median(nc1.imag, axis=0)
        else:
            c1_pool = np.median(nc1, axis=0)
    pool_abs = np.abs(c1_pool)
    trivial = trivial | (pool_abs <= trivial_floor(a1))
    return _shrink(y, y_pool, pool_abs * pool_abs, lam, trivial)


def mask_objective(c1, c2, m, lam):
    """``1/2 || |c2| - m |c1| ||^2 + lam ||m - 1||_1``."""
    a1 = np.abs(np.asarray(c1))
    a2 = np.abs(np.asarray(c2))
    m = np.asarray(m, dtype=float)
    if a1.shape != a2.shape or m.shape != a1.shape:
        raise InputShapeError("c1, c2 and m must share one shape")
    return float(0.5 * np.sum((a2 - m * a1) ** 2) + lam * np.sum(np.abs(m - 1.0)))
