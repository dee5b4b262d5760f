"""Peak picking over a whole acquisition grid.

Spots are processed row by row. In spatial mode the coefficients of the
rows inside the neighbourhood window are cached, so every spot's
coefficients are computed once; basic mode keeps only the spots in flight. Each spot's result depends only on its own inputs,
hence the output is identical for any thread count.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import FramePickError, ParameterError
from .multiplier import estimate_mask, estimate_mask_spatial
from .peakpick import (
    LambdaPolicy,
    _Layout,
    _pair_lambdas,
    _require_pairs,
    pair_scores,
    spectrum_coefficients,
    tune_lambda,
)
from .spatial import resolve_neighbors

log = logging.getLogger(__name__)

__all__ = ["SpotError", "DatasetPick", "pick_dataset", "tune_lambda_dataset"]

#: slice pairs masked at once in spatial mode (bounds peak memory)
PAIR_CHUNK = 32


@dataclass(frozen=True)
class SpotError:
    """Failure of one spot, kept instead of aborting the batch."""

    row: int
    col: int
    kind: str
    message: str

    def to_dict(self):
        return {"row": self.row, "col": self.col, "kind": self.kind, "message": self.message}


@dataclass
class DatasetPick:
    """Indicators of all present spots, in storage order.

    Rows of failed spots are all zero and listed in `errors`; `lambdas`
    holds the lambda used per spot (NaN for failures, and for
    noise-adaptive runs, where it varies per slice pair).
    """

    indicators: np.ndarray
    lambdas: np.ndarray
    errors: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.errors


def _spot_coefficients(f, cfg, frame, preprocess):
    if preprocess is not None:
        f = preprocess(f)
    coeffs = spectrum_coefficients(f, cfg, frame)
    _require_pairs(len(coeffs))
    return coeffs


def _spot_lambda(policy, coeffs, length, cfg, frame, extract):
    if policy.mode == "target_count":
        lam = tune_lambda(np.zeros(length), cfg, frame, policy.target, coeffs=coeffs,
                          **extract)
        return LambdaPolicy("fixed", lam)
    return policy


def _basic(coeffs, length, cfg, frame, policy):
    lam = _pair_lambdas(policy, coeffs)
    scores = pair_scores(estimate_mask(coeffs[:-1], coeffs[1:], lam))
    return _Layout(*scores.shape, length, cfg, frame).accumulate(scores)


def _spatial(coeffs, neighbors, weights, length, cfg, frame, policy, reducer):
    n_pairs = len(coeffs) - 1
    lam_all = np.broadcast_to(_pair_lambdas(policy, coeffs), (n_pairs, 1, 1))
    scores = np.empty((n_pairs, coeffs.shape[1]))
    for s in range(0, n_pairs, PAIR_CHUNK):
        e = min(s + PAIR_CHUNK, n_pairs)
        nc1 = np.stack([c[s:e] for c in neighbors])
        nc2 = np.stack([c[s + 1:e + 1] for c in neighbors])
        masks = estimate_mask_spatial(coeffs[s:e], coeffs[s + 1:e + 1], nc1, nc2,
                                      weights, lam_all[s:e], reducer=reducer)
        scores[s:e] = pair_scores(masks)
    return _Layout(n_pairs, coeffs.shape[1], length, cfg, frame).accumulate(scores)


def _error(coord, exc):
    return SpotError(int(coord[0]), int(coord[1]), type(exc).__name__, str(exc))


def pick_dataset(grid, cfg, frame, policy=None, spatial=None, preprocess=None, threads=1,
                 min_score=0.0, min_separation_bins=3):
    """Indicator of every present spot, basic or spatially aware.

    Parameters
    ----------
    grid : DatasetGrid
    cfg : SliceConfig
    frame : GaborFrame or filterbank frame
    policy : LambdaPolicy, optional
        ``target_count`` tunes lambda per spot on its own (basic) indicator.
    spatial : NeighborhoodSpec, optional
        Enables spatial mode. Neighbours outside the grid, absent or
        failed are dropped and the weights renormalised.
    preprocess : callable, optional
        Applied to each spot's intensities before analysis.
    threads : int
        Worker threads; the result does not depend on it.
    min_score, min_separation_bins
        Peak extraction settings used when tuning lambda.

    Returns
    -------
    DatasetPick
    """
    policy = policy or LambdaPolicy()
    if threads < 1:
        raise ParameterError("threads must be positive")
    if frame.slice_len != cfg.slice_len:
        raise ParameterError(
            f"frame slice length {frame.slice_len} differs from slicing {cfg.slice_len}"
        )
    extract = {"min_score": min_score, "min_separation_bins": min_separation_bins}
    L = grid.length
    index = grid.index_map()
    coords = grid.coords()
    out = np.zeros((grid.n_spots, L))
    lambdas = np.full(grid.n_spots, np.nan)
    errors = {}
    half = spatial.size // 2 if spatial is not None else 0
    rows_present = sorted({r for r, _ in coords})
    cache = {}

    def load(i):
        try:
            return _spot_coefficients(grid.intensities[i], cfg, frame, preprocess)
        except FramePickError as exc:
            return exc

    def fill_rows(pool, upto):
        todo = [r for r in rows_present if r <= upto and r not in cache]
        for r in todo:
            idx = [int(i) for i in index[r] if i >= 0]
            cache[r] = dict(zip(idx, pool.map(load, idx)))

    def run(i):
        coord = coords[i]
        coeffs = load(i) if spatial is None else cache[coord[0]][i]
        if isinstance(coeffs, Exception):
            return i, coeffs, None, None
        try:
            spot_policy = _spot_lambda(policy, coeffs, L, cfg, frame, extract)
            if spatial is None:
                z = _basic(coeffs, L, cfg, frame, spot_policy)
            else:
                ok = np.zeros(grid.dims, dtype=bool)
                for r in range(max(0, coord[0] - half), min(grid.dims[0], coord[0] + half + 1)):
                    for j in index[r] if r in cache else ():
                        if j >= 0 and not isinstance(cache[r][j], Exception):
                            ok[coords[j]] = True
                nb, w = resolve_neighbors(coord, grid.dims, spatial, present=ok)
                neighbors = [cache[r][index[r, c]] for r, c in nb]
                z = _spatial(coeffs, neighbors, w.weights, L, cfg, frame, spot_policy,
                             spatial.reducer)
            lam = spot_policy.base_lambda if spot_policy.mode == "fixed" else np.nan
            return i, None, z, lam
        except FramePickError as exc:
            return i, exc, None, None

    with ThreadPoolExecutor(max_workers=threads) as pool:
        for r in rows_present:
            if spatial is not None:
                fill_rows(pool, r + half)
            idx = [int(i) for i in index[r] if i >= 0]
            for i, exc, z, lam in pool.map(run, idx):
                if exc is not None:
                    errors[i] = _error(coords[i], exc)
                else:
                    out[i] = z
                    lambdas[i] = lam
            for old in [k for k in cache if k < r + 1 - half]:
                del cache[old]
    ordered = [errors[i] for i in sorted(errors)]
    for e in ordered:
        log.warning("spot (%d, %d) failed: %s", e.row, e.col, e.message)
    return DatasetPick(out, lambdas, ordered)


def tune_lambda_dataset(grid, cfg, frame, target_peaks, preprocess=None, **kwargs):
    """One global lambda, tuned on the mean (preprocessed) spectrum of the grid."""
    if grid.n_spots == 0:
        raise ParameterError("dataset has no spectra")
    data = grid.intensities
    if preprocess is not None:
        data = np.stack([preprocess(f) for f in data])
    mean = np.mean(np.asarray(data, dtype=float), axis=0)
    return tune_lambda(mean, cfg, frame, target_peaks, **kwargs)
