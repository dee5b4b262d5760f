"""Neighbourhood kernels on the acquisition grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

__all__ = ["NeighborhoodSpec", "NeighborWeights", "kernel_weights", "resolve_neighbors", "parse_kernel"]

KERNELS = ("average", "gaussian", "disk", "median")


@dataclass(frozen=True)
class NeighborhoodSpec:
    """Square window of odd side `size` with a weighting `kernel`.

    `param` is the standard deviation for ``gaussian`` (default 0.5) and
    the radius for ``disk`` (default ``size // 2``, at least 0.5); it is
    ignored otherwise.
    """

    kernel: str = "average"
    size: int = 3
    param: float | None = None

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ParameterError(f"unknown kernel {self.kernel!r}; expected one of {KERNELS}")
        if self.size < 1 or self.size % 2 == 0:
            raise ParameterError(f"kernel size must be odd and positive, got {self.size}")
        if self.kernel == "gaussian":
            sigma = 0.5 if self.param is None else self.param
            if not sigma > 0:
                raise ParameterError("gaussian sigma must be positive")
            object.__setattr__(self, "param", float(sigma))
        elif self.kernel == "disk":
            radius = max(self.size // 2, 0.5) if self.param is None else self.param
            if not radius > 0:
                raise ParameterError("disk radius must be positive")
            object.__setattr__(self, "param", float(radius))

    @property
    def reducer(self):
        return "median" if self.kernel == "median" else "linear"

    def to_dict(self):
        return {"kernel": self.kernel, "size": self.size, "param": self.param}


@dataclass(frozen=True)
class NeighborWeights:
    offsets: tuple
    weights: np.ndarray

    def __len__(self):
        return len(self.offsets)


def parse_kernel(text, size=3):
    """Parse ``average``, ``median``, ``gaussian[:sigma]`` or ``disk[:radius]``."""
    name, _, arg = text.partition(":")
    param = None
    if arg:
        try:
            param = float(arg)
        except ValueError:
            raise ParameterError(f"bad kernel parameter in {text!r}") from None
    return NeighborhoodSpec(kernel=name, size=size, param=param)


def kernel_weights(spec):
    """Offsets (drow, dcol) of the window and their weights, summing to 1."""
    half = spec.size // 2
    d = np.arange(-half, half + 1)
    dr, dc = np.meshgrid(d, d, indexing="ij")
    dist2 = (dr**2 + dc**2).astype(float)
    if spec.kernel in ("average", "median"):
        w = np.ones_like(dist2)
    elif spec.kernel == "gaussian":
        w = np.exp(-dist2 / (2.0 * spec.param**2))
    else:
        w = (dist2 <= spec.param**2 + 1e-12).astype(float)
    keep = w > 0
    offsets = tuple(zip(dr[keep].tolist(), dc[keep].tolist()))
    w = w[keep]
    return NeighborWeights(offsets=offsets, weights=w / w.sum())


def resolve_neighbors(center, dims, spec, present=None):
    """In-grid neighbours of `center` with renormalised weights.

    Offsets landing outside the grid, or on spots flagged absent in the
    boolean `present` map, are dropped. The centre is always kept.

    Returns
    -------
    coords : list of (row, col)
    weights : NeighborWeights
        Offsets relative to `center`, weights summing to 1.
    """
    rows, cols = dims
    r0, c0 = center
    if not (0 <= r0 < rows and 0 <= c0 < cols):
        raise ParameterError(f"centre {center} outside grid {dims}")
    base = kernel_weights(spec)
    coords, offsets, weights = [], [], []
    for (dr, dc), w in zip(base.offsets, base.weights):
        r, c = r0 + dr, c0 + dc
        if not (0 <= r < rows and 0 <= c < cols):
            continue
        if present is not None and not present[r, c] and (dr, dc) != (0, 0):
            continue
        coords.append((r, c))
        offsets.append((dr, dc))
        weights.append(w)
    weights = np.asarray(weights)
    return coords, NeighborWeights(offsets=tuple(offsets), weights=weights / weights.sum())
