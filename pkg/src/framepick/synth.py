"""Annotated synthetic spectra and spatial phantoms.

The generator is a statistical stand-in for TOF data: Gaussian peaks on
an exponentially decaying baseline, with additive Gaussian noise whose
level falls off along the m/z axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import DatasetGrid, Spectrum
from .errors import GenerationError
from .peakpick import Peak

__all__ = [
    "SynthSpec",
    "PhantomSpec",
    "Shape",
    "tof_axis",
    "synth_spectrum",
    "synth_phantom",
    "default_shapes",
]

FWHM_TO_SIGMA = 1.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))


def tof_axis(length, mz_range=(2000.0, 20000.0)):
    """m/z axis of a linear TOF detector: sqrt(m/z) is linear in bin index."""
    lo, hi = np.sqrt(mz_range[0]), np.sqrt(mz_range[1])
    return np.linspace(lo, hi, length) ** 2


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of one synthetic spectrum.

    Peak widths are full widths at half maximum in bins. Noise standard
    deviation is ``noise_sigma0 * exp(-noise_decay * bin)`` and the
    baseline is ``baseline_amp * exp(-bin / baseline_scale)`` (off when
    `baseline_scale` is 0).
    """

    length: int = 15000
    n_peaks: int = 20
    peak_width_bins: tuple = (4.0, 8.0)
    amplitude: tuple = (1.0, 4.0)
    baseline_scale: float = 0.0
    baseline_amp: float = 2.0
    noise_sigma0: float = 0.1
    noise_decay: float = 0.0
    mz_range: tuple = (2000.0, 20000.0)
    seed: int = 0

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def _place_centers(rng, n, length, min_gap, margin):
    span = length - 2 * margin - (n - 1) * min_gap
    if n and span < 0:
        raise GenerationError(
            f"cannot place {n} peaks {min_gap:.1f} bins apart in {length} bins"
        )
    u = np.sort(rng.uniform(0.0, span, size=n))
    return margin + u + min_gap * np.arange(n)


def synth_spectrum(spec):
    """Synthetic spectrum and its ground-truth peak list.

    Returns
    -------
    spectrum : Spectrum
    truth : list of Peak
        Apex bins (nearest bin to each Gaussian centre) with amplitudes as
        scores, in increasing m/z order.
    """
    rng = np.random.default_rng(spec.seed)
    L = spec.length
    wmin, wmax = spec.peak_width_bins
    amin, amax = spec.amplitude
    if spec.n_peaks < 0 or L < 1 or not 0 < wmin <= wmax or not 0 < amin <= amax:
        raise GenerationError("invalid synthetic spectrum parameters")
    mz = tof_axis(L, spec.mz_range)
    t = np.arange(L, dtype=float)
    centers = _place_centers(rng, spec.n_peaks, L, 3.0 * wmax, 3.0 * wmax)
    widths = rng.uniform(wmin, wmax, size=spec.n_peaks)
    amps = rng.uniform(amin, amax, size=spec.n_peaks)

    y = np.zeros(L)
    for c, w, a in zip(centers, widths, amps):
        sigma = w * FWHM_TO_SIGMA
        y += a * np.exp(-0.5 * ((t - c) / sigma) ** 2)
    if spec.baseline_scale > 0:
        y += spec.baseline_amp * np.exp(-t / spec.baseline_scale)
    noise = rng.standard_normal(L)
    if spec.noise_sigma0 > 0:
        y += spec.noise_sigma0 * np.exp(-spec.noise_decay * t) * noise

    bins = np.rint(centers).astype(int)
    truth = [Peak(int(b), float(mz[b]), float(a)) for b, a in zip(bins, amps)]
    return Spectrum(mz, y), truth


@dataclass(frozen=True)
class Shape:
    """Region on the grid bound to one m/z bin.

    `kind` is one of square, triangle, circle, cross; `center` is
    (row, col) and `size` the half extent in spots.
    """

    kind: str
    center: tuple
    size: float
    bin_index: int

    def mask(self, dims):
        rows, cols = np.meshgrid(np.arange(dims[0]), np.arange(dims[1]), indexing="ij")
        dr = rows - self.center[0]
        dc = cols - self.center[1]
        s = self.size
        if self.kind == "square":
            return (np.abs(dr) <= s) & (np.abs(dc) <= s)
        if self.kind == "circle":
            return dr**2 + dc**2 <= s**2
        if self.kind == "triangle":
            # apex up, base on row center + s
            return (dr >= -s) & (dr <= s) & (np.abs(dc) <= (dr + s) / 2.0)
        if self.kind == "cross":
            arm = max(1.0, s / 3.0)
            horiz = (np.abs(dr) <= arm) & (np.abs(dc) <= s)
            vert = (np.abs(dc) <= arm) & (np.abs(dr) <= s)
            return horiz | vert
        raise GenerationError(f"unknown shape {self.kind!r}")

    def to_dict(self):
        return {"kind": self.kind, "center": list(self.center), "size": self.size,
                "bin": self.bin_index}


def default_shapes(dims, length):
    """Square, triangle, circle and cross in the four quadrants."""
    rows, cols = dims
    qr, qc = rows / 4.0, cols / 4.0
    size = 0.8 * min(qr, qc)
    kinds = ("square", "triangle", "circle", "cross")
    centers = ((qr, qc), (qr, 3 * qc), (3 * qr, qc), (3 * qr, 3 * qc))
    bins = np.linspace(0, length, 6)[1:5].round().astype(int)
    return tuple(
        Shape(k, (round(c[0] - 0.5), round(c[1] - 0.5)), size, int(b))
        for k, c, b in zip(kinds, centers, bins)
    )


@dataclass(frozen=True)
class PhantomSpec:
    """Spatial phantom: each shape carries a peak at its own m/z bin."""

    grid_dims: tuple = (40, 40)
    length: int = 300
    shapes: tuple | None = None
    amplitude: float = 1.0
    peak_width_bins: float = 6.0
    noise_sigma: float = 0.25
    mz_range: tuple = (1000.0, 1300.0)
    seed: int = 0

    def resolved_shapes(self):
        if self.shapes is None:
            return default_shapes(self.grid_dims, self.length)
        return tuple(self.shapes)

    def to_dict(self):
        d = {k: v for k, v in self.__dict__.items() if k != "shapes"}
        d["grid_dims"] = list(self.grid_dims)
        d["mz_range"] = list(self.mz_range)
        d["shapes"] = [s.to_dict() for s in self.resolved_shapes()]
        return d


def synth_phantom(spec):
    """Phantom dataset and per-shape occupancy maps.

    Returns
    -------
    grid : DatasetGrid
    occupancy : dict
        Maps each shape's bin index to a boolean (rows, cols) map.
    """
    dims = tuple(spec.grid_dims)
    L = spec.length
    shapes = spec.resolved_shapes()
    bins = [s.bin_index for s in shapes]
    if len(set(bins)) != len(bins):
        raise GenerationError("shape m/z bins must be distinct")
    if any(not 0 <= b < L for b in bins):
        raise GenerationError("shape bin outside the spectrum")
    occupancy = {}
    covered = np.zeros(dims, dtype=bool)
    for s in shapes:
        m = s.mask(dims)
        if not m.any():
            raise GenerationError(f"{s.kind} does not fit in grid {dims}")
        if np.any(covered & m):
            raise GenerationError("shapes overlap")
        covered |= m
        occupancy[s.bin_index] = m

    rng = np.random.default_rng(spec.seed)
    t = np.arange(L, dtype=float)
    sigma = spec.peak_width_bins * FWHM_TO_SIGMA
    data = spec.noise_sigma * rng.standard_normal((dims[0] * dims[1], L))
    for s in shapes:
        profile = spec.amplitude * np.exp(-0.5 * ((t - s.bin_index) / sigma) ** 2)
        data[occupancy[s.bin_index].ravel()] += profile
    grid = DatasetGrid(dims, tof_axis(L, spec.mz_range), data)
    return grid, occupancy
