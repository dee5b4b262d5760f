"""In-memory spectrum and dataset containers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputShapeError

__all__ = ["Spectrum", "DatasetGrid"]


@dataclass
class Spectrum:
    """One spot: strictly increasing m/z axis and matching intensities."""

    mz: np.ndarray
    intensity: np.ndarray

    def __post_init__(self):
        self.mz = np.asarray(self.mz, dtype=float)
        self.intensity = np.asarray(self.intensity, dtype=float)
        if self.mz.ndim != 1 or self.mz.shape != self.intensity.shape:
            raise InputShapeError("mz and intensity must be 1-D arrays of equal length")
        if np.any(np.diff(self.mz) <= 0):
            raise InputShapeError("mz axis must be strictly increasing")
        if not np.all(np.isfinite(self.intensity)):
            raise InputShapeError("intensities must be finite")

    def __len__(self):
        return self.mz.shape[0]


@dataclass
class DatasetGrid:
    """Spectra on a rows x cols acquisition grid sharing one m/z axis.

    `intensities` holds one row per present spot, in row-major order of
    the `present` map.
    """

    dims: tuple
    mz: np.ndarray
    intensities: np.ndarray
    present: np.ndarray | None = None

    def __post_init__(self):
        self.dims = (int(self.dims[0]), int(self.dims[1]))
        self.mz = np.asarray(self.mz, dtype=float)
        if self.present is None:
            self.present = np.ones(self.dims, dtype=bool)
        self.present = np.asarray(self.present, dtype=bool)
        if self.present.shape != self.dims:
            raise InputShapeError(f"occupancy map shape {self.present.shape} != dims {self.dims}")
        n = int(self.present.sum())
        self.intensities = np.asarray(self.intensities).reshape(n, self.mz.shape[0])
        if self.mz.ndim != 1:
            raise InputShapeError("mz axis must be one-dimensional")

    @classmethod
    def from_spectra(cls, spectra, mz):
        """A 1 x N grid from a list of intensity vectors."""
        data = np.atleast_2d(np.asarray(spectra, dtype=float))
        return cls(dims=(1, data.shape[0]), mz=mz, intensities=data)

    @property
    def n_spots(self):
        return self.intensities.shape[0]

    @property
    def length(self):
        return self.mz.shape[0]

    def coords(self):
        """(row, col) of every present spot, in storage order."""
        rows, cols = np.nonzero(self.present)
        return list(zip(rows.tolist(), cols.tolist()))

    def index_map(self):
        """Storage index per grid cell, -1 for absent spots."""
        idx = np.full(self.dims, -1, dtype=int)
        idx[self.present] = np.arange(self.n_spots)
        return idx

    def spectrum(self, row, col):
        i = self.index_map()[row, col]
        if i < 0:
            raise KeyError(f"no spectrum at ({row}, {col})")
        return Spectrum(self.mz, self.intensities[i])

    def with_intensities(self, intensities):
        return DatasetGrid(self.dims, self.mz, intensities, self.present.copy())

    def image(self, values, fill=0.0):
        """Scatter one value per present spot onto the grid."""
        out = np.full(self.dims, fill, dtype=float)
        out[self.present] = values
        return out
