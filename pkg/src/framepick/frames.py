"""Finite Gabor and constant-Q filterbank frames for fixed-length slices.

All transforms treat a slice as one period of a periodic signal, so every
analysis reduces to circular correlations that are evaluated with the FFT.
Coefficient arrays have shape ``(..., n_times, n_channels)``; any leading
axes are batch axes (e.g. the slices of one spectrum).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegenerateFrameError, InputShapeError, InvalidSpecError, EmptyInputError

__all__ = [
    "GaborFrame",
    "FilterbankFrame",
    "CustomFilterbank",
    "hann_window",
    "analyze_gabor",
    "analyze_filterbank",
    "frame_bounds",
    "mad_noise_sigma",
]

#: median of |N(0, 1)|
MAD_REAL = 0.6745
#: median of |Z| for a circular complex Gaussian Z with E|Z|^2 = 1
MAD_COMPLEX = math.sqrt(math.log(2.0))


def hann_window(slice_len, width):
    """Zero-phase Hann window of support `width`, unit l2 norm.

    The peak sits at index 0 and the tails wrap around the end of the
    array, so ``window[(t - k) % slice_len]`` is centred on sample ``k``.
    """
    if not 1 <= width <= slice_len:
        raise InvalidSpecError(f"window width must be in [1, {slice_len}], got {width}")
    offsets = np.arange(slice_len)
    offsets = np.where(offsets > slice_len // 2, offsets - slice_len, offsets)
    win = np.where(np.abs(offsets) < width / 2.0, np.cos(np.pi * offsets / width) ** 2, 0.0)
    return win / np.linalg.norm(win)


def _check_slices(slices, slice_len):
    slices = np.asarray(slices)
    if slices.ndim == 0 or slices.shape[-1] != slice_len:
        raise InputShapeError(
            f"expected slices with last axis of length {slice_len}, got shape {slices.shape}"
        )
    return slices


@dataclass(frozen=True)
class GaborFrame:
    """Regular Gabor frame on length-`slice_len` periodic signals.

    Parameters
    ----------
    slice_len : int
        Signal length M.
    window_width : int
        Support of the Hann window in samples.
    time_step : int
        Time shift a between atoms; must divide `slice_len`.
    freq_step : int
        Channel stride b; must divide `slice_len`.
    """

    slice_len: int = 60
    window_width: int = 20
    time_step: int = 1
    freq_step: int = 1

    def __post_init__(self):
        M = self.slice_len
        if M < 1 or self.time_step < 1 or self.freq_step < 1:
            raise InvalidSpecError("slice_len, time_step and freq_step must be positive")
        if M % self.time_step:
            raise InvalidSpecError(f"time_step {self.time_step} does not divide {M}")
        if M % self.freq_step:
            raise InvalidSpecError(f"freq_step {self.freq_step} does not divide {M}")
        if not 1 <= self.window_width <= M:
            raise InvalidSpecError(f"window_width must be in [1, {M}]")

    kind = "gabor"

    @property
    def n_times(self):
        return self.slice_len // self.time_step

    @property
    def n_channels(self):
        return self.slice_len // self.freq_step

    @property
    def shape(self):
        return (self.n_times, self.n_channels)

    @property
    def time_stride(self):
        """Samples between consecutive time indices of the coefficient grid."""
        return self.time_step

    @property
    def wrap_extent(self):
        """Samples on either side of an atom's centre covered by the window."""
        return self.window_width // 2

    @cached_property
    def window(self):
        return hann_window(self.slice_len, self.window_width)

    @cached_property
    def _shifted_windows(self):
        # row k holds window[(t - k*a) mod M]
        M = self.slice_len
        t = np.arange(M)
        k = np.arange(self.n_times)[:, None] * self.time_step
        return self.window[(t[None, :] - k) % M]

    def analyze(self, slices):
        slices = _check_slices(slices, self.slice_len)
        # window is real, so conj() is a no-op
        windowed = slices[..., None, :] * self._shifted_windows
        coeffs = np.fft.fft(windowed, axis=-1)
        if self.freq_step > 1:
            coeffs = coeffs[..., :: self.freq_step]
        return coeffs

    def atoms(self):
        """All atoms as an array of shape (n_times, n_channels, slice_len)."""
        M = self.slice_len
        t = np.arange(M)
        l = np.arange(self.n_channels)[:, None] * self.freq_step
        mod = np.exp(2j * np.pi * l * t[None, :] / M)
        return self._shifted_windows[:, None, :] * mod[None, :, :]

    def to_dict(self):
        return {
            "kind": self.kind,
            "slice_len": self.slice_len,
            "window_width": self.window_width,
            "time_step": self.time_step,
            "freq_step": self.freq_step,
        }


class _FilterbankBase:
    """Shared FFT analysis for banks given by sampled frequency responses."""

    kind = "filterbank"
    time_step = 1

    @property
    def n_times(self):
        return self.slice_len

    @property
    def n_channels(self):
        return self.responses.shape[0]

    @property
    def shape(self):
        return (self.n_times, self.n_channels)

    @property
    def time_stride(self):
        return 1

    @property
    def wrap_extent(self):
        # bandpass impulse responses of a short bank span the whole slice
        return self.slice_len

    @cached_property
    def impulse_responses(self):
        """Channel outputs for a unit impulse at t = 0, shape (n_channels, slice_len)."""
        return np.fft.ifft(np.conj(self.responses), axis=-1)

    def analyze(self, slices):
        slices = _check_slices(slices, self.slice_len)
        spectrum = np.fft.fft(slices, axis=-1)
        filtered = spectrum[..., None, :] * np.conj(self.responses)
        coeffs = np.fft.ifft(filtered, axis=-1)
        return np.swapaxes(coeffs, -1, -2)

    def band_mask(self):
        """Boolean mask over DFT bins where frame bounds are evaluated."""
        return np.ones(self.slice_len, dtype=bool)

    def power_response(self, real_signals=True):
        """Summed squared responses per DFT bin.

        With `real_signals` the response is averaged with its mirror image,
        which is the quadratic form the bank induces on real-valued input.
        """
        power = np.sum(np.abs(self.responses) ** 2, axis=0)
        if real_signals:
            power = 0.5 * (power + np.roll(power[::-1], 1))
        return power


@dataclass(frozen=True)
class FilterbankFrame(_FilterbankBase):
    """Constant-Q bank of raised-cosine bandpass filters.

    Centre frequencies are ``fmin * 2**(j / bins)`` up to Nyquist, in
    cycles/sample. The full width at half maximum of filter j is
    ``bw * centre_j / fmin``. Filters are analytic (positive frequencies
    only), so coefficient magnitudes track the local envelope.

    With an instrument sampled at ``fs`` Hz, a setting of ``fmin_hz``
    corresponds to ``fmin = fmin_hz / fs``.
    """

    slice_len: int = 60
    fmin: float = 0.05
    bw: float = 0.05
    bins: int = 30

    def __post_init__(self):
        if self.slice_len < 2:
            raise InvalidSpecError("slice_len must be at least 2")
        if not self.fmin > 0 or not self.bw > 0 or self.bins < 1:
            raise InvalidSpecError("fmin, bw and bins must be positive")
        if self.fmin >= 0.5:
            raise InvalidSpecError(f"fmin {self.fmin} is not below Nyquist (0.5)")

    @cached_property
    def centers(self):
        n = int(math.floor(self.bins * math.log2(0.5 / self.fmin) + 1e-9)) + 1
        return self.fmin * 2.0 ** (np.arange(n) / self.bins)

    @cached_property
    def bandwidths(self):
        return self.bw * self.centers / self.fmin

    @cached_property
    def responses(self):
        M = self.slice_len
        freqs = np.fft.fftfreq(M)
        # Nyquist belongs to the positive side
        if M % 2 == 0:
            freqs[M // 2] = 0.5
        dist = (freqs[None, :] - self.centers[:, None]) / self.bandwidths[:, None]
        resp = np.where(np.abs(dist) < 1.0, np.cos(0.5 * np.pi * dist) ** 2, 0.0)
        resp[:, freqs <= 0] = 0.0
        return resp

    def band_mask(self):
        freqs = np.abs(np.fft.fftfreq(self.slice_len))
        if self.slice_len % 2 == 0:
            freqs[self.slice_len // 2] = 0.5
        return freqs > self.fmin / 2.0

    def to_dict(self):
        return {
            "kind": self.kind,
            "slice_len": self.slice_len,
            "fmin": self.fmin,
            "bw": self.bw,
            "bins": self.bins,
        }


class CustomFilterbank(_FilterbankBase):
    """Filterbank from explicitly sampled frequency responses.

    `responses` has shape (n_channels, slice_len) over the FFT bin order.
    `band` optionally restricts the bins used by :func:`frame_bounds`.
    """

    def __init__(self, responses, band=None):
        responses = np.atleast_2d(np.asarray(responses, dtype=float))
        if np.any(responses < 0):
            raise InvalidSpecError("frequency responses must be nonnegative")
        self.responses = responses
        self.slice_len = responses.shape[1]
        self._band = None if band is None else np.asarray(band, dtype=bool)

    def band_mask(self):
        if self._band is None:
            return super().band_mask()
        return self._band

    def to_dict(self):
        return {"kind": "custom_filterbank", "slice_len": self.slice_len,
                "n_channels": self.n_channels}


def analyze_gabor(slice_, frame):
    """Gabor coefficients ``c[k, l] = <slice, g_{k,l}>`` of one slice or a batch."""
    return frame.analyze(slice_)


def analyze_filterbank(slice_, frame):
    """Filterbank coefficients of one slice or a batch, full time resolution."""
    return frame.analyze(slice_)


def frame_bounds(frame):
    """Lower and upper frame bounds (A, B).

    For a Gabor frame these are the extreme eigenvalues of the frame
    operator. For a filterbank, which is diagonalised by the DFT, they are
    the extreme summed squared responses over the bins of the covered band.

    Raises
    ------
    DegenerateFrameError
        If A vanishes to machine precision.
    """
    if isinstance(frame, GaborFrame):
        atoms = frame.atoms().reshape(-1, frame.slice_len)
        operator = atoms.T @ atoms.conj()
        eig = np.linalg.eigvalsh(operator)
        lower, upper = float(eig[0]), float(eig[-1])
    else:
        power = frame.power_response()[frame.band_mask()]
        if power.size == 0:
            raise DegenerateFrameError("frame covers no frequency bins")
        lower, upper = float(power.min()), float(power.max())
    if upper <= 0 or lower <= 64 * np.finfo(float).eps * upper:
        raise DegenerateFrameError(f"frame is not invertible: A={lower:g}, B={upper:g}")
    return lower, upper


def mad_noise_sigma(coeffs, exclude=None):
    """Robust noise level from coefficient magnitudes.

    The median magnitude is divided by the median of the matching unit
    noise magnitude: 0.6745 for real coefficients and sqrt(ln 2) for
    complex ones (circular Gaussian noise).

    Parameters
    ----------
    coeffs : array_like
        Coefficients; any shape.
    exclude : array_like of bool, optional
        Mask of entries to leave out, same shape as `coeffs`.
    """
    coeffs = np.asarray(coeffs)
    values = coeffs if exclude is None else coeffs[~np.asarray(exclude, dtype=bool)]
    if values.size == 0:
        raise EmptyInputError("no coefficients left for the noise estimate")
    scale = MAD_COMPLEX if np.iscomplexobj(values) and np.any(values.imag) else MAD_REAL
    return float(np.median(np.abs(values)) / scale)
