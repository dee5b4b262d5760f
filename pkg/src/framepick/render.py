"""m/z images (PGM/PNG) and report figures."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ParameterError

__all__ = [
    "mz_image",
    "clip_hotspots",
    "to_uint8",
    "render_mz_image",
    "write_pgm",
    "write_png",
    "report_figure",
]


def mz_image(grid, bins, values=None):
    """Per-spot maximum over the bin range ``[lo, hi]`` (inclusive).

    `bins` is one bin index or a ``(lo, hi)`` pair. `values` optionally
    replaces ``grid.intensities`` (e.g. indicators). Returns a float
    image with NaN at absent spots.
    """
    lo, hi = (bins, bins) if np.isscalar(bins) else bins
    lo, hi = int(lo), int(hi)
    if hi < lo:
        raise ParameterError(f"empty bin range [{lo}, {hi}]")
    if lo < 0 or hi >= grid.length:
        raise ParameterError(f"bin range [{lo}, {hi}] outside axis of length {grid.length}")
    data = grid.intensities if values is None else np.asarray(values)
    return grid.image(data[:, lo:hi + 1].max(axis=1), fill=np.nan)


def clip_hotspots(image, quantile):
    """Clip values above the ``1 - quantile`` quantile of present spots.

    The threshold is an observed value (lower order statistic), so the
    clipped spots take the intensity of the weakest spot among them.
    """
    if not 0 <= quantile < 1:
        raise ParameterError("hotspot quantile must be in [0, 1)")
    image = np.array(image, dtype=float)
    finite = np.isfinite(image)
    if quantile == 0 or not finite.any():
        return image
    cut = np.quantile(image[finite], 1.0 - quantile, method="lower")
    image[finite] = np.minimum(image[finite], cut)
    return image


def to_uint8(image):
    """Linear min-max scaling to 0..255; constant images and NaNs map to 0."""
    image = np.asarray(image, dtype=float)
    finite = np.isfinite(image)
    out = np.zeros(image.shape, dtype=np.uint8)
    if not finite.any():
        return out
    lo, hi = image[finite].min(), image[finite].max()
    if hi > lo:
        out[finite] = np.rint((image[finite] - lo) / (hi - lo) * 255.0).astype(np.uint8)
    return out


def write_pgm(path, pixels):
    """Binary (P5) 8-bit PGM."""
    pixels = np.asarray(pixels, dtype=np.uint8)
    rows, cols = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode())
        fh.write(np.ascontiguousarray(pixels).tobytes())


def write_png(path, pixels):
    from PIL import Image

    Image.fromarray(np.asarray(pixels, dtype=np.uint8), mode="L").save(path)


def render_mz_image(grid, bins, path, hotspot_quantile=0.0, values=None, fmt=None):
    """Render and save an m/z image; format from `fmt` or the file suffix."""
    fmt = (fmt or Path(path).suffix.lstrip(".") or "pgm").lower()
    if fmt not in ("pgm", "png"):
        raise ParameterError(f"unsupported image format {fmt!r}")
    pixels = to_uint8(clip_hotspots(mz_image(grid, bins, values), hotspot_quantile))
    (write_pgm if fmt == "pgm" else write_png)(path, pixels)
    return pixels


def report_figure(path, mz, intensity, indicator, peaks=(), truth=(), title=None):
    """Spectrum over its indicator, with detected and true peak positions."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax0, ax1) = plt.subplots(2, 1, sharex=True, figsize=(8, 5))
    ax0.plot(mz, intensity, lw=0.6, color="0.3")
    ax0.set_ylabel("intensity")
    for p in truth:
        ax0.axvline(p.mz, color="tab:green", lw=0.6, alpha=0.6)
    ax1.plot(mz, indicator, lw=0.6, color="tab:blue")
    if peaks:
        ax1.plot([p.mz for p in peaks], [p.score for p in peaks], "v", ms=4, color="tab:red")
    ax1.set_ylabel("indicator z")
    ax1.set_xlabel("m/z")
    if title:
        ax0.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
