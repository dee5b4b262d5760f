"""On-disk formats: spectrum CSV, dataset container, JSON peak lists.

Dataset container layout::

    FRAMEPICK-DATASET 1\\n
    <one line of JSON header>\\n
    <payload: little-endian float32, one row of L values per present spot>

The header carries ``dims``, ``length``, the m/z axis (``axis``, exact
float64 values), the occupancy map as a row-major string of ``0``/``1``,
``payload_bytes``, plus free-form ``config`` and ``meta`` objects.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .data import DatasetGrid, Spectrum
from .errors import FormatError, InputShapeError
from .peakpick import Peak

__all__ = [
    "MAGIC",
    "read_spectrum_csv",
    "write_spectrum_csv",
    "read_dataset",
    "write_dataset",
    "read_header",
    "write_peak_lists",
    "read_peak_lists",
    "write_json",
]

MAGIC = b"FRAMEPICK-DATASET 1\n"
PAYLOAD_DTYPE = np.dtype("<f4")


def read_spectrum_csv(path):
    """Two-column headerless ``mz,intensity`` CSV."""
    mz, values = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise FormatError(f"expected 2 columns, got {len(row)}", lineno)
            try:
                m, v = float(row[0]), float(row[1])
            except ValueError:
                raise FormatError(f"not a number: {','.join(row)!r}", lineno) from None
            if not (math.isfinite(m) and math.isfinite(v)):
                raise FormatError("non-finite value", lineno)
            if mz and m <= mz[-1]:
                raise FormatError(f"m/z {m!r} does not increase", lineno)
            mz.append(m)
            values.append(v)
    if not mz:
        raise FormatError("no data rows")
    return Spectrum(np.array(mz), np.array(values))


def write_spectrum_csv(path, spectrum):
    with open(path, "w", newline="") as fh:
        for m, v in zip(spectrum.mz, spectrum.intensity):
            fh.write(f"{float(m)!r},{float(v)!r}\n")


def _encode_present(present):
    return "".join("1" if p else "0" for p in np.asarray(present).ravel())


def write_dataset(path, grid, config=None, meta=None):
    """Write `grid`; intensities are stored as float32."""
    payload = np.ascontiguousarray(grid.intensities, dtype=PAYLOAD_DTYPE).tobytes()
    header = {
        "dims": list(grid.dims),
        "length": grid.length,
        "axis": [float(v) for v in grid.mz],
        "present": _encode_present(grid.present),
        "payload_bytes": len(payload),
        "dtype": "float32-le",
        "config": config or {},
        "meta": meta or {},
    }
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(header, separators=(",", ":")).encode() + b"\n")
        fh.write(payload)


def _split(raw):
    if not raw.startswith(MAGIC):
        raise FormatError("not a dataset container (bad magic line)", 1)
    rest = raw[len(MAGIC):]
    end = rest.find(b"\n")
    if end < 0:
        raise FormatError("header line is not terminated", 2)
    try:
        header = json.loads(rest[:end])
    except ValueError as exc:
        raise FormatError(f"bad header JSON: {exc}", 2) from None
    for key in ("dims", "length", "axis", "present", "payload_bytes"):
        if key not in header:
            raise FormatError(f"header lacks {key!r}", 2)
    return header, rest[end + 1:]


def read_header(path):
    """Header dict of a dataset container."""
    return _split(Path(path).read_bytes())[0]


def read_dataset(path):
    """Load a container; returns (DatasetGrid, header)."""
    header, payload = _split(Path(path).read_bytes())
    rows, cols = header["dims"]
    L = header["length"]
    present = header["present"]
    if len(present) != rows * cols or set(present) - {"0", "1"}:
        raise FormatError("occupancy string does not match dims", 2)
    if len(header["axis"]) != L:
        raise FormatError(f"axis has {len(header['axis'])} values, length is {L}", 2)
    mask = np.frombuffer(present.encode(), dtype=np.uint8).reshape(rows, cols) == ord("1")
    n = int(mask.sum())
    expected = n * L * PAYLOAD_DTYPE.itemsize
    if header["payload_bytes"] != expected:
        raise FormatError(
            f"header declares {header['payload_bytes']} payload bytes, layout needs {expected}"
        )
    if len(payload) < expected:
        raise FormatError(f"truncated payload: {len(payload)} of {expected} bytes")
    if len(payload) > expected:
        raise FormatError(f"{len(payload) - expected} trailing bytes after payload")
    data = np.frombuffer(payload, dtype=PAYLOAD_DTYPE).reshape(n, L).astype(float)
    try:
        grid = DatasetGrid((rows, cols), np.asarray(header["axis"]), data, mask)
    except InputShapeError as exc:
        raise FormatError(str(exc)) from None
    return grid, header


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=False)
        fh.write("\n")


def write_peak_lists(path, coords, peak_lists, config=None, meta=None):
    """JSON document with one peak list per spot."""
    spots = [
        {"row": int(r), "col": int(c), "peaks": [p.to_dict() for p in peaks]}
        for (r, c), peaks in zip(coords, peak_lists)
    ]
    write_json(path, {"config": config or {}, "meta": meta or {}, "spots": spots})


def read_peak_lists(path):
    """Returns (coords, peak_lists, document)."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except ValueError as exc:
        raise FormatError(f"bad peak list JSON: {exc}") from None
    coords, lists = [], []
    try:
        for spot in doc["spots"]:
            coords.append((int(spot["row"]), int(spot["col"])))
            lists.append([Peak(int(p["bin"]), float(p["mz"]), float(p["score"]))
                          for p in spot["peaks"]])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed peak list: missing {exc}") from None
    return coords, lists, doc
