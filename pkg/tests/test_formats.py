import json

import numpy as np
import pytest

from framepick.data import DatasetGrid, Spectrum
from framepick.errors import FormatError
from framepick.formats import (
    MAGIC,
    read_dataset,
    read_header,
    read_peak_lists,
    read_spectrum_csv,
    write_dataset,
    write_peak_lists,
    write_spectrum_csv,
)
from framepick.peakpick import Peak


def test_csv_example(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("100.0,1.5\n101.0,2.5\n")
    s = read_spectrum_csv(p)
    assert len(s) == 2 and s.intensity[1] == 2.5


def test_csv_non_monotone_names_line(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("100.0,1.5\n99.0,2.5\n")
    with pytest.raises(FormatError, match="line 2"):
        read_spectrum_csv(p)


@pytest.mark.parametrize("text,line", [("1,2\n3\n", 2), ("1,2,3\n", 1), ("1,x\n", 1), ("", None)])
def test_csv_errors(tmp_path, text, line):
    p = tmp_path / "s.csv"
    p.write_text(text)
    with pytest.raises(FormatError) as info:
        read_spectrum_csv(p)
    assert info.value.line == line


def test_csv_round_trip(tmp_path, rng):
    s = Spectrum(np.cumsum(rng.uniform(0.1, 1, 200)) + 100, rng.standard_normal(200) * 1e3)
    write_spectrum_csv(tmp_path / "s.csv", s)
    back = read_spectrum_csv(tmp_path / "s.csv")
    assert np.allclose(back.mz, s.mz, rtol=1e-12) and np.allclose(back.intensity, s.intensity, rtol=1e-12)


def test_container_payload_size(tmp_path):
    g = DatasetGrid((2, 2), np.arange(4.0) + 1, np.arange(16.0).reshape(4, 4))
    write_dataset(tmp_path / "d.fpd", g)
    h = read_header(tmp_path / "d.fpd")
    assert h["payload_bytes"] == 64
    raw = (tmp_path / "d.fpd").read_bytes()
    assert raw.startswith(MAGIC)
    assert raw.endswith(np.arange(16, dtype="<f4").tobytes())


def test_container_empty_occupancy(tmp_path):
    g = DatasetGrid((2, 3), np.arange(5.0) + 1, np.zeros((0, 5)), np.zeros((2, 3), bool))
    write_dataset(tmp_path / "d.fpd", g)
    back, h = read_dataset(tmp_path / "d.fpd")
    assert h["payload_bytes"] == 0 and back.n_spots == 0 and back.dims == (2, 3)


def test_container_round_trip_bitwise(tmp_path, rng):
    present = rng.uniform(size=(3, 4)) > 0.3
    n = int(present.sum())
    g = DatasetGrid((3, 4), np.sort(rng.uniform(100, 200, 7)), rng.standard_normal((n, 7)), present)
    write_dataset(tmp_path / "a.fpd", g, config={"seed": 3}, meta={"x": 1})
    back, h = read_dataset(tmp_path / "a.fpd")
    write_dataset(tmp_path / "b.fpd", back, config={"seed": 3}, meta={"x": 1})
    assert (tmp_path / "a.fpd").read_bytes() == (tmp_path / "b.fpd").read_bytes()
    assert np.array_equal(back.mz, g.mz)
    assert np.array_equal(back.present, present)
    assert h["config"] == {"seed": 3}


def test_container_truncated(tmp_path):
    g = DatasetGrid((1, 2), [1.0, 2.0, 3.0], np.ones((2, 3)))
    write_dataset(tmp_path / "d.fpd", g)
    raw = (tmp_path / "d.fpd").read_bytes()
    (tmp_path / "t.fpd").write_bytes(raw[:-3])
    with pytest.raises(FormatError, match="truncated"):
        read_dataset(tmp_path / "t.fpd")
    (tmp_path / "x.fpd").write_bytes(raw + b"\0")
    with pytest.raises(FormatError, match="trailing"):
        read_dataset(tmp_path / "x.fpd")


def test_container_header_mismatch(tmp_path):
    g = DatasetGrid((1, 2), [1.0, 2.0, 3.0], np.ones((2, 3)))
    write_dataset(tmp_path / "d.fpd", g)
    raw = (tmp_path / "d.fpd").read_bytes()
    head, payload = raw[len(MAGIC):].split(b"\n", 1)
    h = json.loads(head)
    h["payload_bytes"] = 12
    (tmp_path / "m.fpd").write_bytes(MAGIC + json.dumps(h).encode() + b"\n" + payload)
    with pytest.raises(FormatError, match="payload"):
        read_dataset(tmp_path / "m.fpd")
    (tmp_path / "bad.fpd").write_bytes(b"hello\n")
    with pytest.raises(FormatError, match="magic"):
        read_dataset(tmp_path / "bad.fpd")


def test_peak_lists(tmp_path):
    lists = [[Peak(3, 101.5, 2.0)], []]
    write_peak_lists(tmp_path / "p.json", [(0, 0), (0, 1)], lists, config={"seed": 1})
    coords, back, doc = read_peak_lists(tmp_path / "p.json")
    assert coords == [(0, 0), (0, 1)] and back == lists
    assert back[0][0].score == 2.0 and doc["config"] == {"seed": 1}
    (tmp_path / "q.json").write_text('{"spots": [{"row": 0}]}')
    with pytest.raises(FormatError):
        read_peak_lists(tmp_path / "q.json")
