import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from spinflow.grid import Grid
from spinflow.io import (SnapshotFormatError, decode_snapshot, encode_snapshot, format_value,
                         read_csv, read_snapshot, write_csv, write_records, write_snapshot)
from spinflow.rng import LCG64


def lcg_oracle(seed, n):
    """Same recurrence in wrapping uint64 arithmetic."""
    state = np.uint64(seed)
    out = []
    with np.errstate(over="ignore"):
        for _ in range(n):
            state = state * np.uint64(6364136223846793005) + np.uint64(1442695040888963407)
            out.append(int(state))
    return out


@pytest.mark.parametrize("seed", [0, 1, 42, 2 ** 64 - 1])
def test_lcg_matches_uint64_recurrence(seed):
    g = LCG64(seed)
    assert [g.next_u64() for _ in range(50)] == lcg_oracle(seed, 50)


def test_lcg_first_value_from_zero():
    assert LCG64(0).next_u64() == 1442695040888963407


@given(st.integers(0, 2 ** 64 - 1))
def test_lcg_random_in_unit_interval(seed):
    g = LCG64(seed)
    for _ in range(20):
        r = g.random()
        assert 0.0 <= r < 1.0
        assert r * 2 ** 53 == int(r * 2 ** 53)


def test_lcg_uniform_bounds():
    g = LCG64(3)
    vals = [g.uniform(-2.0, 5.0) for _ in range(1000)]
    assert min(vals) >= -2.0 and max(vals) < 5.0


def test_snapshot_header_layout():
    g = Grid((4, 5), (1.0, 2.5))
    f = np.arange(40, dtype=float).reshape(4, 5, 2)
    buf = encode_snapshot(g, f, 0.125)
    assert buf[:4] == b"SPNF"
    assert struct.unpack_from("<II", buf, 4) == (1, 2)
    assert struct.unpack_from("<2I", buf, 12) == (4, 5)
    assert struct.unpack_from("<2d", buf, 20) == (1.0, 2.5)
    assert struct.unpack_from("<dI", buf, 36) == (0.125, 2)
    payload = np.frombuffer(buf[48:], dtype="<f8")
    # component-major: all of component 0, then component 1
    assert np.array_equal(payload[:20], f[..., 0].ravel())
    assert np.array_equal(payload[20:], f[..., 1].ravel())


@given(st.sampled_from([(4,), (4, 5), (4, 4, 5)]), st.integers(1, 3),
       st.floats(0, 1e6, allow_nan=False), st.data())
def test_snapshot_roundtrip(counts, comps, time, data):
    g = Grid(counts, (1.0,) * len(counts))
    f = data.draw(arrays(np.float64, g.shape + (comps,), elements=st.floats(allow_nan=False, width=64)))
    g2, f2, t2 = decode_snapshot(encode_snapshot(g, f, time))
    assert g2 == g and t2 == time
    assert np.array_equal(f2, f)


def test_snapshot_file_roundtrip(tmp_path):
    g = Grid.cube(4)
    f = np.random.default_rng(0).normal(size=g.shape + (3,))
    write_snapshot(tmp_path / "a.spnf", g, f, 1.5)
    g2, f2, t = read_snapshot(tmp_path / "a.spnf")
    assert g2 == g and t == 1.5 and np.array_equal(f, f2)


@pytest.mark.parametrize("mutate", [
    lambda b: b"XXXX" + b[4:],
    lambda b: b[:4] + struct.pack("<I", 9) + b[8:],
    lambda b: b[:-8],
])
def test_snapshot_rejects_corruption(mutate):
    g = Grid.cube(4, dim=2)
    buf = encode_snapshot(g, np.zeros(g.shape + (3,)), 0.0)
    with pytest.raises(SnapshotFormatError):
        decode_snapshot(mutate(buf))


@pytest.mark.parametrize("value, text", [
    (0.1, "0.1"), (1e-300, "1e-300"), (float("nan"), "nan"), (True, "1"), (np.int64(7), "7"),
    (np.float64(2.5), "2.5"), ("rk4", "rk4"),
])
def test_format_value(value, text):
    assert format_value(value) == text


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_format_value_roundtrips_floats(x):
    assert float(format_value(x)) == x


def test_csv_records(tmp_path):
    from dataclasses import dataclass

    @dataclass
    class Row:
        time: float
        value: float

    write_records(tmp_path / "r.csv", [Row(0.5, 1 / 3), Row(1.0, float("nan"))])
    header, rows = read_csv(tmp_path / "r.csv")
    assert header == ["time", "value"]
    assert rows == [["0.5", repr(1 / 3)], ["1.0", "nan"]]


def test_csv_plain(tmp_path):
    write_csv(tmp_path / "p.csv", ["a", "b"], [(1, 2.0)])
    assert (tmp_path / "p.csv").read_text() == "a,b\n1,2.0\n"
