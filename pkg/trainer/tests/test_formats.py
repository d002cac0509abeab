"""Byte-level checks for the shared file formats."""

import struct

import numpy as np
import pytest
from helpers import mfi_bytes

from magtrain.formats import read_mfi, read_mirw, write_mirw


def test_read_mfi_fields(tmp_path):
    rng = np.random.default_rng(0)
    data = rng.normal(size=(16, 16))
    p = tmp_path / "img.mfi"
    p.write_bytes(mfi_bytes(data, pitch=3.5, ox=1.0, oy=2.0, sigma=4e-7))
    rec = read_mfi(p)
    assert rec.size == 16
    assert rec.pitch == 3.5
    assert rec.origin_x == 1.0
    assert rec.origin_y == 2.0
    assert rec.noise_sigma == 4e-7
    assert rec.data.dtype == np.float64
    np.testing.assert_array_equal(rec.data,
                                  data.astype(np.float32).astype(np.float64))


def test_read_mfi_rejects_bad_magic(tmp_path):
    p = tmp_path / "img.mfi"
    raw = mfi_bytes(np.zeros((8, 8)))
    p.write_bytes(b"NOPE" + raw[4:])
    with pytest.raises(ValueError, match="magic"):
        read_mfi(p)


def test_read_mfi_rejects_truncation(tmp_path):
    p = tmp_path / "img.mfi"
    raw = mfi_bytes(np.zeros((8, 8)))
    p.write_bytes(raw[:20])
    with pytest.raises(ValueError):
        read_mfi(p)
    p.write_bytes(raw[:-8])
    with pytest.raises(ValueError, match="payload"):
        read_mfi(p)


def test_read_mfi_rejects_nonfinite(tmp_path):
    data = np.zeros((8, 8))
    data[3, 3] = np.inf
    p = tmp_path / "img.mfi"
    p.write_bytes(mfi_bytes(data))
    with pytest.raises(ValueError, match="finite"):
        read_mfi(p)


def layers_fixture():
    rng = np.random.default_rng(7)
    layers = []
    for shape in ((8, 1, 3, 3), (16, 8, 3, 3), (32, 16, 3, 3)):
        layers.append((1, rng.normal(size=shape).astype(np.float32),
                       rng.normal(size=shape[0]).astype(np.float32)))
    layers.append((2, rng.normal(size=(1, 32)).astype(np.float32),
                   rng.normal(size=1).astype(np.float32)))
    return layers


def test_mirw_roundtrip_bitwise(tmp_path):
    layers = layers_fixture()
    p1 = tmp_path / "a.mirw"
    p2 = tmp_path / "b.mirw"
    write_mirw(0, layers, p1)
    head, back = read_mirw(p1)
    assert head == 0
    write_mirw(head, back, p2)
    assert p1.read_bytes() == p2.read_bytes()
    for (k1, w1, b1), (k2, w2, b2) in zip(layers, back):
        assert k1 == k2
        np.testing.assert_array_equal(w1, w2)
        np.testing.assert_array_equal(b1, b2)


def test_mirw_rejects_corruption(tmp_path):
    p = tmp_path / "a.mirw"
    write_mirw(1, layers_fixture(), p)
    raw = p.read_bytes()
    bad = tmp_path / "bad.mirw"
    bad.write_bytes(b"ZZZZ" + raw[4:])
    with pytest.raises(ValueError, match="magic"):
        read_mirw(bad)
    bad.write_bytes(raw[:4] + struct.pack("<I", 9) + raw[8:])
    with pytest.raises(ValueError, match="version"):
        read_mirw(bad)
    bad.write_bytes(raw + b"\x00" * 3)
    with pytest.raises(ValueError):
        read_mirw(bad)
