"""MFI container, analytics and file round-trips."""

import io
import struct

import numpy as np
import pytest

from magwire.errors import (
    BadMagicError,
    NoiseUndefinedError,
    SizeMismatchError,
    TruncatedPayloadError,
)
from magwire.field import Axis, SegmentParams, pp_distance
from magwire.image import (
    MfiImage,
    add_noise,
    export_heatmap,
    find_extrema,
    frame_for,
    read_mfi,
    render,
    snr,
    write_mfi,
)


def make_image(size=8, pitch=10.0, origin=(0.0, 0.0), fill=0.0, sigma=0.0):
    data = np.full((size, size), fill)
    return MfiImage(size=size, pitch=pitch, origin=origin, data=data,
                    noise_sigma=sigma)


def demo_segment(axis=Axis.X, current=2.0):
    return SegmentParams(x0=-200.0, y0=0.0, z0=100.0, length=400.0,
                         current=current, axis=axis)


class TestMfiImage:
    def test_rejects_small_size(self):
        with pytest.raises(ValueError):
            make_image(size=4)

    def test_rejects_bad_pitch(self):
        with pytest.raises(ValueError):
            make_image(pitch=0.0)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            MfiImage(size=8, pitch=1.0, origin=(0, 0), data=np.zeros((8, 9)))

    def test_rejects_nonfinite_data(self):
        data = np.zeros((8, 8))
        data[3, 3] = np.nan
        with pytest.raises(ValueError):
            MfiImage(size=8, pitch=1.0, origin=(0, 0), data=data)

    def test_data_is_readonly(self):
        img = make_image()
        with pytest.raises(ValueError):
            img.data[0, 0] = 1.0

    def test_coords(self):
        img = make_image(size=8, pitch=10.0, origin=(5.0, -5.0))
        assert img.x_coords()[0] == 5.0
        assert img.x_coords()[-1] == 75.0
        assert img.y_coords()[3] == 25.0
        assert img.span() == 80.0


class TestRender:
    def test_row_is_y_column_is_x(self):
        seg = demo_segment()
        img = render(seg, size=16, pitch=20.0, origin=(-150.0, -150.0))
        from magwire.field import FieldPoint, bz_at

        r, c = 11, 4
        want = bz_at(seg, FieldPoint(-150.0 + c * 20.0, -150.0 + r * 20.0))
        assert img.data[r, c] == pytest.approx(want, rel=1e-12)

    def test_antisymmetry_across_segment_row(self):
        # Frame centered on the segment: reflecting rows about the y0 row
        # flips the sign.
        seg = demo_segment()
        pitch, origin = frame_for(seg, size=32)
        img = render(seg, 32, pitch, origin)
        assert np.allclose(img.data, -img.data[::-1, :], rtol=1e-9, atol=1e-25)

    def test_extrema_separation_matches_pp(self):
        seg = demo_segment()
        pitch, origin = frame_for(seg, size=64)
        img = render(seg, 64, pitch, origin)
        ext = find_extrema(img)
        got = abs(ext.max_pos.y - ext.min_pos.y)
        assert got == pytest.approx(pp_distance(seg.length, seg.z0), abs=pitch)

    def test_linearity_in_current(self):
        pitch, origin = frame_for(demo_segment(), size=16)
        one = render(demo_segment(current=1.0), 16, pitch, origin)
        two = render(demo_segment(current=2.0), 16, pitch, origin)
        assert np.allclose(two.data, 2.0 * one.data, rtol=1e-12)


class TestAddNoise:
    def test_sigma_zero_is_identity(self):
        img = make_image(fill=3.0)
        out = add_noise(img, 0.0, rng_seed=1)
        assert np.array_equal(out.data, img.data)
        assert out.noise_sigma == 0.0

    def test_deterministic_given_seed(self):
        img = make_image(size=16)
        a = add_noise(img, 1e-6, rng_seed=42)
        b = add_noise(img, 1e-6, rng_seed=42)
        assert np.array_equal(a.data, b.data)

    def test_different_seeds_differ(self):
        img = make_image(size=16)
        a = add_noise(img, 1e-6, rng_seed=1)
        b = add_noise(img, 1e-6, rng_seed=2)
        assert not np.array_equal(a.data, b.data)

    def test_sample_sigma_near_requested(self):
        img = make_image(size=64)
        out = add_noise(img, 1e-6, rng_seed=7)
        assert out.data.std() == pytest.approx(1e-6, rel=0.05)
        assert out.noise_sigma == 1e-6

    def test_preserves_geometry(self):
        img = make_image(size=16, pitch=3.0, origin=(1.0, 2.0))
        out = add_noise(img, 1e-6, rng_seed=3)
        assert (out.size, out.pitch, out.origin) == (16, 3.0, (1.0, 2.0))

    def test_rejects_negative_sigma(self):
        with pytest.raises(ValueError):
            add_noise(make_image(), -1.0, rng_seed=1)


class TestFindExtrema:
    def test_constant_image_tie_breaks_to_origin(self):
        img = make_image(fill=1.0, origin=(7.0, -3.0))
        ext = find_extrema(img)
        assert (ext.max_pos.x, ext.max_pos.y) == (7.0, -3.0)
        assert (ext.min_pos.x, ext.min_pos.y) == (7.0, -3.0)

    def test_positions_are_physical(self):
        data = np.zeros((8, 8))
        data[2, 5] = 1.0
        data[6, 1] = -1.0
        img = MfiImage(size=8, pitch=10.0, origin=(100.0, 200.0), data=data)
        ext = find_extrema(img)
        assert (ext.max_pos.x, ext.max_pos.y) == (150.0, 220.0)
        assert (ext.min_pos.x, ext.min_pos.y) == (110.0, 260.0)
        assert ext.max_val == 1.0
        assert ext.min_val == -1.0

    def test_x_segment_positive_current_max_above(self):
        seg = demo_segment(axis=Axis.X, current=2.0)
        pitch, origin = frame_for(seg, size=32)
        ext = find_extrema(render(seg, 32, pitch, origin))
        assert ext.max_pos.y > ext.min_pos.y

    def test_y_segment_positive_current_max_left(self):
        seg = SegmentParams(x0=0.0, y0=-200.0, z0=100.0, length=400.0,
                            current=2.0, axis=Axis.Y)
        pitch, origin = frame_for(seg, size=32)
        ext = find_extrema(render(seg, 32, pitch, origin))
        assert ext.max_pos.x < ext.min_pos.x


class TestSnr:
    def test_arithmetic(self):
        data = np.zeros((8, 8))
        data[0, 0] = 1e-5
        data[7, 7] = -1e-5
        img = MfiImage(size=8, pitch=1.0, origin=(0, 0), data=data,
                       noise_sigma=1e-6)
        assert snr(img) == pytest.approx(10.0)

    def test_doubling_sigma_halves_snr(self):
        data = np.zeros((8, 8))
        data[0, 0] = 1e-5
        a = MfiImage(size=8, pitch=1.0, origin=(0, 0), data=data,
                     noise_sigma=1e-6)
        b = MfiImage(size=8, pitch=1.0, origin=(0, 0), data=data,
                     noise_sigma=2e-6)
        assert snr(a) == pytest.approx(2.0 * snr(b))

    def test_noiseless_errors(self):
        with pytest.raises(NoiseUndefinedError):
            snr(make_image())


class TestMfiRoundTrip:
    def test_roundtrip_equality(self, tmp_path):
        seg = demo_segment()
        pitch, origin = frame_for(seg, size=16)
        img = add_noise(render(seg, 16, pitch, origin), 1e-7, rng_seed=5)
        path = tmp_path / "a.mfi"
        write_mfi(img, path)
        back = read_mfi(path)
        assert back.size == img.size
        assert back.pitch == img.pitch
        assert back.origin == img.origin
        assert back.noise_sigma == img.noise_sigma
        # Payload is stored f32; a second write must be byte-identical.
        assert np.array_equal(back.data, img.data.astype(np.float32).astype(np.float64))

    def test_reserialization_is_byte_identical(self, tmp_path):
        seg = demo_segment()
        pitch, origin = frame_for(seg, size=16)
        img = render(seg, 16, pitch, origin)
        p1 = tmp_path / "a.mfi"
        p2 = tmp_path / "b.mfi"
        write_mfi(img, p1)
        write_mfi(read_mfi(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_file_objects_work(self):
        img = make_image(fill=2.5)
        buf = io.BytesIO()
        write_mfi(img, buf)
        back = read_mfi(io.BytesIO(buf.getvalue()))
        assert np.array_equal(back.data, img.data)

    def test_bad_magic(self):
        buf = io.BytesIO()
        write_mfi(make_image(), buf)
        raw = bytearray(buf.getvalue())
        raw[:4] = b"XXXX"
        with pytest.raises(BadMagicError):
            read_mfi(io.BytesIO(bytes(raw)))

    def test_truncated_payload(self):
        buf = io.BytesIO()
        write_mfi(make_image(), buf)
        raw = buf.getvalue()[:-8]
        with pytest.raises(TruncatedPayloadError):
            read_mfi(io.BytesIO(raw))

    def test_truncated_header(self):
        with pytest.raises(TruncatedPayloadError):
            read_mfi(io.BytesIO(b"MFI1\x10\x00"))

    def test_trailing_garbage(self):
        buf = io.BytesIO()
        write_mfi(make_image(), buf)
        with pytest.raises(SizeMismatchError):
            read_mfi(io.BytesIO(buf.getvalue() + b"\x00\x00\x00\x00"))

    def test_undersized_declared_size(self):
        header = struct.pack("<4sIdddd", b"MFI1", 4, 1.0, 0.0, 0.0, 0.0)
        with pytest.raises(SizeMismatchError):
            read_mfi(io.BytesIO(header + b"\x00" * 64))


class TestExportHeatmap:
    def test_constant_maps_to_midgray(self):
        buf = io.BytesIO()
        export_heatmap(make_image(fill=5.0), buf)
        raw = buf.getvalue()
        assert raw.startswith(b"P5\n8 8\n255\n")
        assert set(raw[len(b"P5\n8 8\n255\n"):]) == {128}

    def test_extremes_map_to_bounds(self):
        data = np.zeros((8, 8))
        data[0, 0] = -1.0
        data[7, 7] = 1.0
        img = MfiImage(size=8, pitch=1.0, origin=(0, 0), data=data)
        buf = io.BytesIO()
        export_heatmap(img, buf)
        pixels = buf.getvalue().split(b"255\n", 1)[1]
        assert pixels[0] == 0
        assert pixels[-1] == 255

    def test_header_for_64(self, tmp_path):
        img = make_image(size=64)
        path = tmp_path / "x.pgm"
        export_heatmap(img, path)
        assert path.read_bytes().startswith(b"P5\n64 64\n255\n")
