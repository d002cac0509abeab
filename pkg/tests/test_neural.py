"""Weight file I/O and CNN forward-pass inference."""

import io
import math
import struct

import numpy as np
import pytest

from magwire.errors import (
    BadMagicError,
    HeadMismatchError,
    NonFiniteParameterError,
    ShapeMismatchError,
    VersionMismatchError,
)
from magwire.estimate import EstimateSource
from magwire.field import Axis
from magwire.image import MfiImage
from magwire.neural import (
    BETA_CLAMP,
    CnnEstimator,
    Head,
    Layer,
    LayerKind,
    WeightFile,
    infer_axis,
    infer_beta,
    load_weights,
    preprocess,
    save_weights,
)

CONV_SHAPES = ((8, 1, 3, 3), (16, 8, 3, 3), (32, 16, 3, 3))


def build_weights(head, dense_bias=None, rng=None):
    layers = []
    for shape in CONV_SHAPES:
        if rng is None:
            w = np.zeros(shape, dtype=np.float32)
        else:
            w = rng.normal(0, 0.1, size=shape).astype(np.float32)
        layers.append(Layer(kind=LayerKind.CONV, weights=w,
                            bias=np.zeros(shape[0], dtype=np.float32)))
    out = 1 if head is Head.REGRESSION else 2
    dw = (np.zeros((out, 32), dtype=np.float32) if rng is None
          else rng.normal(0, 0.1, size=(out, 32)).astype(np.float32))
    db = np.zeros(out, dtype=np.float32)
    if dense_bias is not None:
        db = np.asarray(dense_bias, dtype=np.float32)
    layers.append(Layer(kind=LayerKind.DENSE, weights=dw, bias=db))
    return WeightFile(head=head, layers=tuple(layers))


def image_from(data, pitch=10.0):
    data = np.asarray(data, dtype=float)
    return MfiImage(size=data.shape[0], pitch=pitch, origin=(0.0, 0.0),
                    data=data)


def demo_image(size=64, seed=3):
    rng = np.random.default_rng(seed)
    return image_from(rng.normal(0, 1e-6, size=(size, size)))


class TestWeightFileRoundTrip:
    @pytest.mark.parametrize("head", [Head.REGRESSION, Head.CLASSIFICATION])
    def test_bitwise_roundtrip(self, head):
        wf = build_weights(head, rng=np.random.default_rng(1))
        buf = io.BytesIO()
        save_weights(wf, buf)
        back = load_weights(io.BytesIO(buf.getvalue()))
        assert back.head is head
        for a, b in zip(wf.layers, back.layers):
            assert a.kind is b.kind
            assert np.array_equal(a.weights, b.weights)
            assert np.array_equal(a.bias, b.bias)

    def test_file_path_roundtrip(self, tmp_path):
        wf = build_weights(Head.REGRESSION, rng=np.random.default_rng(2))
        path = tmp_path / "w.mirw"
        save_weights(wf, path)
        back = load_weights(path)
        assert np.array_equal(back.layers[0].weights, wf.layers[0].weights)

    def test_file_size_matches_parameter_count(self):
        # 9-byte header; per layer: 1 kind byte, 4 bytes per dim, 4 bytes per
        # parameter including bias.
        wf = build_weights(Head.REGRESSION)
        buf = io.BytesIO()
        save_weights(wf, buf)
        counts = [80, 1168, 4640, 33]
        dims = [4, 4, 4, 2]
        want = 9 + sum(1 + 4 * d + 4 * c for d, c in zip(dims, counts))
        assert len(buf.getvalue()) == want


class TestLoadErrors:
    def make_bytes(self, head=Head.REGRESSION):
        buf = io.BytesIO()
        save_weights(build_weights(head), buf)
        return buf.getvalue()

    def test_bad_magic(self):
        raw = b"XIRW" + self.make_bytes()[4:]
        with pytest.raises(BadMagicError):
            load_weights(io.BytesIO(raw))

    def test_version_mismatch(self):
        raw = bytearray(self.make_bytes())
        raw[4:8] = struct.pack("<I", 2)
        with pytest.raises(VersionMismatchError):
            load_weights(io.BytesIO(bytes(raw)))

    def test_unknown_head(self):
        raw = bytearray(self.make_bytes())
        raw[8] = 7
        with pytest.raises(ShapeMismatchError):
            load_weights(io.BytesIO(bytes(raw)))

    def test_one_parameter_removed(self):
        raw = self.make_bytes()[:-4]
        with pytest.raises(ShapeMismatchError):
            load_weights(io.BytesIO(raw))

    def test_trailing_bytes(self):
        raw = self.make_bytes() + b"\x00\x00\x00\x00"
        with pytest.raises(ShapeMismatchError):
            load_weights(io.BytesIO(raw))

    def test_wrong_dense_shape(self):
        wf = build_weights(Head.CLASSIFICATION)
        buf = io.BytesIO()
        save_weights(wf, buf)
        raw = buf.getvalue()
        # Declare it a regression head; the classification dense layer no
        # longer matches.
        raw = raw[:8] + bytes([int(Head.REGRESSION)]) + raw[9:]
        with pytest.raises(ShapeMismatchError):
            load_weights(io.BytesIO(raw))

    def test_nan_parameter(self):
        wf = build_weights(Head.REGRESSION)
        bad = np.zeros((8, 1, 3, 3), dtype=np.float32)
        bad[0, 0, 0, 0] = np.nan
        layers = (Layer(LayerKind.CONV, bad, wf.layers[0].bias),) + wf.layers[1:]
        buf = io.BytesIO()
        save_weights(WeightFile(head=Head.REGRESSION, layers=layers), buf)
        with pytest.raises(NonFiniteParameterError):
            load_weights(io.BytesIO(buf.getvalue()))


class TestPreprocess:
    def test_divides_by_max_abs(self):
        rng = np.random.default_rng(5)
        data = rng.normal(0, 1e-6, size=(64, 64))
        data[10, 10] = -2e-5
        data[20, 20] = 1.5e-5
        img = image_from(data)
        out = preprocess(img)
        assert out.dtype == np.float32
        assert out[10, 10] == np.float32(-1.0)
        assert np.abs(out).max() == np.float32(1.0)
        assert out[20, 20] == pytest.approx(1.5e-5 / 2e-5, rel=1e-6)

    def test_all_zero_image_stays_zero(self):
        out = preprocess(image_from(np.zeros((64, 64))))
        assert np.all(out == 0.0)

    def test_scale_invariance_power_of_two(self):
        data = np.random.default_rng(6).normal(0, 1e-6, size=(64, 64))
        a = preprocess(image_from(data))
        b = preprocess(image_from(8.0 * data))
        assert np.array_equal(a, b)

    def test_scale_invariance_general(self):
        data = np.random.default_rng(7).normal(0, 1e-6, size=(64, 64))
        a = preprocess(image_from(data))
        b = preprocess(image_from(10.0 * data))
        assert np.allclose(a, b, atol=3e-7)

    @pytest.mark.parametrize("in_size", [32, 128])
    def test_resample_reproduces_affine_interior(self, in_size):
        # Bilinear interpolation is exact on affine functions away from the
        # clamped border.
        r = np.arange(in_size, dtype=float)
        data = 2.0 * r[:, None] + 0.5 * r[None, :] + 3.0
        img = image_from(data)
        out = preprocess(img).astype(float)
        scale = in_size / 64.0
        coords = (np.arange(64) + 0.5) * scale - 0.5
        want = 2.0 * coords[:, None] + 0.5 * coords[None, :] + 3.0
        want = want / np.abs(want).max()
        interior = (coords >= 0) & (coords <= in_size - 1)
        sel = np.outer(interior, interior)
        # Normalization peak sits on the clamped border for this ramp, so
        # compare shapes via ratios instead of absolute values.
        ratio = out[sel] / out[sel].max()
        want_ratio = want[sel] / want[sel].max()
        assert np.allclose(ratio, want_ratio, rtol=1e-5)

    def test_resample_constant_is_constant(self):
        out = preprocess(image_from(np.full((32, 32), 7e-6)))
        assert out.shape == (64, 64)
        assert np.allclose(out, 1.0)


class TestInferBeta:
    def test_reduces_to_dense_bias_with_zero_weights(self):
        wf = build_weights(Head.REGRESSION, dense_bias=[3.0])
        assert infer_beta(wf, demo_image()) == 3.0

    def test_clamps_high(self):
        wf = build_weights(Head.REGRESSION, dense_bias=[250.0])
        assert infer_beta(wf, demo_image()) == BETA_CLAMP[1]

    def test_clamps_low(self):
        wf = build_weights(Head.REGRESSION, dense_bias=[-5.0])
        assert infer_beta(wf, demo_image()) == BETA_CLAMP[0]

    def test_deterministic(self):
        wf = build_weights(Head.REGRESSION, rng=np.random.default_rng(11))
        img = demo_image(seed=12)
        assert infer_beta(wf, img) == infer_beta(wf, img)

    def test_input_scaling_invariance(self):
        wf = build_weights(Head.REGRESSION, rng=np.random.default_rng(13))
        data = np.random.default_rng(14).normal(0, 1e-6, size=(64, 64))
        a = infer_beta(wf, image_from(data))
        b = infer_beta(wf, image_from(8.0 * data))
        assert a == b

    def test_wrong_head_rejected(self):
        wf = build_weights(Head.CLASSIFICATION)
        with pytest.raises(HeadMismatchError):
            infer_beta(wf, demo_image())


class TestInferAxis:
    def test_equal_logits_tie_to_x(self):
        wf = build_weights(Head.CLASSIFICATION)
        axis, confidence = infer_axis(wf, demo_image())
        assert axis is Axis.X
        assert confidence == pytest.approx(0.5)

    def test_bias_ten_zero_confident_x(self):
        wf = build_weights(Head.CLASSIFICATION, dense_bias=[10.0, 0.0])
        axis, confidence = infer_axis(wf, demo_image())
        assert axis is Axis.X
        assert confidence > 0.9999
        assert confidence == pytest.approx(math.exp(10) / (math.exp(10) + 1),
                                           rel=1e-6)

    def test_bias_zero_ten_confident_y(self):
        wf = build_weights(Head.CLASSIFICATION, dense_bias=[0.0, 10.0])
        axis, confidence = infer_axis(wf, demo_image())
        assert axis is Axis.Y
        assert confidence > 0.9999

    def test_confidence_is_probability(self):
        wf = build_weights(Head.CLASSIFICATION, rng=np.random.default_rng(15))
        _, confidence = infer_axis(wf, demo_image(seed=16))
        assert 0.5 <= confidence <= 1.0

    def test_wrong_head_rejected(self):
        wf = build_weights(Head.REGRESSION)
        with pytest.raises(HeadMismatchError):
            infer_axis(wf, demo_image())


class TestCnnEstimator:
    def test_estimate_chains_both_heads(self):
        reg = build_weights(Head.REGRESSION, dense_bias=[2.5])
        cls = build_weights(Head.CLASSIFICATION, dense_bias=[0.0, 4.0])
        est = CnnEstimator(reg, cls)
        beta, axis = est.estimate(demo_image())
        assert beta == 2.5
        assert axis is Axis.Y
        assert est.source is EstimateSource.NEURAL

    def test_rejects_swapped_heads(self):
        reg = build_weights(Head.REGRESSION)
        cls = build_weights(Head.CLASSIFICATION)
        with pytest.raises(HeadMismatchError):
            CnnEstimator(cls, reg)

    def test_satisfies_estimator_protocol(self):
        from magwire.estimate import BetaEstimator

        est = CnnEstimator(build_weights(Head.REGRESSION),
                           build_weights(Head.CLASSIFICATION))
        assert isinstance(est, BetaEstimator)
