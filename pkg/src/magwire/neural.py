"""Forward-pass inference for the fixed small CNN, plus weight file I/O.

Architecture (frozen contract with the trainer):

    input 1x64x64
    -> conv 3x3, 8 filters, stride 1, pad 1 -> ReLU -> maxpool 2x2
    -> conv 3x3, 16                          -> ReLU -> maxpool 2x2
    -> conv 3x3, 32                          -> ReLU -> maxpool 2x2
    -> global average pool
    -> dense 32->1 (regression) or dense 32->2 + softmax (classification)

Weight format (.mirw), little-endian:

    magic   "MIRW"     4 bytes
    version u32        currently 1
    head    u8         0 = regression, 1 = classification
    layers, in forward order, each:
        kind    u8     1 = conv, 2 = dense
        dims    u32 x 4 (conv: out, in, kh, kw) or u32 x 2 (dense: out, in)
        weights f32 x prod(dims)
        bias    f32 x out

Classification logits are ordered [x-axis, y-axis].
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    HeadMismatchError,
    NonFiniteParameterError,
    ShapeMismatchError,
    TruncatedPayloadError,
    VersionMismatchError,
)
from .estimate import EstimateSource
from .field import Axis
from .image import MfiImage

_MAGIC = b"MIRW"
_VERSION = 1
INPUT_SIZE = 64
BETA_CLAMP = (0.05, 100.0)


class Head(enum.IntEnum):
    """Output head of a weight file."""

    REGRESSION = 0
    CLASSIFICATION = 1


class LayerKind(enum.IntEnum):
    CONV = 1
    DENSE = 2


@dataclass(frozen=True)
class Layer:
    kind: LayerKind
    weights: np.ndarray
    bias: np.ndarray


@dataclass(frozen=True)
class WeightFile:
    """Validated parameters of the fixed architecture."""

    head: Head
    layers: tuple[Layer, ...]


_CONV_SHAPES = ((8, 1, 3, 3), (16, 8, 3, 3), (32, 16, 3, 3))


def _dense_shape(head: Head) -> tuple[int, int]:
    return (1, 32) if head is Head.REGRESSION else (2, 32)


def save_weights(wf: WeightFile, destination) -> None:
    """Serialize to the .mirw format (f32 little-endian payload)."""
    chunks = [_MAGIC, struct.pack("<IB", _VERSION, int(wf.head))]
    for layer in wf.layers:
        dims = layer.weights.shape
        chunks.append(struct.pack("<B", int(layer.kind)))
        chunks.append(struct.pack(f"<{len(dims)}I", *dims))
        chunks.append(layer.weights.astype("<f4").tobytes())
        chunks.append(layer.bias.astype("<f4").tobytes())
    raw = b"".join(chunks)
    if isinstance(destination, (str, Path)):
        Path(destination).write_bytes(raw)
    else:
        destination.write(raw)


class _Reader:
    def __init__(self, raw: bytes):
        self.raw = raw
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.raw):
            raise ShapeMismatchError("file ends inside a layer record")
        out = self.raw[self.pos:self.pos + n]
        self.pos += n
        return out

    def exhausted(self) -> bool:
        return self.pos == len(self.raw)


def load_weights(source) -> WeightFile:
    """Parse and validate a .mirw file against the fixed architecture.

    Raises
    ------
    BadMagicError, VersionMismatchError, ShapeMismatchError,
    NonFiniteParameterError
        Distinct failure modes; a file with missing or extra parameter
        bytes is a shape mismatch.
    """
    if isinstance(source, (str, Path)):
        raw = Path(source).read_bytes()
    else:
        raw = source.read()
    if len(raw) < 4 or raw[:4] != _MAGIC:
        raise BadMagicError(f"expected magic {_MAGIC!r}")
    if len(raw) < 9:
        raise TruncatedPayloadError("incomplete header")
    version, head_byte = struct.unpack_from("<IB", raw, 4)
    if version != _VERSION:
        raise VersionMismatchError(f"unsupported version {version}")
    try:
        head = Head(head_byte)
    except ValueError:
        raise ShapeMismatchError(f"unknown head kind {head_byte}") from None

    expected: list[tuple[LayerKind, tuple[int, ...]]] = [
        (LayerKind.CONV, s) for s in _CONV_SHAPES
    ]
    expected.append((LayerKind.DENSE, _dense_shape(head)))

    reader = _Reader(raw[9:])
    layers = []
    for want_kind, want_dims in expected:
        (kind_byte,) = struct.unpack("<B", reader.take(1))
        if kind_byte != int(want_kind):
            raise ShapeMismatchError(
                f"layer kind {kind_byte}, expected {int(want_kind)}")
        ndim = 4 if want_kind is LayerKind.CONV else 2
        dims = struct.unpack(f"<{ndim}I", reader.take(4 * ndim))
        if dims != want_dims:
            raise ShapeMismatchError(f"layer dims {dims}, expected {want_dims}")
        count = int(np.prod(dims))
        weights = np.frombuffer(reader.take(4 * count), dtype="<f4")
        bias = np.frombuffer(reader.take(4 * dims[0]), dtype="<f4")
        if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(bias))):
            raise NonFiniteParameterError("non-finite parameter value")
        layers.append(Layer(kind=want_kind,
                            weights=weights.reshape(dims).copy(),
                            bias=bias.copy()))
    if not reader.exhausted():
        raise ShapeMismatchError("trailing bytes after final layer")
    return WeightFile(head=head, layers=tuple(layers))


def preprocess(img: MfiImage) -> np.ndarray:
    """Normalize an image to the network's 64x64 [-1, 1] input.

    Bilinear resample (half-pixel centers, double precision) if the image is
    not already 64x64, then divide by the maximum absolute value of the
    resampled grid.  An all-zero image stays all zeros.  Returns float32.
    """
    data = _resample_bilinear(img.data, INPUT_SIZE)
    peak = np.abs(data).max()
    if peak > 0:
        data = data / peak
    return data.astype(np.float32)


def _resample_bilinear(data: np.ndarray, out_size: int) -> np.ndarray:
    in_size = data.shape[0]
    if in_size == out_size:
        return data.copy()
    scale = in_size / out_size
    coords = (np.arange(out_size) + 0.5) * scale - 0.5
    lo = np.floor(coords).astype(int)
    frac = coords - lo
    lo0 = np.clip(lo, 0, in_size - 1)
    lo1 = np.clip(lo + 1, 0, in_size - 1)
    rows = (data[lo0, :] * (1.0 - frac)[:, None]
            + data[lo1, :] * frac[:, None])
    return (rows[:, lo0] * (1.0 - frac)[None, :]
            + rows[:, lo1] * frac[None, :])


def _conv3x3(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    c, h, width = x.shape
    padded = np.zeros((c, h + 2, width + 2), dtype=np.float32)
    padded[:, 1:-1, 1:-1] = x
    cols = np.empty((c, 9, h, width), dtype=np.float32)
    k = 0
    for di in range(3):
        for dj in range(3):
            cols[:, k] = padded[:, di:di + h, dj:dj + width]
            k += 1
    flat = cols.reshape(c * 9, h * width)
    out = w.reshape(w.shape[0], c * 9) @ flat + b[:, None]
    return out.reshape(w.shape[0], h, width)


def _maxpool2(x: np.ndarray) -> np.ndarray:
    c, h, w = x.shape
    return x.reshape(c, h // 2, 2, w // 2, 2).max(axis=(2, 4))


def _forward(wf: WeightFile, img: MfiImage) -> np.ndarray:
    x = preprocess(img)[None, :, :]
    for layer in wf.layers[:3]:
        x = _conv3x3(x, layer.weights, layer.bias)
        x = np.maximum(x, 0.0)
        x = _maxpool2(x)
    pooled = x.mean(axis=(1, 2))
    dense = wf.layers[3]
    return dense.weights @ pooled + dense.bias


def infer_beta(wf: WeightFile, img: MfiImage) -> float:
    """Regression head output, clamped to the trainable range."""
    if wf.head is not Head.REGRESSION:
        raise HeadMismatchError("weight file does not carry a regression head")
    raw = float(_forward(wf, img)[0])
    return min(max(raw, BETA_CLAMP[0]), BETA_CLAMP[1])


def infer_axis(wf: WeightFile, img: MfiImage) -> tuple[Axis, float]:
    """Classification head output: (axis, winning probability).

    Equal logits tie-break to X.
    """
    if wf.head is not Head.CLASSIFICATION:
        raise HeadMismatchError("weight file does not carry a classification head")
    logits = _forward(wf, img).astype(np.float64)
    shifted = np.exp(logits - logits.max())
    probs = shifted / shifted.sum()
    if probs[1] > probs[0]:
        return Axis.Y, float(probs[1])
    return Axis.X, float(probs[0])


class CnnEstimator:
    """Beta/axis estimator backed by trained weight files."""

    source = EstimateSource.NEURAL

    def __init__(self, regression: WeightFile, classification: WeightFile):
        if regression.head is not Head.REGRESSION:
            raise HeadMismatchError("first weight file must be the regression head")
        if classification.head is not Head.CLASSIFICATION:
            raise HeadMismatchError(
                "second weight file must be the classification head")
        self._regression = regression
        self._classification = classification

    def estimate(self, img: MfiImage) -> tuple[float, Axis]:
        axis, _ = infer_axis(self._classification, img)
        return infer_beta(self._regression, img), axis
