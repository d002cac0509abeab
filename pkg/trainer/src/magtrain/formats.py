"""Readers and writers for the shared on-disk formats.

The image (.mfi) and weight (.mirw) layouts are the contract with the
inference side; this module implements them from the byte level up and
deliberately imports nothing from that side.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_MFI_MAGIC = b"MFI1"
_MFI_HEADER = struct.Struct("<4sIdddd")

_MIRW_MAGIC = b"MIRW"
_MIRW_VERSION = 1

# kind byte -> dims-tuple length
_KIND_CONV = 1
_KIND_DENSE = 2


@dataclass(frozen=True)
class MfiRecord:
    """One field image as stored on disk."""

    data: np.ndarray  # float64, (size, size), row-major from the f32 payload
    pitch: float
    origin_x: float
    origin_y: float
    noise_sigma: float

    @property
    def size(self) -> int:
        return self.data.shape[0]


def read_mfi(path) -> MfiRecord:
    raw = Path(path).read_bytes()
    if len(raw) < _MFI_HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, size, pitch, ox, oy, sigma = _MFI_HEADER.unpack_from(raw)
    if magic != _MFI_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    payload = raw[_MFI_HEADER.size:]
    if len(payload) != size * size * 4:
        raise ValueError(f"{path}: payload is {len(payload)} bytes, "
                         f"expected {size * size * 4}")
    data = np.frombuffer(payload, dtype="<f4").reshape(size, size)
    data = data.astype(np.float64)
    if not np.isfinite(data).all():
        raise ValueError(f"{path}: non-finite pixels")
    return MfiRecord(data=data, pitch=pitch, origin_x=ox, origin_y=oy,
                     noise_sigma=sigma)


def write_mirw(head: int, layers, destination) -> None:
    """Serialize layers as the versioned little-endian weight format.

    ``layers`` is a sequence of (kind, weights, bias) with float32 arrays;
    conv weights are (out, in, kh, kw), dense weights (out, in).
    """
    chunks = [_MIRW_MAGIC, struct.pack("<IB", _MIRW_VERSION, head)]
    for kind, weights, bias in layers:
        dims = weights.shape
        chunks.append(struct.pack("<B", kind))
        chunks.append(struct.pack(f"<{len(dims)}I", *dims))
        chunks.append(np.ascontiguousarray(weights, dtype="<f4").tobytes())
        chunks.append(np.ascontiguousarray(bias, dtype="<f4").tobytes())
    Path(destination).write_bytes(b"".join(chunks))


def read_mirw(path) -> tuple[int, list[tuple[int, np.ndarray, np.ndarray]]]:
    """Parse a weight file back into (head, [(kind, weights, bias), ...])."""
    raw = Path(path).read_bytes()
    if raw[:4] != _MIRW_MAGIC:
        raise ValueError(f"{path}: bad magic")
    version, head = struct.unpack_from("<IB", raw, 4)
    if version != _MIRW_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    pos = 9
    layers = []
    while pos < len(raw):
        kind = raw[pos]
        pos += 1
        ndims = 4 if kind == _KIND_CONV else 2
        if kind not in (_KIND_CONV, _KIND_DENSE):
            raise ValueError(f"{path}: unknown layer kind {kind}")
        dims = struct.unpack_from(f"<{ndims}I", raw, pos)
        pos += 4 * ndims
        n = int(np.prod(dims))
        weights = np.frombuffer(raw, dtype="<f4", count=n, offset=pos)
        pos += 4 * n
        bias = np.frombuffer(raw, dtype="<f4", count=dims[0], offset=pos)
        pos += 4 * dims[0]
        layers.append((kind, weights.reshape(dims).copy(), bias.copy()))
    if pos != len(raw):
        raise ValueError(f"{path}: trailing bytes")
    return head, layers
