"""Magnetic field image container, analytics and file I/O.

An MFI is a square grid of Bz samples with physical metadata.  Images are
immutable after construction; every operation returns a new value.

Binary format (.mfi), little-endian throughout::

    magic   "MFI1"            4 bytes
    size    u32               pixels per side
    pitch   f64               micrometers per pixel
    origin  f64 x 2           physical (x, y) of pixel (0, 0) center, um
    sigma   f64               noise sigma in tesla (0 = noiseless/unknown)
    data    f32 x size^2      row-major Bz samples, tesla

Row index maps to y, column index to x.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    NoiseUndefinedError,
    SizeMismatchError,
    TruncatedPayloadError,
)
from .field import Axis, FieldPoint, SegmentParams, bz_grid, pp_distance

_MAGIC = b"MFI1"
_HEADER = struct.Struct("<4sIdddd")


@dataclass(frozen=True)
class MfiImage:
    """Square grid of Bz samples with physical metadata.

    Attributes
    ----------
    size : int
        Pixels per side (>= 8).
    pitch : float
        Micrometers per pixel (> 0).
    origin : tuple of float
        Physical (x, y) of the pixel (0, 0) center, micrometers.
    data : ndarray
        (size, size) float64 Bz values in tesla; row index = y.
    noise_sigma : float
        Sigma of injected Gaussian noise in tesla; 0 if noiseless/unknown.
    """

    size: int
    pitch: float
    origin: tuple[float, float]
    data: np.ndarray
    noise_sigma: float = 0.0

    def __post_init__(self) -> None:
        if self.size < 8:
            raise ValueError(f"size must be >= 8, got {self.size}")
        if self.pitch <= 0:
            raise ValueError(f"pitch must be positive, got {self.pitch}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be nonnegative, got {self.noise_sigma}")
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.shape != (self.size, self.size):
            raise ValueError(f"data shape {data.shape} != ({self.size}, {self.size})")
        if not np.all(np.isfinite(data)):
            raise ValueError("data contains non-finite values")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    def x_coords(self) -> np.ndarray:
        """Physical x of each column center, micrometers."""
        return self.origin[0] + self.pitch * np.arange(self.size)

    def y_coords(self) -> np.ndarray:
        """Physical y of each row center, micrometers."""
        return self.origin[1] + self.pitch * np.arange(self.size)

    def span(self) -> float:
        """Physical side length of the frame, micrometers."""
        return self.size * self.pitch


@dataclass(frozen=True)
class ExtremaReport:
    """Locations and values of the image maximum and minimum."""

    max_pos: FieldPoint
    min_pos: FieldPoint
    max_val: float
    min_val: float

    def __post_init__(self) -> None:
        if self.max_val < self.min_val:
            raise ValueError("max_val must be >= min_val")


def render(seg: SegmentParams, size: int, pitch: float,
           origin: tuple[float, float]) -> MfiImage:
    """Sample the closed-form field of ``seg`` at pixel centers."""
    xs = origin[0] + pitch * np.arange(size)
    ys = origin[1] + pitch * np.arange(size)
    data = bz_grid(seg, xs[None, :], ys[:, None])
    return MfiImage(size=size, pitch=pitch, origin=origin, data=data, noise_sigma=0.0)


def frame_for(seg: SegmentParams, size: int = 64, span_factor: float = 6.0
              ) -> tuple[float, tuple[float, float]]:
    """Pick (pitch, origin) so the frame spans ``span_factor`` peak separations.

    The frame is centered on the field pattern (segment midpoint).  The
    default factor of 6 gives generous margins for interactive rendering;
    the dataset generator uses a tighter factor.
    """
    pp = pp_distance(seg.length, seg.z0)
    pitch = span_factor * pp / size
    if seg.axis is Axis.X:
        center = (seg.x0 + seg.length / 2.0, seg.y0)
    else:
        center = (seg.x0, seg.y0 + seg.length / 2.0)
    half = pitch * (size - 1) / 2.0
    return pitch, (center[0] - half, center[1] - half)


def add_noise(img: MfiImage, sigma: float, rng_seed: int) -> MfiImage:
    """Add i.i.d. Gaussian noise N(0, sigma^2) per pixel, deterministically."""
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    rng = np.random.default_rng(rng_seed)
    data = img.data + rng.normal(0.0, sigma, size=img.data.shape) if sigma > 0 else img.data
    return replace(img, data=data, noise_sigma=sigma)


def find_extrema(img: MfiImage) -> ExtremaReport:
    """Locate the argmax/argmin pixels in physical coordinates.

    Ties are broken by smallest row, then smallest column (first hit in
    row-major scan order).
    """
    flat = img.data.ravel()
    rmax, cmax = divmod(int(np.argmax(flat)), img.size)
    rmin, cmin = divmod(int(np.argmin(flat)), img.size)
    ox, oy = img.origin
    return ExtremaReport(
        max_pos=FieldPoint(ox + cmax * img.pitch, oy + rmax * img.pitch),
        min_pos=FieldPoint(ox + cmin * img.pitch, oy + rmin * img.pitch),
        max_val=float(img.data[rmax, cmax]),
        min_val=float(img.data[rmin, cmin]),
    )


def snr(img: MfiImage) -> float:
    """Signal-to-noise ratio: half the peak-to-peak amplitude over sigma."""
    if img.noise_sigma <= 0:
        raise NoiseUndefinedError("image has no recorded noise sigma")
    ext = find_extrema(img)
    return (ext.max_val - ext.min_val) / (2.0 * img.noise_sigma)


def write_mfi(img: MfiImage, destination) -> None:
    """Serialize to the .mfi binary format (payload stored as f32)."""
    header = _HEADER.pack(_MAGIC, img.size, img.pitch,
                          img.origin[0], img.origin[1], img.noise_sigma)
    payload = img.data.astype("<f4").tobytes()
    if isinstance(destination, (str, Path)):
        with open(destination, "wb") as fh:
            fh.write(header)
            fh.write(payload)
    else:
        destination.write(header)
        destination.write(payload)


def read_mfi(source) -> MfiImage:
    """Deserialize an .mfi file, validating magic, size and payload length."""
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            raw = fh.read()
    else:
        raw = source.read()
    if len(raw) < 4 or raw[:4] != _MAGIC:
        raise BadMagicError(f"expected magic {_MAGIC!r}")
    if len(raw) < _HEADER.size:
        raise TruncatedPayloadError("incomplete header")
    _, size, pitch, ox, oy, sigma = _HEADER.unpack_from(raw)
    if size < 8:
        raise SizeMismatchError(f"declared size {size} is below the minimum of 8")
    expected = size * size * 4
    body = raw[_HEADER.size:]
    if len(body) < expected:
        raise TruncatedPayloadError(
            f"payload has {len(body)} bytes, expected {expected}")
    if len(body) > expected:
        raise SizeMismatchError(
            f"payload has {len(body)} bytes, expected exactly {expected}")
    data = np.frombuffer(body, dtype="<f4").astype(np.float64).reshape(size, size)
    if not np.all(np.isfinite(data)):
        raise SizeMismatchError("payload contains non-finite values")
    return MfiImage(size=size, pitch=pitch, origin=(ox, oy), data=data,
                    noise_sigma=sigma)


def export_heatmap(img: MfiImage, destination) -> None:
    """Write an 8-bit grayscale PGM (P5) with [min, max] mapped to [0, 255].

    A constant image maps to mid-gray (128).
    """
    lo = float(img.data.min())
    hi = float(img.data.max())
    if hi > lo:
        levels = np.rint((img.data - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        levels = np.full(img.data.shape, 128, dtype=np.uint8)
    header = f"P5\n{img.size} {img.size}\n255\n".encode("ascii")
    if isinstance(destination, (str, Path)):
        with open(destination, "wb") as fh:
            fh.write(header)
            fh.write(levels.tobytes())
    else:
        destination.write(header)
        destination.write(levels.tobytes())
