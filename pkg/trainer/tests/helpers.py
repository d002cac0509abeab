"""Shared builders for trainer tests."""

import struct
from pathlib import Path

import numpy as np

HEADER = struct.Struct("<4sIdddd")

MANIFEST_HEADER = ("file\tsplit\taxis\tx0_um\ty0_um\tz0_um\tlength_um\t"
                   "beta\tcurrent_a\tnoise_sigma_t\tsnr_target\n")


def mfi_bytes(data: np.ndarray, pitch=2.5, ox=-10.0, oy=-20.0,
              sigma=0.0) -> bytes:
    size = data.shape[0]
    return (HEADER.pack(b"MFI1", size, pitch, ox, oy, sigma)
            + data.astype("<f4").tobytes())


def write_toy_dataset(root: Path, n: int = 6) -> Path:
    """n tiny noise images cycled over splits/axes with beta = 0.5 + i."""
    rng = np.random.default_rng(11)
    lines = [MANIFEST_HEADER]
    for i in range(n):
        split = ("train", "val", "test")[i % 3]
        axis = "xy"[i % 2]
        beta = 0.5 + i
        name = f"{split}_{i:05d}.mfi"
        (root / name).write_bytes(mfi_bytes(rng.normal(size=(16, 16)) * 1e-6))
        lines.append(f"{name}\t{split}\t{axis}\t0\t0\t100\t{100 * beta}\t"
                     f"{beta}\t1\t0\t50\n")
    manifest = root / "manifest.tsv"
    manifest.write_text("".join(lines))
    return manifest
