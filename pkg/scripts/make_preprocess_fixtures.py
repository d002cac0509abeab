#!/usr/bin/env python3
"""Generate the shared preprocessing fixtures.

Writes 20 field images of assorted sizes plus the expected 64x64 float32
tensors that preprocessing must reproduce bit-for-bit.  Run once; the
outputs are committed so downstream consumers check against identical
bytes rather than regenerating.
"""

import argparse
import math
from pathlib import Path

import numpy as np

from magwire.field import Axis, SegmentParams, pp_distance
from magwire.image import add_noise, read_mfi, render, write_mfi
from magwire.neural import preprocess

SIZES = (32, 48, 64, 96, 128)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("fixtures"))
    parser.add_argument("--seed", type=int, default=20260814)
    args = parser.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    for i in range(20):
        axis = Axis.X if i % 2 == 0 else Axis.Y
        sign = 1.0 if i % 4 < 2 else -1.0
        z0 = float(rng.uniform(50, 500))
        beta = float(np.exp(rng.uniform(math.log(0.5), math.log(20.0))))
        seg = SegmentParams(
            x0=float(rng.uniform(-100, 100)),
            y0=float(rng.uniform(-100, 100)),
            z0=z0,
            length=beta * z0,
            current=sign * float(rng.uniform(0.1, 5.0)),
            axis=axis,
        )
        size = SIZES[i % len(SIZES)]
        pitch = 3.0 * pp_distance(seg.length, seg.z0) / size
        if axis is Axis.X:
            center = (seg.x0 + seg.length / 2.0, seg.y0)
        else:
            center = (seg.x0, seg.y0 + seg.length / 2.0)
        half = pitch * (size - 1) / 2.0
        img = render(seg, size, pitch, (center[0] - half, center[1] - half))
        if i % 3 != 0:
            sigma = (float(img.data.max()) - float(img.data.min())) / 20.0
            img = add_noise(img, sigma, rng_seed=int(rng.integers(0, 2**63)))
        path = args.out / f"preproc_{i:02d}.mfi"
        write_mfi(img, path)
        # Tensors must correspond to the committed f32 bytes, not the
        # pre-quantization field values.
        np.save(path.with_suffix(".npy"), preprocess(read_mfi(path)))
    print(f"wrote 20 fixture pairs to {args.out}")


if __name__ == "__main__":
    main()
