"""Synthetic dataset generation: rendered segments with calibrated noise.

Every image gets its own frame (pitch set so the peak separation spans about
a third of the frame), a randomized segment, and Gaussian noise scaled to hit
a target S/N.  Generation is byte-reproducible from the master seed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .field import Axis, SegmentParams, pp_distance
from .image import add_noise, find_extrema, render, write_mfi

log = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "val", "test")

MANIFEST_COLUMNS = (
    "file", "split", "axis", "x0_um", "y0_um", "z0_um", "length_um",
    "beta", "current_a", "noise_sigma_t", "snr_target",
)


@dataclass(frozen=True)
class DatasetSpec:
    """Generation ranges and counts.

    beta is sampled log-uniformly (length = beta * z0); everything else
    uniformly.  noise sigma is set per image from a uniform S/N target.
    """

    counts: tuple[int, int, int] = (5000, 600, 500)
    z0_range: tuple[float, float] = (50.0, 500.0)
    beta_range: tuple[float, float] = (0.5, 20.0)
    current_range: tuple[float, float] = (0.1, 5.0)
    snr_range: tuple[float, float] = (3.0, 100.0)
    size: int = 64
    span_factor: float = 3.0
    center_jitter: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.counts) != 3 or any(c <= 0 for c in self.counts):
            raise ValueError(f"counts must be three positive ints, got {self.counts}")
        for name in ("z0_range", "beta_range", "current_range", "snr_range"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise ValueError(f"{name} must satisfy 0 < lo <= hi, got ({lo}, {hi})")
        if self.size < 8:
            raise ValueError(f"size must be >= 8, got {self.size}")
        if self.span_factor <= 0:
            raise ValueError("span_factor must be positive")
        if not 0 <= self.center_jitter < 0.5:
            raise ValueError("center_jitter must be in [0, 0.5)")


def _draw_segment(spec: DatasetSpec, rng: np.random.Generator,
                  axis: Axis, sign: float) -> SegmentParams:
    z0 = float(rng.uniform(*spec.z0_range))
    log_lo, log_hi = math.log(spec.beta_range[0]), math.log(spec.beta_range[1])
    beta = float(np.exp(rng.uniform(log_lo, log_hi)))
    length = beta * z0
    magnitude = float(rng.uniform(*spec.current_range))
    # Positions are drawn after the frame is placed; start at the frame
    # center and let the jitter move the pattern.
    if axis is Axis.X:
        x0, y0 = -length / 2.0, 0.0
    else:
        x0, y0 = 0.0, -length / 2.0
    return SegmentParams(x0=x0, y0=y0, z0=z0, length=length,
                         current=sign * magnitude, axis=axis)


def _frame_with_jitter(spec: DatasetSpec, rng: np.random.Generator,
                       seg: SegmentParams) -> tuple[float, tuple[float, float]]:
    pp = pp_distance(seg.length, seg.z0)
    pitch = spec.span_factor * pp / spec.size
    span = pitch * spec.size
    if seg.axis is Axis.X:
        center = (seg.x0 + seg.length / 2.0, seg.y0)
    else:
        center = (seg.x0, seg.y0 + seg.length / 2.0)
    jx = float(rng.uniform(-spec.center_jitter, spec.center_jitter)) * span
    jy = float(rng.uniform(-spec.center_jitter, spec.center_jitter)) * span
    half = pitch * (spec.size - 1) / 2.0
    return pitch, (center[0] - half + jx, center[1] - half + jy)


def generate(spec: DatasetSpec, out_dir) -> Path:
    """Write the dataset and its manifest; return the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    total = sum(spec.counts)
    children = np.random.SeedSequence(spec.seed).spawn(total)
    lines = ["\t".join(MANIFEST_COLUMNS)]
    k = 0
    for split, count in zip(SPLIT_NAMES, spec.counts):
        for i in range(count):
            rng = np.random.default_rng(children[k])
            k += 1
            # Cycle axis and sign so each split stays balanced within one.
            axis = Axis.X if i % 2 == 0 else Axis.Y
            sign = 1.0 if i % 4 < 2 else -1.0
            seg = _draw_segment(spec, rng, axis, sign)
            pitch, origin = _frame_with_jitter(spec, rng, seg)
            clean = render(seg, spec.size, pitch, origin)
            ext = find_extrema(clean)
            target_snr = float(rng.uniform(*spec.snr_range))
            sigma = (ext.max_val - ext.min_val) / (2.0 * target_snr)
            noise_seed = int(rng.integers(0, 2**63))
            noisy = add_noise(clean, sigma, noise_seed)
            name = f"{split}_{i:05d}.mfi"
            write_mfi(noisy, out / name)
            lines.append("\t".join([
                name, split, seg.axis.value,
                f"{seg.x0:.17g}", f"{seg.y0:.17g}", f"{seg.z0:.17g}",
                f"{seg.length:.17g}", f"{seg.beta:.17g}",
                f"{seg.current:.17g}", f"{sigma:.17g}", f"{target_snr:.17g}",
            ]))
        log.info("generated %d %s images", count, split)
    manifest = out / "manifest.tsv"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


@dataclass(frozen=True)
class ManifestRow:
    """One ground-truth record from a dataset manifest."""

    file: str
    split: str
    params: SegmentParams
    noise_sigma: float
    snr_target: float

    @property
    def beta(self) -> float:
        return self.params.beta


def read_manifest(path) -> list[ManifestRow]:
    """Parse a manifest TSV into ground-truth rows."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split("\t")
    if tuple(header) != MANIFEST_COLUMNS:
        raise ValueError(f"unexpected manifest columns: {header}")
    rows = []
    for ln in lines[1:]:
        f = dict(zip(MANIFEST_COLUMNS, ln.split("\t")))
        params = SegmentParams(
            x0=float(f["x0_um"]), y0=float(f["y0_um"]), z0=float(f["z0_um"]),
            length=float(f["length_um"]), current=float(f["current_a"]),
            axis=Axis(f["axis"]),
        )
        rows.append(ManifestRow(file=f["file"], split=f["split"], params=params,
                                noise_sigma=float(f["noise_sigma_t"]),
                                snr_target=float(f["snr_target"])))
    return rows
