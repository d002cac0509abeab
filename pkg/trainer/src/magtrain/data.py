"""Manifest parsing and input preprocessing.

Preprocessing must reproduce the inference side bit-for-bit: bilinear
resample to 64x64 with half-pixel centers in double precision, divide by
the max absolute value, single cast to float32.  The committed fixture
tensors pin this.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .formats import MfiRecord, read_mfi

INPUT_SIZE = 64

_REQUIRED_COLUMNS = ("file", "split", "axis", "z0_um", "length_um", "beta")


@dataclass(frozen=True)
class ManifestEntry:
    file: str
    split: str
    axis: str  # "x" or "y"
    beta: float


def load_manifest(path) -> list[ManifestEntry]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        missing = [c for c in _REQUIRED_COLUMNS
                   if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: manifest lacks columns {missing}")
        entries = []
        for row in reader:
            if row["axis"] not in ("x", "y"):
                raise ValueError(f"{path}: bad axis {row['axis']!r}")
            entries.append(ManifestEntry(
                file=row["file"], split=row["split"], axis=row["axis"],
                beta=float(row["beta"])))
    return entries


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


def preprocess(img: MfiRecord) -> np.ndarray:
    data = _resample_bilinear(img.data, INPUT_SIZE)
    peak = np.abs(data).max()
    if peak > 0:
        data = data / peak
    return data.astype(np.float32)


def load_split(manifest_path, split: str, data_dir=None):
    """Load one split as (inputs, betas, axis_labels).

    inputs: float32 (N, 1, 64, 64); axis labels 0 for x, 1 for y, matching
    the classifier's logit order.
    """
    manifest_path = Path(manifest_path)
    base = Path(data_dir) if data_dir is not None else manifest_path.parent
    entries = [e for e in load_manifest(manifest_path) if e.split == split]
    if not entries:
        raise ValueError(f"{manifest_path}: no rows for split {split!r}")
    inputs = np.empty((len(entries), 1, INPUT_SIZE, INPUT_SIZE),
                      dtype=np.float32)
    betas = np.empty(len(entries), dtype=np.float32)
    labels = np.empty(len(entries), dtype=np.int64)
    for i, entry in enumerate(entries):
        inputs[i, 0] = preprocess(read_mfi(base / entry.file))
        betas[i] = entry.beta
        labels[i] = 0 if entry.axis == "x" else 1
    return inputs, betas, labels
