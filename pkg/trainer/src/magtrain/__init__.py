"""Training side of the wire-segment toolchain.

Consumes .mfi images and a TSV manifest, trains the fixed CNN for beta
regression or axis classification, and exports .mirw weights for the
inference side.  The two sides share only those file formats.
"""

from .data import load_manifest, load_split, preprocess
from .formats import MfiRecord, read_mfi, read_mirw, write_mirw
from .model import BETA_CLAMP, Head, SegmentCnn
from .train import EvalReport, TrainConfig, evaluate_model, predict, train

__all__ = [
    "BETA_CLAMP",
    "EvalReport",
    "Head",
    "MfiRecord",
    "SegmentCnn",
    "TrainConfig",
    "evaluate_model",
    "load_manifest",
    "load_split",
    "predict",
    "preprocess",
    "read_mfi",
    "read_mirw",
    "train",
    "write_mirw",
]

__version__ = "0.1.0"
