"""Recover 3D wire-segment parameters from magnetic field images.

The pipeline: render or load a Bz image, estimate starting parameters from
its extrema geometry (analytic fallback or trained CNN), then refine with a
simplex fit of the closed-form field model.
"""

from .errors import (
    BadMagicError,
    EstimationError,
    FormatError,
    HeadMismatchError,
    MagwireError,
    NoiseUndefinedError,
    NonFiniteParameterError,
    ShapeMismatchError,
    SizeMismatchError,
    TruncatedPayloadError,
    VersionMismatchError,
)
from .field import (
    MU0_OVER_4PI,
    Axis,
    FieldPoint,
    SegmentParams,
    bz_at,
    bz_grid,
    depth_from_pp,
    peak_current_estimate,
    pp_distance,
)
from .estimate import (
    AnalyticEstimator,
    BetaEstimator,
    EstimateBundle,
    EstimateSource,
    classify_axis_analytic,
    estimate_beta_fallback,
    initial_estimate,
)
from .fit import (
    FitReport,
    Objective,
    SimplexConfig,
    SimplexResult,
    chi2,
    estimate_sigma_b,
    minimize,
    nelder_mead,
    objective_for,
    residual,
)
from .image import (
    ExtremaReport,
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
from .neural import (
    CnnEstimator,
    Head,
    WeightFile,
    infer_axis,
    infer_beta,
    load_weights,
    preprocess,
    save_weights,
)

__all__ = [
    "MU0_OVER_4PI",
    "Axis",
    "FieldPoint",
    "SegmentParams",
    "bz_at",
    "bz_grid",
    "depth_from_pp",
    "peak_current_estimate",
    "pp_distance",
    "ExtremaReport",
    "MfiImage",
    "add_noise",
    "export_heatmap",
    "find_extrema",
    "frame_for",
    "read_mfi",
    "render",
    "snr",
    "write_mfi",
    "AnalyticEstimator",
    "BetaEstimator",
    "EstimateBundle",
    "EstimateSource",
    "classify_axis_analytic",
    "estimate_beta_fallback",
    "initial_estimate",
    "FitReport",
    "Objective",
    "SimplexConfig",
    "SimplexResult",
    "chi2",
    "estimate_sigma_b",
    "minimize",
    "nelder_mead",
    "objective_for",
    "residual",
    "CnnEstimator",
    "Head",
    "WeightFile",
    "infer_axis",
    "infer_beta",
    "load_weights",
    "preprocess",
    "save_weights",
    "MagwireError",
    "FormatError",
    "BadMagicError",
    "TruncatedPayloadError",
    "SizeMismatchError",
    "VersionMismatchError",
    "ShapeMismatchError",
    "NonFiniteParameterError",
    "EstimationError",
    "NoiseUndefinedError",
    "HeadMismatchError",
]

__version__ = "0.1.0"
