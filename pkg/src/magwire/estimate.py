"""Initial parameter estimation from one field image.

Chain: a beta estimator (neural or analytic fallback) supplies (beta, axis);
the extrema geometry then fixes depth, length, position, current magnitude
and sign.  The output seeds the simplex refinement.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from .errors import EstimationError
from .field import Axis, SegmentParams, depth_from_pp, peak_current_estimate
from .fit import chi2, objective_for
from .image import ExtremaReport, MfiImage, find_extrema

FALLBACK_BETA_GRID = np.geomspace(0.1, 50.0, 64)


class EstimateSource(enum.Enum):
    """Which estimator produced the initial beta and axis."""

    NEURAL = "neural"
    ANALYTIC_FALLBACK = "analytic-fallback"


@dataclass(frozen=True)
class EstimateBundle:
    """Initial estimate of all segment parameters.

    Attributes
    ----------
    params : SegmentParams
        The estimated segment, internally consistent (length = z0 * beta).
    beta : float
        Length-to-depth ratio as estimated.
    pp : float
        Measured peak separation, micrometers.
    source : EstimateSource
    """

    params: SegmentParams
    beta: float
    pp: float
    source: EstimateSource

    def __post_init__(self) -> None:
        if self.pp <= 0:
            raise ValueError(f"pp must be positive, got {self.pp}")
        if abs(self.params.length - self.params.z0 * self.beta) > \
                1e-9 * self.params.length:
            raise ValueError("length does not equal z0 * beta")


@runtime_checkable
class BetaEstimator(Protocol):
    """Behavioral contract: image in, (beta, axis) out."""

    source: EstimateSource

    def estimate(self, img: MfiImage) -> tuple[float, Axis]: ...


def classify_axis_analytic(img: MfiImage) -> Axis:
    """Segment orientation from the extrema offset direction.

    The two lobes sit across the segment, so the dominant extrema offset is
    transverse: mostly-vertical offset means an x-segment.  Ties go to X.
    """
    ext = find_extrema(img)
    if ext.max_pos == ext.min_pos:
        raise EstimationError("extrema coincide; cannot classify axis")
    dx = abs(ext.max_pos.x - ext.min_pos.x)
    dy = abs(ext.max_pos.y - ext.min_pos.y)
    return Axis.X if dy >= dx else Axis.Y


def _bundle_from_geometry(ext: ExtremaReport, beta: float, axis: Axis,
                          source: EstimateSource) -> EstimateBundle:
    if axis is Axis.X:
        pp = abs(ext.max_pos.y - ext.min_pos.y)
    else:
        pp = abs(ext.max_pos.x - ext.min_pos.x)
    if pp <= 0:
        raise EstimationError("extrema do not separate along the transverse axis")
    if ext.max_val <= 0:
        raise EstimationError("image maximum is not positive")
    z0 = depth_from_pp(pp, beta)
    length = z0 * beta
    magnitude = peak_current_estimate(ext.max_val, length, z0)
    if axis is Axis.X:
        x0 = ext.max_pos.x - length / 2.0
        y0 = (ext.max_pos.y + ext.min_pos.y) / 2.0
        positive = ext.max_pos.y > ext.min_pos.y
    else:
        x0 = (ext.max_pos.x + ext.min_pos.x) / 2.0
        y0 = ext.max_pos.y - length / 2.0
        positive = ext.max_pos.x < ext.min_pos.x
    current = magnitude if positive else -magnitude
    params = SegmentParams(x0=x0, y0=y0, z0=z0, length=length,
                           current=current, axis=axis)
    return EstimateBundle(params=params, beta=beta, pp=pp, source=source)


def estimate_beta_fallback(img: MfiImage) -> tuple[float, Axis]:
    """Pick beta from a log grid by scoring forward-rendered candidates.

    For each candidate beta the full geometry is derived from the extrema,
    the candidate segment is rendered on the image grid, and the chi-square
    against the data decides.  Ties go to the smaller beta.
    """
    axis = classify_axis_analytic(img)
    ext = find_extrema(img)
    obj = objective_for(img, axis)
    best_beta = None
    best_score = None
    for beta in FALLBACK_BETA_GRID:
        bundle = _bundle_from_geometry(ext, float(beta), axis,
                                       EstimateSource.ANALYTIC_FALLBACK)
        score = chi2(obj, bundle.params)
        if best_score is None or score < best_score:
            best_score = score
            best_beta = float(beta)
    return best_beta, axis


class AnalyticEstimator:
    """Fallback estimator needing no trained weights."""

    source = EstimateSource.ANALYTIC_FALLBACK

    def estimate(self, img: MfiImage) -> tuple[float, Axis]:
        return estimate_beta_fallback(img)


def initial_estimate(img: MfiImage, estimator: BetaEstimator) -> EstimateBundle:
    """Full initial estimate of one image: beta and axis from the estimator,
    everything else from the extrema geometry."""
    beta, axis = estimator.estimate(img)
    if not beta > 0:
        raise EstimationError(f"estimator returned beta = {beta}")
    ext = find_extrema(img)
    if ext.max_pos == ext.min_pos:
        raise EstimationError("extrema coincide; cannot estimate")
    return _bundle_from_geometry(ext, beta, axis, estimator.source)
