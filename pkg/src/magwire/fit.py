"""Chi-square objective and Nelder-Mead refinement of segment parameters.

The engine is a plain Nelder-Mead simplex over R^n; the physics enters only
through the objective.  Depth and length are optimized in log space so they
stay positive without penalty terms; x0, y0 and I are unconstrained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .field import Axis, SegmentParams, _bz_raw
from .image import MfiImage

SIGMA_B_FLOOR = 1e-12


@dataclass(frozen=True)
class SimplexConfig:
    """Nelder-Mead coefficients and stopping rules."""

    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    f_tol: float = 1e-8
    x_tol: float = 1e-6
    max_evaluations: int = 5000


@dataclass(frozen=True)
class SimplexResult:
    """Best point found by the engine and its bookkeeping."""

    x: np.ndarray
    fx: float
    iterations: int
    evaluations: int
    converged: bool


def nelder_mead(f: Callable[[np.ndarray], float], x0: Sequence[float],
                steps: Sequence[float], cfg: SimplexConfig = SimplexConfig()
                ) -> SimplexResult:
    """Minimize ``f`` from ``x0`` with per-coordinate initial steps.

    Returns the best point ever evaluated, not the final simplex centroid.
    A non-finite value at the start vertex aborts immediately with
    ``converged=False``.

    Parameters
    ----------
    f : callable
        Objective, R^n -> R.
    x0 : sequence of float
        Start vertex.
    steps : sequence of float
        Nonzero perturbation of each coordinate for the initial simplex.

    Returns
    -------
    SimplexResult
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    steps = np.asarray(steps, dtype=float)
    if steps.shape != (n,) or np.any(steps == 0):
        raise ValueError("steps must match x0 and be nonzero")

    evaluations = 0

    def call(x: np.ndarray) -> float:
        nonlocal evaluations
        evaluations += 1
        return float(f(x))

    f0 = call(x0)
    if not math.isfinite(f0):
        return SimplexResult(x=x0, fx=f0, iterations=0, evaluations=evaluations,
                             converged=False)

    verts = [x0]
    vals = [f0]
    for i in range(n):
        v = x0.copy()
        v[i] += steps[i]
        verts.append(v)
        vals.append(call(v))
    simplex = np.array(verts)
    fvals = np.array(vals)

    best_x = simplex[int(np.argmin(fvals))].copy()
    best_f = float(np.min(fvals))
    iterations = 0
    converged = False

    while True:
        order = np.argsort(fvals, kind="stable")
        simplex = simplex[order]
        fvals = fvals[order]
        if fvals[0] < best_f:
            best_f = float(fvals[0])
            best_x = simplex[0].copy()

        spread = fvals[-1] - fvals[0]
        diameter = float(np.max(np.abs(simplex[1:] - simplex[0])))
        if spread < cfg.f_tol * (1.0 + abs(fvals[0])) and diameter < cfg.x_tol:
            converged = True
            break
        # Reflection plus one follow-up evaluation must fit in the budget;
        # the shrink loops guard themselves.
        if evaluations + 2 > cfg.max_evaluations:
            break

        iterations += 1
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        reflected = centroid + cfg.reflection * (centroid - worst)
        fr = call(reflected)

        if fr < fvals[0]:
            expanded = centroid + cfg.expansion * cfg.reflection * (centroid - worst)
            fe = call(expanded)
            if fe < fr:
                simplex[-1], fvals[-1] = expanded, fe
            else:
                simplex[-1], fvals[-1] = reflected, fr
        elif fr < fvals[-2]:
            simplex[-1], fvals[-1] = reflected, fr
        elif fr < fvals[-1]:
            contracted = centroid + cfg.contraction * (reflected - centroid)
            fc = call(contracted)
            if fc <= fr:
                simplex[-1], fvals[-1] = contracted, fc
            else:
                for i in range(1, n + 1):
                    if evaluations >= cfg.max_evaluations:
                        break
                    simplex[i] = simplex[0] + cfg.shrink * (simplex[i] - simplex[0])
                    fvals[i] = call(simplex[i])
        else:
            contracted = centroid - cfg.contraction * (centroid - worst)
            fc = call(contracted)
            if fc < fvals[-1]:
                simplex[-1], fvals[-1] = contracted, fc
            else:
                for i in range(1, n + 1):
                    if evaluations >= cfg.max_evaluations:
                        break
                    simplex[i] = simplex[0] + cfg.shrink * (simplex[i] - simplex[0])
                    fvals[i] = call(simplex[i])

    i_best = int(np.argmin(fvals))
    if fvals[i_best] < best_f:
        best_f = float(fvals[i_best])
        best_x = simplex[i_best].copy()
    return SimplexResult(x=best_x, fx=best_f, iterations=iterations,
                         evaluations=evaluations, converged=converged)


@dataclass(frozen=True)
class Objective:
    """Pixel-level chi-square target for one image and a fixed axis."""

    data: MfiImage
    axis: Axis
    sigma_b: float

    def __post_init__(self) -> None:
        if self.sigma_b <= 0:
            raise ValueError(f"sigma_b must be positive, got {self.sigma_b}")
        if not isinstance(self.axis, Axis):
            raise ValueError(f"axis must be an Axis, got {self.axis!r}")


def estimate_sigma_b(img: MfiImage) -> float:
    """Noise scale for the objective.

    Uses the recorded noise sigma when available; otherwise the standard
    deviation of the 1-pixel border frame, where the signal is weakest.
    Floored to keep the objective finite on noiseless synthetic images.
    """
    if img.noise_sigma > 0:
        return img.noise_sigma
    border = np.concatenate([
        img.data[0, :], img.data[-1, :], img.data[1:-1, 0], img.data[1:-1, -1],
    ])
    return max(float(border.std()), SIGMA_B_FLOOR)


def objective_for(img: MfiImage, axis: Axis) -> Objective:
    """Build the chi-square objective with the default noise scale."""
    return Objective(data=img, axis=axis, sigma_b=estimate_sigma_b(img))


def chi2(obj: Objective, p: SegmentParams) -> float:
    """Sum over pixels of squared residual over sigma_b squared."""
    if p.axis is not obj.axis:
        raise ValueError(f"params axis {p.axis} does not match objective {obj.axis}")
    xs = obj.data.x_coords()
    ys = obj.data.y_coords()
    model = _bz_raw(p.x0, p.y0, p.z0, p.length, p.current, p.axis,
                    xs[None, :], ys[:, None])
    r = (obj.data.data - model) / obj.sigma_b
    return float(np.sum(r * r))


def residual(obj: Objective, p: SegmentParams) -> MfiImage:
    """Pixelwise data minus model, keeping the data's noise sigma."""
    if p.axis is not obj.axis:
        raise ValueError(f"params axis {p.axis} does not match objective {obj.axis}")
    xs = obj.data.x_coords()
    ys = obj.data.y_coords()
    model = _bz_raw(p.x0, p.y0, p.z0, p.length, p.current, p.axis,
                    xs[None, :], ys[:, None])
    return MfiImage(size=obj.data.size, pitch=obj.data.pitch,
                    origin=obj.data.origin, data=obj.data.data - model,
                    noise_sigma=obj.data.noise_sigma)


@dataclass(frozen=True)
class FitReport:
    """Optimized parameters plus fit diagnostics."""

    params: SegmentParams
    chi2: float
    iterations: int
    evaluations: int
    converged: bool
    residual: MfiImage

    def __post_init__(self) -> None:
        if self.chi2 < 0:
            raise ValueError(f"chi2 must be nonnegative, got {self.chi2}")
        if self.residual.size != self.residual.data.shape[0]:
            raise ValueError("residual dimensions inconsistent")


def minimize(obj: Objective, start: SegmentParams,
             cfg: SimplexConfig = SimplexConfig()) -> FitReport:
    """Refine ``start`` by Nelder-Mead on the chi-square objective.

    Internal coordinates are (x0, y0, log z0, log length, I); axis and the
    segment orientation stay frozen.  The initial simplex perturbs each
    coordinate by 5% of its value, floored at one pixel pitch for the four
    geometric coordinates.

    Returns
    -------
    FitReport
        Best parameters found; ``chi2`` never exceeds the start value.
    """
    if start.axis is not obj.axis:
        raise ValueError(f"start axis {start.axis} does not match objective {obj.axis}")
    xs = obj.data.x_coords()
    ys = obj.data.y_coords()
    grid_x = xs[None, :]
    grid_y = ys[:, None]
    data = obj.data.data
    inv_var = 1.0 / (obj.sigma_b * obj.sigma_b)
    axis = obj.axis

    def f(v: np.ndarray) -> float:
        z0 = math.exp(v[2])
        length = math.exp(v[3])
        # exp underflow/overflow would leave the representable open domain
        # z0, length > 0; reject such vertices so the best point is always
        # reconstructible.
        if z0 == 0.0 or length == 0.0 or math.isinf(z0) or math.isinf(length):
            return math.inf
        model = _bz_raw(v[0], v[1], z0, length, v[4], axis, grid_x, grid_y)
        r = data - model
        out = float(np.sum(r * r)) * inv_var
        return out if math.isfinite(out) else math.inf

    v0 = np.array([start.x0, start.y0, math.log(start.z0),
                   math.log(start.length), start.current])
    pitch = obj.data.pitch
    steps = np.array([
        max(0.05 * abs(start.x0), pitch),
        max(0.05 * abs(start.y0), pitch),
        math.log1p(max(0.05, pitch / start.z0)),
        math.log1p(max(0.05, pitch / start.length)),
        0.05 * abs(start.current),
    ])

    res = nelder_mead(f, v0, steps, cfg)
    if not math.isfinite(res.fx):
        return FitReport(params=start, chi2=math.inf, iterations=res.iterations,
                         evaluations=res.evaluations, converged=False,
                         residual=residual(obj, start))

    cur = float(res.x[4])
    if cur == 0.0:
        # SegmentParams forbids zero current; only reachable on degenerate
        # all-zero data where the magnitude is meaningless anyway.
        cur = math.copysign(1e-30, start.current)
    best = SegmentParams(x0=float(res.x[0]), y0=float(res.x[1]),
                         z0=math.exp(float(res.x[2])),
                         length=math.exp(float(res.x[3])),
                         current=cur, axis=axis)
    return FitReport(params=best, chi2=res.fx, iterations=res.iterations,
                     evaluations=res.evaluations, converged=res.converged,
                     residual=residual(obj, best))
