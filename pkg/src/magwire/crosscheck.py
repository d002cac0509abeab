"""Independent numerical cross-checks of the closed-form field expressions.

These oracles deliberately avoid the analytic formulas in ``field``: the
quadrature check integrates the line-current law directly, and the PP check
scans a finely sampled profile for its extrema.  They exist to validate, not
to be fast.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad

from .field import (
    _UM,
    MU0_OVER_4PI,
    Axis,
    FieldPoint,
    SegmentParams,
    bz_at,
    bz_grid,
    depth_from_pp,
    pp_distance,
)


def bz_by_quadrature(seg: SegmentParams, x: float, y: float) -> float:
    """Bz at (x, y) micrometers via adaptive quadrature along the wire.

    Integrates the line-current Biot-Savart integrand
    (mu0/4pi) I (t dl) / r^3 where t is the in-plane transverse offset,
    without using the closed-form antiderivative.
    """
    z = seg.z0 * _UM
    if seg.axis is Axis.X:
        t = (y - seg.y0) * _UM
        lo, hi = seg.x0 * _UM, (seg.x0 + seg.length) * _UM
        along = x * _UM
        orient = 1.0
    else:
        t = (x - seg.x0) * _UM
        lo, hi = seg.y0 * _UM, (seg.y0 + seg.length) * _UM
        along = y * _UM
        orient = -1.0

    def integrand(s: float) -> float:
        d = along - s
        return t / (d * d + t * t + z * z) ** 1.5

    val, _ = quad(integrand, lo, hi, epsabs=1e-16, epsrel=1e-12, limit=200)
    return orient * MU0_OVER_4PI * seg.current * val


def pp_by_profile_scan(length: float, z0: float, samples: int = 400001,
                       span_factor: float = 8.0) -> float:
    """Extrema separation found by brute-force scan of the transverse profile.

    Samples Bz along the line through the segment midpoint, perpendicular to
    the segment, and returns the distance between the sampled argmax and
    argmin.  Resolution is span / (samples - 1).
    """
    seg = SegmentParams(x0=0.0, y0=0.0, z0=z0, length=length, current=1.0,
                        axis=Axis.X)
    half_span = span_factor * z0
    ys = np.linspace(-half_span, half_span, samples)
    prof = bz_grid(seg, np.full_like(ys, length / 2.0), ys)
    return abs(ys[int(np.argmax(prof))] - ys[int(np.argmin(prof))])


def pp_scan_step(length: float, z0: float, samples: int = 400001,
                 span_factor: float = 8.0) -> float:
    """Sampling step of pp_by_profile_scan, for tolerance accounting."""
    return 2.0 * span_factor * z0 / (samples - 1)


def run_self_checks() -> list[tuple[str, float, float, bool]]:
    """Run the analytic self-checks; return (name, measured, tolerance, ok).

    Covers: PP formula vs brute-force scan over a beta grid, depth round-trip,
    the infinite-wire limit, and quadrature equivalence on random segments.
    """
    results: list[tuple[str, float, float, bool]] = []
    rng = np.random.default_rng(20260814)

    # PP formula vs profile scan over log-spaced beta.
    worst = 0.0
    z0 = 100.0
    for beta in np.geomspace(0.1, 50.0, 25):
        length = beta * z0
        pp_scan = pp_by_profile_scan(length, z0, samples=200001)
        pp_formula = pp_distance(length, z0)
        step = pp_scan_step(length, z0, samples=200001)
        err = abs(pp_scan - pp_formula) / pp_formula
        worst = max(worst, max(0.0, err - step / pp_formula))
    results.append(("pp-vs-bruteforce", worst, 1e-3, worst < 1e-3))

    # Depth round-trip: z0 -> PP -> z0.
    worst = 0.0
    for beta in np.geomspace(0.1, 50.0, 25):
        pp = pp_distance(beta * z0, z0)
        worst = max(worst, abs(depth_from_pp(pp, beta) - z0) / z0)
    results.append(("depth-roundtrip", worst, 1e-9, worst < 1e-9))

    # Infinite-wire limit: beta = 1e6 against mu0 I / (2 pi) * t / (t^2 + z^2).
    seg = SegmentParams(x0=-5e7, y0=0.0, z0=100.0, length=1e8, current=1.0,
                        axis=Axis.X)
    worst = 0.0
    for dy in (25.0, 50.0, 100.0, 200.0):
        got = bz_at(seg, FieldPoint(0.0, dy))
        t = dy * _UM
        z = seg.z0 * _UM
        want = 2.0 * MU0_OVER_4PI * seg.current * t / (t * t + z * z)
        worst = max(worst, abs(got - want) / abs(want))
    results.append(("infinite-wire-limit", worst, 1e-3, worst < 1e-3))

    # Closed form vs quadrature at random points on random segments.
    worst = 0.0
    for _ in range(10):
        seg = SegmentParams(
            x0=float(rng.uniform(-200, 200)),
            y0=float(rng.uniform(-200, 200)),
            z0=float(rng.uniform(50, 500)),
            length=float(rng.uniform(50, 2000)),
            current=float(rng.uniform(0.1, 5.0) * rng.choice([-1.0, 1.0])),
            axis=Axis.X if rng.random() < 0.5 else Axis.Y,
        )
        scale = max(seg.length, seg.z0)
        for _ in range(5):
            x = seg.x0 + float(rng.uniform(-1.0, 2.0)) * scale
            y = seg.y0 + float(rng.uniform(-1.0, 2.0)) * scale
            got = bz_at(seg, FieldPoint(x, y))
            want = bz_by_quadrature(seg, x, y)
            denom = max(abs(want), 1e-30)
            if abs(want) > 1e-20:
                worst = max(worst, abs(got - want) / denom)
    results.append(("quadrature-equivalence", worst, 1e-6, worst < 1e-6))

    return results
