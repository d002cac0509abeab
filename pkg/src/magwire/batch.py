"""Batch evaluation over a labeled test split.

Runs the full pipeline (estimate, refine) image by image, collects per-image
rows and aggregate accuracy numbers, and writes a plot-ready TSV report.
Per-image failures become failed rows, never aborts.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MagwireError
from .estimate import BetaEstimator, initial_estimate
from .field import SegmentParams
from .fit import minimize, objective_for
from .image import read_mfi, snr
from .dataset import ManifestRow

log = logging.getLogger(__name__)

REPORT_COLUMNS = (
    "index", "file", "status", "snr",
    "true_axis", "fit_axis", "true_sign", "fit_sign",
    "true_x0", "true_y0", "true_z0", "true_length", "true_current",
    "est_x0", "est_y0", "est_z0", "est_length", "est_current",
    "fit_x0", "fit_y0", "fit_z0", "fit_length", "fit_current",
    "chi2", "evaluations", "converged",
    "err_x0_um", "err_y0_um", "err_z0_um",
    "norm_err_x0", "norm_err_y0", "norm_err_z0",
    "rel_err_length", "rel_err_current",
    "wall_time_s",
)


@dataclass(frozen=True)
class RowResult:
    """Pipeline outcome for one test image."""

    index: int
    file: str
    truth: SegmentParams
    snr: float
    initial: SegmentParams | None = None
    fitted: SegmentParams | None = None
    chi2: float = float("nan")
    evaluations: int = 0
    converged: bool = False
    wall_time: float = 0.0
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass(frozen=True)
class Aggregates:
    """Summary numbers over the non-failed rows."""

    n_rows: int
    n_failed: int
    axis_accuracy: float
    sign_accuracy: float
    quantiles: dict[str, dict[str, float]]


@dataclass(frozen=True)
class BatchReport:
    rows: list[RowResult]
    aggregates: Aggregates


def evaluate_row(index: int, row: ManifestRow, data_dir: Path,
                 estimator: BetaEstimator) -> RowResult:
    """Run estimate + refine on one manifest row."""
    start = time.perf_counter()
    try:
        img = read_mfi(data_dir / row.file)
        measured_snr = snr(img) if img.noise_sigma > 0 else float("nan")
        bundle = initial_estimate(img, estimator)
        obj = objective_for(img, bundle.params.axis)
        report = minimize(obj, bundle.params)
        return RowResult(
            index=index, file=row.file, truth=row.params, snr=measured_snr,
            initial=bundle.params, fitted=report.params, chi2=report.chi2,
            evaluations=report.evaluations, converged=report.converged,
            wall_time=time.perf_counter() - start,
        )
    except (MagwireError, OSError) as exc:
        return RowResult(index=index, file=row.file, truth=row.params,
                         snr=float("nan"), wall_time=time.perf_counter() - start,
                         error=f"{type(exc).__name__}: {exc}")


def _quantiles(values: list[float]) -> dict[str, float]:
    if not values:
        return {"q25": float("nan"), "q50": float("nan"),
                "q75": float("nan"), "q90": float("nan")}
    arr = np.asarray(values)
    q25, q50, q75, q90 = np.quantile(arr, [0.25, 0.5, 0.75, 0.9])
    return {"q25": float(q25), "q50": float(q50), "q75": float(q75),
            "q90": float(q90)}


def aggregate(rows: list[RowResult]) -> Aggregates:
    ok = [r for r in rows if not r.failed]
    axis_hits = sum(r.fitted.axis is r.truth.axis for r in ok)
    sign_hits = sum((r.fitted.current > 0) == (r.truth.current > 0) for r in ok)
    per_param: dict[str, list[float]] = {
        "norm_err_x0": [], "norm_err_y0": [], "norm_err_z0": [],
        "rel_err_length": [], "rel_err_current": [],
    }
    for r in ok:
        t, f = r.truth, r.fitted
        per_param["norm_err_x0"].append(abs(f.x0 - t.x0) / t.z0)
        per_param["norm_err_y0"].append(abs(f.y0 - t.y0) / t.z0)
        per_param["norm_err_z0"].append(abs(f.z0 - t.z0) / t.z0)
        per_param["rel_err_length"].append(abs(f.length - t.length) / t.length)
        per_param["rel_err_current"].append(
            abs(abs(f.current) - abs(t.current)) / abs(t.current))
    n_ok = len(ok)
    return Aggregates(
        n_rows=len(rows),
        n_failed=len(rows) - n_ok,
        axis_accuracy=axis_hits / n_ok if n_ok else float("nan"),
        sign_accuracy=sign_hits / n_ok if n_ok else float("nan"),
        quantiles={k: _quantiles(v) for k, v in per_param.items()},
    )


def evaluate(rows: list[ManifestRow], data_dir, estimator: BetaEstimator,
             workers: int = 1) -> BatchReport:
    """Evaluate manifest rows in manifest order; failures become failed rows.

    With ``workers > 1`` the per-image fits fan out to processes; results are
    still assembled in manifest order.
    """
    data_dir = Path(data_dir)
    results: list[RowResult] = []
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        from itertools import repeat

        with ProcessPoolExecutor(max_workers=workers) as pool:
            for res in pool.map(evaluate_row, range(len(rows)), rows,
                                repeat(data_dir), repeat(estimator),
                                chunksize=8):
                results.append(res)
                if len(results) % 100 == 0:
                    log.info("evaluated %d/%d images", len(results), len(rows))
    else:
        for i, row in enumerate(rows):
            results.append(evaluate_row(i, row, data_dir, estimator))
            if (i + 1) % 100 == 0:
                log.info("evaluated %d/%d images", i + 1, len(rows))
    return BatchReport(rows=results, aggregates=aggregate(results))


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def write_report(report: BatchReport, destination,
                 reference_resolution: float | None = None) -> None:
    """Write the per-image TSV; optional constant reference column."""
    columns = list(REPORT_COLUMNS)
    if reference_resolution is not None:
        columns.append("ref_resolution_um")
    lines = ["\t".join(columns)]
    for r in report.rows:
        t = r.truth
        if r.failed:
            cells = [str(r.index), r.file, r.error, _fmt(r.snr),
                     t.axis.value, "", "+" if t.current > 0 else "-", ""]
            cells += [_fmt(v) for v in (t.x0, t.y0, t.z0, t.length, t.current)]
            cells += [""] * 10
            cells += ["", "0", "False"]
            cells += [""] * 8
            cells.append(_fmt(r.wall_time))
        else:
            e, f = r.initial, r.fitted
            cells = [str(r.index), r.file, "ok", _fmt(r.snr),
                     t.axis.value, f.axis.value,
                     "+" if t.current > 0 else "-",
                     "+" if f.current > 0 else "-"]
            cells += [_fmt(v) for v in (t.x0, t.y0, t.z0, t.length, t.current)]
            cells += [_fmt(v) for v in (e.x0, e.y0, e.z0, e.length, e.current)]
            cells += [_fmt(v) for v in (f.x0, f.y0, f.z0, f.length, f.current)]
            cells += [_fmt(r.chi2), str(r.evaluations), str(r.converged)]
            cells += [_fmt(abs(f.x0 - t.x0)), _fmt(abs(f.y0 - t.y0)),
                      _fmt(abs(f.z0 - t.z0))]
            cells += [_fmt(abs(f.x0 - t.x0) / t.z0),
                      _fmt(abs(f.y0 - t.y0) / t.z0),
                      _fmt(abs(f.z0 - t.z0) / t.z0)]
            cells += [_fmt(abs(f.length - t.length) / t.length),
                      _fmt(abs(abs(f.current) - abs(t.current)) / abs(t.current))]
            cells.append(_fmt(r.wall_time))
        if reference_resolution is not None:
            cells.append(_fmt(reference_resolution))
        lines.append("\t".join(cells))
    text = "\n".join(lines) + "\n"
    if isinstance(destination, (str, Path)):
        Path(destination).write_text(text, encoding="utf-8")
    else:
        destination.write(text)


def summarize(report: BatchReport) -> str:
    """Human-readable aggregate block for the CLI."""
    a = report.aggregates
    out = [
        f"images:          {a.n_rows}",
        f"failed:          {a.n_failed}",
        f"axis accuracy:   {a.axis_accuracy:.4f}",
        f"sign accuracy:   {a.sign_accuracy:.4f}",
    ]
    for name, q in a.quantiles.items():
        out.append(f"{name:16s} q25={q['q25']:.3e} q50={q['q50']:.3e} "
                   f"q75={q['q75']:.3e} q90={q['q90']:.3e}")
    return "\n".join(out)
