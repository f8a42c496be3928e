"""Measured-versus-predicted comparison and clutter-offset tuning."""

from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .geo import RasterGrid, latlon_to_xy
from .propagation import (NODATA, ClutterClass, ClutterTable, CoverageMap, Sector, StudyArea,
                          predict_points, sample_coverage)
from .radio import CarrierConfig


@dataclass(frozen=True)
class PointDelta:
    lat: float
    lon: float
    measured: float
    predicted: float
    delta: float


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    per_point: tuple[PointDelta, ...]
    mean_error: float
    std_error: float
    rmse: float
    correlation: float
    n_outside: int = 0

    @property
    def n(self) -> int:
        return len(self.per_point)

    def to_dict(self) -> dict:
        nan_none = lambda v: None if math.isnan(v) else v  # noqa: E731
        return {
            "n": self.n,
            "n_outside": self.n_outside,
            "mean_error_db": self.mean_error,
            "std_error_db": nan_none(self.std_error),
            "rmse_db": self.rmse,
            "correlation": nan_none(self.correlation),
        }

    def delta_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["lat", "lon", "measured_dbm", "predicted_dbm", "delta_db"])
        for p in self.per_point:
            w.writerow([f"{p.lat:.9f}", f"{p.lon:.9f}", f"{p.measured:.6f}",
                        f"{p.predicted:.6f}", f"{p.delta:.6f}"])
        return out.getvalue()


def error_stats(measured: Sequence[float], predicted: Sequence[float]):
    """(mean, std, rmse, correlation) of ``measured - predicted``.

    Mean, standard deviation (n-1) and RMSE are exactly rounded; the
    correlation is Pearson's r and is NaN when either side is constant.
    """
    m = [float(v) for v in measured]
    p = [float(v) for v in predicted]
    deltas = [a - b for a, b in zip(m, p)]
    n = len(deltas)
    if n == 0:
        raise ValueError("no points to compare")
    mean = statistics.mean(deltas)
    std = statistics.stdev(deltas) if n > 1 else math.nan
    rmse = math.sqrt(sum(Fraction(d) ** 2 for d in deltas) / n)
    corr = _pearson(m, p)
    return mean, std, rmse, corr


def _pearson(x: Sequence[float], y: Sequence[float]) -> float:
    if len(x) < 2:
        return math.nan
    fx = [Fraction(v) for v in x]
    fy = [Fraction(v) for v in y]
    mx = sum(fx) / len(fx)
    my = sum(fy) / len(fy)
    sxy = sum((a - mx) * (b - my) for a, b in zip(fx, fy))
    sxx = sum((a - mx) ** 2 for a in fx)
    syy = sum((b - my) ** 2 for b in fy)
    if sxx == 0 or syy == 0:
        return math.nan
    return float(sxy) / math.sqrt(float(sxx) * float(syy))


def compare(cmap: CoverageMap, envelope) -> ComparisonReport:
    """Compare measured NRSRP (``envelope.lat/.lon/.nrsrp``) with the map.

    Predicted values come from nearest-cell lookup; points outside the map
    or on nodata cells are counted in ``n_outside`` and left out.
    """
    lat = np.asarray(envelope.lat, dtype=float)
    lon = np.asarray(envelope.lon, dtype=float)
    meas = np.asarray(envelope.nrsrp, dtype=float)
    pred = sample_coverage(cmap, lat, lon)
    ok = np.isfinite(pred) & np.isfinite(meas)
    if not ok.any():
        raise ValueError("no measured points overlap the prediction")
    m, p = meas[ok].tolist(), pred[ok].tolist()
    mean, std, rmse, corr = error_stats(m, p)
    pts = tuple(PointDelta(la, lo, a, b, a - b)
                for la, lo, a, b in zip(lat[ok].tolist(), lon[ok].tolist(), m, p))
    return ComparisonReport(pts, mean, std, rmse, corr, int((~ok).sum()))


def delta_raster(report: ComparisonReport, like: RasterGrid) -> RasterGrid:
    """Mean delta of the measured points falling in each cell of ``like``."""
    lat = np.array([p.lat for p in report.per_point])
    lon = np.array([p.lon for p in report.per_point])
    d = np.array([p.delta for p in report.per_point])
    x, y = latlon_to_xy(like.origin, lat, lon)
    row, col, inside = like.index_xy(x, y)
    flat = row[inside] * like.ncols + col[inside]
    size = like.nrows * like.ncols
    sums = np.bincount(flat, weights=d[inside], minlength=size)
    counts = np.bincount(flat, minlength=size)
    with np.errstate(invalid="ignore", divide="ignore"):
        vals = np.where(counts > 0, sums / counts, NODATA)
    return RasterGrid(like.origin, like.cell_size, vals.reshape(like.nrows, like.ncols), NODATA)


# --------------------------------------------------------------------------
# Tuning
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TuneResult:
    offsets: dict[int, float]
    pre_rmse: float
    post_rmse: float
    counts: dict[int, int] = field(default_factory=dict)
    frozen: tuple[int, ...] = ()
    n_points: int = 0
    n_outside: int = 0
    solver: str = "closed-form per-class mean of (predicted - measured)"

    def to_dict(self) -> dict:
        return {
            "offsets_db": {str(k): v for k, v in sorted(self.offsets.items())},
            "pre_rmse_db": self.pre_rmse,
            "post_rmse_db": self.post_rmse,
            "counts": {str(k): v for k, v in sorted(self.counts.items())},
            "frozen": list(self.frozen),
            "n_points": self.n_points,
            "n_outside": self.n_outside,
            "solver": self.solver,
        }


def tune_offsets(sectors: Sequence[Sector], dtm: RasterGrid, clutter_raster: RasterGrid,
                 table: ClutterTable, carrier: CarrierConfig, measured, *,
                 min_points: int = 20, indoor: bool = False) -> TuneResult:
    """Least-squares per-clutter loss offsets.

    Each measured point is predicted as ``base - offset[class]``, which is
    linear in the offsets with one indicator column per class, so the
    minimiser is the per-class mean of ``base - measured``. Classes with
    fewer than ``min_points`` samples keep a zero offset. Positive offsets
    mean the model is too optimistic and needs more loss.

    ``measured`` needs ``lat``, ``lon`` and ``nrsrp`` arrays, normally the
    Lee envelope.
    """
    area = StudyArea(dtm, clutter_raster, table)
    lat = np.asarray(measured.lat, dtype=float)
    lon = np.asarray(measured.lon, dtype=float)
    meas = np.asarray(measured.nrsrp, dtype=float)
    x, y = latlon_to_xy(area.origin, lat, lon)
    pred, _, _ = predict_points(sectors, area, carrier, x, y, indoor)
    cls = area.clutter_id(x, y)
    ok = np.isfinite(pred) & np.isfinite(cls) & np.isfinite(meas)
    n_outside = int((~ok).sum())
    pred, meas, cls = pred[ok], meas[ok], cls[ok].astype(np.int64)
    if pred.size == 0:
        raise ValueError("no measured points fall inside the study area")

    diff = pred - meas
    offsets: dict[int, float] = {}
    counts: dict[int, int] = {}
    frozen = []
    for cid in np.unique(cls).tolist():
        sel = cls == cid
        counts[cid] = int(sel.sum())
        if counts[cid] < min_points:
            frozen.append(cid)
            offsets[cid] = 0.0
        else:
            offsets[cid] = math.fsum(diff[sel]) / counts[cid]
    if len(frozen) == len(counts):
        raise ValueError(
            f"every clutter class has fewer than {min_points} measured points: {counts}"
        )

    def rmse(resid):
        return math.sqrt(math.fsum(resid * resid) / resid.size)

    shift = np.array([offsets[c] for c in cls.tolist()])
    pre = rmse(meas - pred)
    post = rmse(meas - (pred - shift))
    return TuneResult(offsets, pre, post, counts, tuple(frozen), int(pred.size), n_outside)


def apply_offsets(table: ClutterTable, offsets: Mapping[int, float]) -> dict[int, ClutterClass]:
    """Clutter table with each class's extra loss raised by its offset."""
    out = {}
    for cid, c in table.items():
        new = c.extra_loss + offsets.get(cid, 0.0)
        if new < 0:
            raise ValueError(
                f"offset {offsets[cid]:+.3f} dB would make clutter class {cid} loss negative"
            )
        out[cid] = replace(c, extra_loss=new)
    return out
