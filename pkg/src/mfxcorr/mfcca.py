"""Pairwise MFCCA: signed cross fluctuation functions and lambda(q)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mfxcorr._parallel import pmap
from mfxcorr.detrend import ScaleGrid, box_covariance, box_residuals, default_scale_grid, profile
from mfxcorr.ingest import DataError, ReturnSeries
from mfxcorr.mfdfa import (
    FluctuationSurface,
    QGrid,
    ScalingFit,
    fit_loglog,
    fit_scaling,
    surface_from_boxes,
)

NEAR_ZERO_REL = 1e-12
CS_SLACK = 1e-9


@dataclass(frozen=True)
class PairBoxStats:
    """Per-scale box variances of x and y and their covariance."""

    scales: ScaleGrid
    fxx: list[np.ndarray]
    fyy: list[np.ndarray]
    fxy: list[np.ndarray]
    var_x: float
    var_y: float


def _values(s) -> np.ndarray:
    return s.values if isinstance(s, ReturnSeries) else np.asarray(s, dtype=float)


def pair_box_stats(x, y, scales: ScaleGrid, m: int = 2, threads: int | None = 1) -> PairBoxStats:
    xv, yv = _values(x), _values(y)
    if xv.size != yv.size:
        raise DataError(f"series lengths differ: {xv.size} vs {yv.size}")
    scales.validate(xv.size, m)
    px, py = profile(xv), profile(yv)

    def one(s):
        rx = box_residuals(px, s, m)
        ry = box_residuals(py, s, m)
        return box_covariance(rx, rx), box_covariance(ry, ry), box_covariance(rx, ry)

    out = pmap(one, scales, threads)
    return PairBoxStats(
        scales,
        [o[0] for o in out],
        [o[1] for o in out],
        [o[2] for o in out],
        float(xv.var()),
        float(yv.var()),
    )


@dataclass(frozen=True)
class CrossSurface(FluctuationSurface):
    """Signed F_XY(q, s) = sign(M)|M|^(1/q); ``valid`` masks near-zero or q = 0 cells."""

    valid: np.ndarray | None = None

    @property
    def signed_values(self) -> np.ndarray:
        return self.values


def near_zero_threshold(qs: np.ndarray, var_x: float, var_y: float) -> np.ndarray:
    scale = np.sqrt(var_x * var_y)
    return NEAR_ZERO_REL * scale ** (qs / 2)


def cross_surface(stats: PairBoxStats, qgrid: QGrid) -> CrossSurface:
    qs = qgrid.as_array()
    mom, vals, excl, n_boxes = surface_from_boxes(stats.fxy, qgrid, stats.scales, "cross")
    vals[qs == 0] = np.nan
    eps = near_zero_threshold(qs, stats.var_x, stats.var_y)
    valid = np.isfinite(vals) & (np.abs(mom) >= eps[:, None])
    return CrossSurface(qgrid, stats.scales, vals, mom, excl, n_boxes, "cross", valid)


def single_surfaces(stats: PairBoxStats, qgrid: QGrid) -> tuple[FluctuationSurface, FluctuationSurface]:
    out = []
    for f2 in (stats.fxx, stats.fyy):
        mom, vals, excl, n_boxes = surface_from_boxes(f2, qgrid, stats.scales, "single")
        out.append(FluctuationSurface(qgrid, stats.scales, vals, mom, excl, n_boxes, "single"))
    return out[0], out[1]


def cross_fluctuation(
    x,
    y,
    qgrid: QGrid | None = None,
    scales: ScaleGrid | None = None,
    m: int = 2,
    threads: int | None = 1,
) -> CrossSurface:
    qgrid = qgrid or QGrid.arange(-4.0, 4.0, 0.2)
    scales = scales or default_scale_grid(len(_values(x)))
    return cross_surface(pair_box_stats(x, y, scales, m, threads), qgrid)


@dataclass(frozen=True)
class CrossScalingReport:
    qs: np.ndarray
    lam: np.ndarray
    lam_r2: np.ndarray
    positive_fraction: np.ndarray
    qualifies: np.ndarray
    q_min: float | None
    h_x: np.ndarray
    h_y: np.ndarray
    h_xy: np.ndarray
    d_xy: np.ndarray
    quality_threshold: float
    positivity_threshold: float
    fit_range: tuple[float, float]


def fit_lambda(
    surface: CrossSurface,
    fit_x: ScalingFit,
    fit_y: ScalingFit,
    quality_threshold: float = 0.95,
    positivity_threshold: float = 0.9,
    fit_range=None,
    positive_q_only: bool = True,
) -> CrossScalingReport:
    """lambda(q) from positive, valid cells and the smallest q with regular scaling.

    q_min is the smallest grid q such that every q' >= q_min has at least
    ``positivity_threshold`` of its cells positive and a log-log fit with
    r^2 >= ``quality_threshold``. lambda and d_xy are reported only there.
    """
    qs = surface.qgrid.as_array()
    if fit_x.qs.shape != qs.shape or not np.allclose(fit_x.qs, qs) or not np.allclose(fit_y.qs, qs):
        raise ValueError("single-series fits must use the cross surface q-grid")
    s = surface.scales.as_array()
    lo, hi = fit_range or (s[0], s[-1])
    in_range = (s >= lo) & (s <= hi)
    usable = surface.valid & (surface.values > 0) & in_range[None, :]
    frac = usable.sum(axis=1) / max(int(in_range.sum()), 1)
    fit = fit_loglog(surface.values, s, qs, (lo, hi), usable=usable)
    ok = (frac >= positivity_threshold) & (fit.r_squared >= quality_threshold) & (qs != 0)
    if positive_q_only:
        ok &= qs > 0
    q_min = None
    for k in range(qs.size - 1, -1, -1):
        if not ok[k]:
            break
        q_min = float(qs[k])
    lam = np.full(qs.shape, np.nan)
    if q_min is not None:
        rep = qs >= q_min
        lam[rep] = fit.exponent[rep]
    h_xy = (fit_x.exponent + fit_y.exponent) / 2
    return CrossScalingReport(
        qs,
        lam,
        fit.r_squared,
        frac,
        ok,
        q_min,
        fit_x.exponent,
        fit_y.exponent,
        h_xy,
        lam - h_xy,
        quality_threshold,
        positivity_threshold,
        (float(lo), float(hi)),
    )


def cs_bound_check(
    surface: CrossSurface, fxx: FluctuationSurface, fyy: FluctuationSurface
) -> list[tuple[float, int, float, float]]:
    """Cells with q >= 0 where |F_XY^q| exceeds sqrt(F_XX^q F_YY^q)(1 + 1e-9).

    Each entry is (q, s, |F_XY^q|, bound).
    """
    if fxx.moments.shape != surface.moments.shape or fyy.moments.shape != surface.moments.shape:
        raise ValueError("surfaces must share q-grid and scales")
    qs = surface.qgrid.as_array()
    bound = np.sqrt(fxx.moments * fyy.moments)
    lhs = np.abs(surface.moments)
    viol = (lhs > bound * (1 + CS_SLACK)) & (qs >= 0)[:, None]
    out = []
    for i, j in zip(*np.nonzero(viol)):
        out.append((float(qs[i]), surface.scales.scales[j], float(lhs[i, j]), float(bound[i, j])))
    return out


@dataclass(frozen=True)
class MFCCAResult:
    cross: CrossSurface
    fxx: FluctuationSurface
    fyy: FluctuationSurface
    fit_x: ScalingFit
    fit_y: ScalingFit
    report: CrossScalingReport


def mfcca(
    x,
    y,
    qgrid: QGrid | None = None,
    scales: ScaleGrid | None = None,
    m: int = 2,
    fit_range=None,
    quality_threshold: float = 0.95,
    positivity_threshold: float = 0.9,
    threads: int | None = 1,
) -> MFCCAResult:
    qgrid = qgrid or QGrid.arange(-4.0, 4.0, 0.2)
    scales = scales or default_scale_grid(len(_values(x)))
    stats = pair_box_stats(x, y, scales, m, threads)
    cross = cross_surface(stats, qgrid)
    fxx, fyy = single_surfaces(stats, qgrid)
    fx, fy = fit_scaling(fxx, fit_range), fit_scaling(fyy, fit_range)
    rep = fit_lambda(cross, fx, fy, quality_threshold, positivity_threshold, fit_range)
    return MFCCAResult(cross, fxx, fyy, fx, fy, rep)
