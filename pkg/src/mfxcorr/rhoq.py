"""q-dependent detrended cross-correlation coefficient rho_q(s)."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from mfxcorr import surrogate
from mfxcorr.detrend import ScaleGrid, default_scale_grid
from mfxcorr.ingest import AlignedPanel, DataError, ReturnSeries, shift_pair, split_windows
from mfxcorr.mfcca import PairBoxStats, pair_box_stats
from mfxcorr.mfdfa import QGrid, qth_moments

RHO_SLACK = 1e-9


@dataclass(frozen=True)
class SurrogateBand:
    mean: np.ndarray
    sigma: np.ndarray
    n_realizations: int
    seed: int
    mode: str
    generator: str


@dataclass(frozen=True)
class RhoProfile:
    qgrid: QGrid
    scales: ScaleGrid
    rho: np.ndarray  # NaN where undefined
    lag: int = 0
    window_label: str | None = None
    band: SurrogateBand | None = None
    flags: tuple[str, ...] = ()

    @property
    def defined(self) -> np.ndarray:
        return np.isfinite(self.rho)


@dataclass(frozen=True)
class RhoSummary:
    window_label: str | None
    lag: int
    qs: np.ndarray
    rho_bar: np.ndarray
    n_defined: np.ndarray
    n_undefined: np.ndarray
    flags: tuple[str, ...] = ()


def default_rho_qgrid() -> QGrid:
    return QGrid((1.0, 2.0, 3.0, 4.0))


def _check_q(qgrid: QGrid, allow_nonpositive: bool) -> None:
    if not allow_nonpositive and min(qgrid.qs) <= 0:
        raise ValueError("rho_q is restricted to q > 0; pass allow_nonpositive=True to override")


def rho_from_stats(stats: PairBoxStats, qgrid: QGrid) -> np.ndarray:
    qs = qgrid.as_array()
    out = np.full((qs.size, len(stats.scales)), np.nan)
    for j in range(len(stats.scales)):
        mxy, _, _ = qth_moments(stats.fxy[j], qs)
        mxx, _, _ = qth_moments(stats.fxx[j], qs)
        myy, _, _ = qth_moments(stats.fyy[j], qs)
        den = np.sqrt(mxx * myy)
        ok = np.isfinite(den) & (den > 0) & np.isfinite(mxy)
        out[ok, j] = mxy[ok] / den[ok]
    return out


def rho(
    x,
    y,
    qgrid: QGrid | None = None,
    scales: ScaleGrid | None = None,
    m: int = 2,
    allow_nonpositive: bool = False,
    threads: int | None = 1,
) -> RhoProfile:
    """Ratio of the q-th order cross moment to the geometric mean of the variance moments."""
    qgrid = qgrid or default_rho_qgrid()
    _check_q(qgrid, allow_nonpositive)
    n = len(x.values if isinstance(x, ReturnSeries) else x)
    scales = scales or default_scale_grid(n)
    r = rho_from_stats(pair_box_stats(x, y, scales, m, threads), qgrid)
    label = x.window_label if isinstance(x, ReturnSeries) else None
    return RhoProfile(qgrid, scales, r, 0, label)


def rho_with_band(
    x,
    y,
    qgrid: QGrid | None = None,
    scales: ScaleGrid | None = None,
    m: int = 2,
    n_surrogates: int = 100,
    seed: int = 0,
    mode: str = "both",
    threads: int | None = 1,
) -> RhoProfile:
    """rho_q plus mean and sigma of rho_q over independently shuffled pairs."""
    if n_surrogates < 2:
        raise ValueError("a surrogate band needs at least 2 realizations")
    base = rho(x, y, qgrid, scales, m, threads=1)
    xv = x.values if isinstance(x, ReturnSeries) else np.asarray(x, dtype=float)
    yv = y.values if isinstance(y, ReturnSeries) else np.asarray(y, dtype=float)

    def stat(a, b):
        return rho_from_stats(pair_box_stats(a, b, base.scales, m), base.qgrid)

    spec = surrogate.SurrogateSpec(n_realizations=n_surrogates, seed=seed, mode=mode)
    mean, sigma = surrogate.band(stat, xv, yv, spec, threads=threads)
    band = SurrogateBand(mean, sigma, n_surrogates, seed, mode, surrogate.generator_identity())
    return replace(base, band=band)


def lag_scan(
    x: ReturnSeries,
    y: ReturnSeries,
    lags=(-1, 0, 1),
    qgrid: QGrid | None = None,
    scales: ScaleGrid | None = None,
    m: int = 2,
    threads: int | None = 1,
) -> list[RhoProfile]:
    """One rho profile per lag; positive lag pairs x[t] with y[t + lag] (x leads).

    All lags share one scale grid, sized for the shortest shifted overlap.
    """
    if scales is None:
        scales = default_scale_grid(len(x) - max(abs(int(l)) for l in lags))
    out = []
    for lag in lags:
        xs, ys = shift_pair(x, y, int(lag))
        prof = rho(xs, ys, qgrid, scales, m, threads=threads)
        out.append(replace(prof, lag=int(lag)))
    return out


def summarize(profile: RhoProfile) -> RhoSummary:
    """Arithmetic mean of rho_q over the defined scale cells."""
    d = profile.defined
    n_def = d.sum(axis=1)
    with np.errstate(invalid="ignore"):
        bar = np.where(n_def > 0, np.nansum(profile.rho, axis=1) / np.maximum(n_def, 1), np.nan)
    return RhoSummary(
        profile.window_label,
        profile.lag,
        profile.qgrid.as_array(),
        bar,
        n_def,
        d.shape[1] - n_def,
        profile.flags,
    )


@dataclass(frozen=True)
class WindowResult:
    profile: RhoProfile
    summary: RhoSummary


def windowed_rho(
    panel: AlignedPanel,
    pair: tuple[str, str],
    scheme="half-year",
    qgrid: QGrid | None = None,
    scales: ScaleGrid | None = None,
    m: int = 2,
    lags=(0,),
    min_length: int | None = None,
    n_surrogates: int = 0,
    seed: int = 0,
    threads: int | None = 1,
) -> list[WindowResult]:
    """rho_q profile and scale-average per window and lag.

    Scales above a quarter of a window's length get undefined cells; such
    windows also carry the ``short`` flag. The surrogate band, when
    requested, is built for the synchronous (lag 0) profile only.
    """
    x, y = panel[pair[0]], panel[pair[1]]
    scales = scales or default_scale_grid(len(x))
    if min_length is None:
        min_length = 4 * scales.s_max
    xw = split_windows(x, scheme, panel.timestamps, min_length=min_length)
    yw = split_windows(y, scheme, panel.timestamps)
    if not xw:
        raise DataError("no windows produced")
    qgrid = qgrid or default_rho_qgrid()
    out = []
    for k, (wx, wy) in enumerate(zip(xw, yw)):
        for lag in lags:
            a, b = shift_pair(wx, wy, int(lag))
            usable = ScaleGrid(tuple(s for s in scales if s <= len(a) // 4) or (scales.s_min,))
            if len(a) < 4 * scales.s_min:
                r = np.full((len(qgrid), len(scales)), np.nan)
                prof = RhoProfile(qgrid, scales, r, int(lag), wx.window_label, None, wx.flags + ("too-short",))
            else:
                if n_surrogates >= 2 and lag == 0:
                    sub = rho_with_band(a, b, qgrid, usable, m, n_surrogates, seed + 1000003 * k, threads=threads)
                else:
                    sub = rho(a, b, qgrid, usable, m, threads=threads)
                prof = _pad(sub, scales, int(lag), wx.window_label, wx.flags)
            out.append(WindowResult(prof, summarize(prof)))
    return out


def _pad(sub: RhoProfile, scales: ScaleGrid, lag: int, label, flags) -> RhoProfile:
    cols = [scales.scales.index(s) for s in sub.scales]
    Q, S = len(sub.qgrid), len(scales)

    def grow(a):
        out = np.full((Q, S), np.nan)
        out[:, cols] = a
        return out

    band = None
    if sub.band is not None:
        band = replace(sub.band, mean=grow(sub.band.mean), sigma=grow(sub.band.sigma))
    return RhoProfile(sub.qgrid, scales, grow(sub.rho), lag, label, band, flags)
