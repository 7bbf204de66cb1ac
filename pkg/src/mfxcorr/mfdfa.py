"""Single-series MFDFA: fluctuation functions, h(q), tau(q) and f(alpha)."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from mfxcorr._parallel import pmap
from mfxcorr.detrend import ScaleGrid, box_covariance, box_residuals, profile
from mfxcorr.ingest import ReturnSeries

# boxes whose |f^2| sits this far below the per-scale median count as zero
ZERO_BOX_REL = 1e-20
EXCLUDED_FLAG_FRACTION = 0.10
DEGENERATE_WIDTH = 1e-6


@dataclass(frozen=True)
class QGrid:
    qs: tuple[float, ...]

    def __post_init__(self):
        q = tuple(float(v) for v in self.qs)
        if not q:
            raise ValueError("q grid is empty")
        if any(b <= a for a, b in zip(q, q[1:])):
            raise ValueError("q values must be strictly increasing")
        object.__setattr__(self, "qs", q)

    @classmethod
    def arange(cls, q_min: float = -4.0, q_max: float = 4.0, step: float = 0.5) -> QGrid:
        n = int(round((q_max - q_min) / step))
        q = np.round(q_min + step * np.arange(n + 1), 10)
        q[np.abs(q) < 1e-12] = 0.0
        return cls(tuple(q))

    @classmethod
    def default(cls) -> QGrid:
        return cls.arange(-4.0, 4.0, 0.5)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.qs)

    def index(self, q: float) -> int:
        hits = np.flatnonzero(np.isclose(self.as_array(), q, atol=1e-9))
        if not hits.size:
            raise KeyError(q)
        return int(hits[0])

    def __len__(self):
        return len(self.qs)

    def __iter__(self):
        return iter(self.qs)


@dataclass(frozen=True)
class FluctuationSurface:
    """F(q, s) over a q-grid and scale grid.

    ``moments`` holds the raw q-th order averages; ``values`` their
    1/q-th roots (log-limit at q = 0). ``excluded`` counts boxes dropped as
    zero for q <= 0 and ``flagged`` marks cells where that exceeds 10%.
    """

    qgrid: QGrid
    scales: ScaleGrid
    values: np.ndarray
    moments: np.ndarray
    excluded: np.ndarray
    n_boxes: np.ndarray
    kind: str = "single"

    @property
    def flagged(self) -> np.ndarray:
        return self.excluded > EXCLUDED_FLAG_FRACTION * self.n_boxes[None, :]


@dataclass(frozen=True)
class ScalingFit:
    qs: np.ndarray
    exponent: np.ndarray
    intercept: np.ndarray
    r_squared: np.ndarray
    n_points: np.ndarray
    fit_range: tuple[float, float]

    @property
    def present(self) -> np.ndarray:
        return np.isfinite(self.exponent)


@dataclass(frozen=True)
class SingularitySpectrum:
    qs: np.ndarray
    alphas: np.ndarray
    f_values: np.ndarray
    alpha_0: float
    alpha_min: float
    alpha_max: float
    delta_alpha: float
    delta_alpha_L: float
    delta_alpha_R: float
    asymmetry: float
    degenerate: bool = False
    warnings: tuple[str, ...] = field(default=())


def _box_variances(prof: np.ndarray, scales: ScaleGrid, m: int, threads: int | None) -> list[np.ndarray]:
    def one(s):
        r = box_residuals(prof, s, m)
        return box_covariance(r, r)

    return pmap(one, scales, threads)


def qth_moments(f2: np.ndarray, qs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Signed q-th order averages of per-box (co)variances at one scale.

    Returns (moments, log-limit roots at q = 0, excluded counts). The
    sign(f2)|f2|^(q/2) form reduces to f2^(q/2) for variances, so single and
    cross paths share this arithmetic bit for bit.
    """
    a = np.abs(f2)
    sgn = np.sign(f2)
    c = np.median(a)
    if not c > 0:
        c = a.max() if a.max() > 0 else 1.0
    zero = a <= ZERO_BOX_REL * c
    z = a / c
    mom = np.empty(qs.size)
    excl = np.zeros(qs.size, dtype=int)
    log0 = np.nan
    for k, q in enumerate(qs):
        if q > 0:
            mom[k] = c ** (q / 2) * np.mean(sgn * z ** (q / 2))
            continue
        keep = ~zero
        excl[k] = int(zero.sum())
        if not keep.any():
            mom[k] = np.nan
            continue
        if q == 0:
            mom[k] = np.mean(sgn[keep])
            log0 = np.sqrt(c) * np.exp(0.5 * np.mean(np.log(z[keep])))
        else:
            mom[k] = c ** (q / 2) * np.mean(sgn[keep] * z[keep] ** (q / 2))
    return mom, log0, excl


def moment_roots(moments: np.ndarray, qs: np.ndarray, log0: np.ndarray) -> np.ndarray:
    """sign(M)|M|^(1/q) per cell, with the supplied log-limit row at q = 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sign(moments) * np.abs(moments) ** (1.0 / qs[:, None])
    zero = qs == 0
    if zero.any():
        out[zero] = log0[None, :]
    return out


def surface_from_boxes(f2_by_scale: list[np.ndarray], qgrid: QGrid, scales: ScaleGrid, kind: str):
    qs = qgrid.as_array()
    Q, S = len(qs), len(scales)
    mom = np.empty((Q, S))
    excl = np.zeros((Q, S), dtype=int)
    log0 = np.full(S, np.nan)
    for j, f2 in enumerate(f2_by_scale):
        mom[:, j], log0[j], excl[:, j] = qth_moments(f2, qs)
    n_boxes = np.array([f2.size for f2 in f2_by_scale])
    return mom, moment_roots(mom, qs, log0), excl, n_boxes


def fluctuation_single(
    series: ReturnSeries | np.ndarray,
    qgrid: QGrid | None = None,
    scales: ScaleGrid | None = None,
    m: int = 2,
    threads: int | None = 1,
) -> FluctuationSurface:
    x = series.values if isinstance(series, ReturnSeries) else np.asarray(series, dtype=float)
    qgrid = qgrid or QGrid.default()
    if scales is None:
        from mfxcorr.detrend import default_scale_grid

        scales = default_scale_grid(x.size)
    if x.size < 4 * scales.s_min:
        raise ValueError(f"series of length {x.size} shorter than 4*s_min = {4 * scales.s_min}")
    scales.validate(x.size, m)
    f2 = _box_variances(profile(x), scales, m, threads)
    mom, vals, excl, n_boxes = surface_from_boxes(f2, qgrid, scales, "single")
    surf = FluctuationSurface(qgrid, scales, vals, mom, excl, n_boxes, "single")
    if surf.flagged.any():
        bad = sorted({qgrid.qs[i] for i in np.flatnonzero(surf.flagged.any(axis=1))})
        warnings.warn(f"more than 10% zero-variance boxes excluded at q = {bad}", stacklevel=2)
    return surf


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    xm, ym = x.mean(), y.mean()
    dx, dy = x - xm, y - ym
    sxx = dx @ dx
    slope = (dx @ dy) / sxx
    intercept = ym - slope * xm
    ss_tot = dy @ dy
    ss_res = np.sum((dy - slope * dx) ** 2)
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    return slope, intercept, r2


def fit_loglog(
    values: np.ndarray,
    s: np.ndarray,
    qs: np.ndarray,
    fit_range=None,
    usable: np.ndarray | None = None,
) -> ScalingFit:
    """Per-row OLS of log(values) on log(s); rows with <3 usable points are NaN.

    ``fit_range`` is ``(s_lo, s_hi)`` or a mapping q -> (s_lo, s_hi).
    """
    Q = values.shape[0]
    expo = np.full(Q, np.nan)
    icpt = np.full(Q, np.nan)
    r2 = np.full(Q, np.nan)
    npts = np.zeros(Q, dtype=int)
    default = (float(s[0]), float(s[-1]))
    for k, q in enumerate(qs):
        if isinstance(fit_range, dict):
            lo, hi = fit_range.get(float(q), default)
        else:
            lo, hi = fit_range or default
        sel = (s >= lo) & (s <= hi) & np.isfinite(values[k]) & (values[k] > 0)
        if usable is not None:
            sel &= usable[k]
        npts[k] = int(sel.sum())
        if npts[k] < 3:
            continue
        expo[k], icpt[k], r2[k] = _ols(np.log(s[sel]), np.log(values[k, sel]))
    rng = default if fit_range is None or isinstance(fit_range, dict) else tuple(map(float, fit_range))
    return ScalingFit(qs.copy(), expo, icpt, r2, npts, rng)


def fit_scaling(surface: FluctuationSurface, fit_range=None) -> ScalingFit:
    """Generalized Hurst exponents h(q) from F(q, s) ~ s^h(q)."""
    if len(surface.scales) < 3:
        raise ValueError("need at least 3 scales to fit")
    return fit_loglog(surface.values, surface.scales.as_array(), surface.qgrid.as_array(), fit_range)


def tau(fit: ScalingFit) -> np.ndarray:
    return fit.qs * fit.exponent - 1.0


def asymmetry_from_arms(delta_left: float, delta_right: float) -> tuple[float, bool]:
    """(A_alpha, degenerate); a zero-width spectrum yields (0.0, True)."""
    total = delta_left + delta_right
    if not total > DEGENERATE_WIDTH:
        return 0.0, True
    return (delta_left - delta_right) / total, False


def spectrum(tau_values: np.ndarray, qgrid: QGrid | np.ndarray) -> SingularitySpectrum:
    """Legendre transform of tau(q) by finite differences on the q-grid."""
    qs = qgrid.as_array() if isinstance(qgrid, QGrid) else np.asarray(qgrid, dtype=float)
    t = np.asarray(tau_values, dtype=float)
    if qs.size < 3:
        raise ValueError("need at least 3 q points for a spectrum")
    if not np.all(np.isfinite(t)):
        raise ValueError("tau(q) has missing values")
    alphas = np.gradient(t, qs)
    f = qs * alphas - t
    notes = []
    rising = np.flatnonzero(np.diff(alphas) > 1e-9)
    if rising.size:
        bad = [float(qs[i + 1]) for i in rising]
        notes.append(f"alpha(q) not monotone at q = {bad}")
    zero = np.flatnonzero(np.isclose(qs, 0.0))
    i0 = int(zero[0]) if zero.size else int(np.argmax(f))
    if not zero.size:
        notes.append("q = 0 missing from grid; alpha_0 taken at max f")
    a0 = float(alphas[i0])
    amin, amax = float(alphas.min()), float(alphas.max())
    dl, dr = a0 - amin, amax - a0
    A, degenerate = asymmetry_from_arms(dl, dr)
    return SingularitySpectrum(
        qs, alphas, f, a0, amin, amax, amax - amin, dl, dr, A, degenerate, tuple(notes)
    )


def asymmetry(spec: SingularitySpectrum) -> float:
    return spec.asymmetry


def unreliable_qs(qs, gamma: float | None) -> np.ndarray:
    """Mask of q values at or above a tail exponent, where moments diverge."""
    qs = np.asarray(qs, dtype=float)
    if gamma is None or not np.isfinite(gamma):
        return np.zeros(qs.shape, dtype=bool)
    return qs >= gamma


@dataclass(frozen=True)
class MFDFAResult:
    surface: FluctuationSurface
    fit: ScalingFit
    tau: np.ndarray
    spectrum: SingularitySpectrum | None  # None when tau is incomplete or the grid too short


def mfdfa(series, qgrid=None, scales=None, m: int = 2, fit_range=None, threads=1) -> MFDFAResult:
    surf = fluctuation_single(series, qgrid, scales, m, threads)
    fit = fit_scaling(surf, fit_range)
    t = tau(fit)
    spec = None
    if len(surf.qgrid) >= 3 and np.all(np.isfinite(t)):
        spec = spectrum(t, surf.qgrid)
    return MFDFAResult(surf, fit, t, spec)
