"""Tail distributions of normalized returns and power-law exponent fits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mfxcorr.ingest import DataError, ReturnSeries

MIN_TAIL = 50
SIDES = ("positive", "negative")


@dataclass(frozen=True)
class TailFit:
    side: str
    gamma: float
    gamma_stderr: float
    fit_quantile: float
    n_tail: int
    r_squared: float
    method: str
    threshold: float


def side_values(series: ReturnSeries | np.ndarray, side: str) -> np.ndarray:
    """Absolute values of the positive or negative returns."""
    v = series.values if isinstance(series, ReturnSeries) else np.asarray(series, dtype=float)
    if side == "positive":
        return v[v > 0]
    if side == "negative":
        return -v[v < 0]
    raise ValueError(f"side must be one of {SIDES}")


def ccdf(series, side: str = "positive") -> tuple[np.ndarray, np.ndarray]:
    """Empirical P(|r| >= r) over one side, at each distinct value, ascending in r."""
    a = side_values(series, side)
    if a.size == 0:
        raise DataError(f"no {side} values")
    r, counts = np.unique(a, return_counts=True)
    at_least = np.cumsum(counts[::-1])[::-1]
    return r, at_least / a.size


def _tail(a: np.ndarray, fit_quantile: float) -> np.ndarray:
    if not 0 < fit_quantile < 0.5:
        raise ValueError("fit_quantile must lie in (0, 0.5)")
    n_tail = int(np.floor(fit_quantile * a.size))
    if n_tail < MIN_TAIL:
        raise DataError(f"only {n_tail} tail points at quantile {fit_quantile}; need {MIN_TAIL}")
    return np.sort(a)[::-1][: n_tail + 1]  # one extra: the Hill threshold


def tail_exponent(
    series,
    side: str = "positive",
    fit_quantile: float = 0.01,
    method: str = "ols",
) -> TailFit:
    """Power-law exponent gamma of P(>= r) ~ r^-gamma on the largest values of one side.

    ``ols`` regresses log rank-survival on log r over the top ``fit_quantile``
    of that side; ``hill`` is the Hill estimator on the same order statistics,
    thresholded at the next value down.
    """
    if isinstance(series, ReturnSeries) and not series.normalized:
        raise DataError("tail fits require normalized returns")
    a = side_values(series, side)
    top = _tail(a, fit_quantile)
    k = top.size - 1
    x, u = top[:k], top[k]
    if not x[0] > u:
        raise DataError("tail has zero spread")
    if method == "ols":
        P = np.arange(1, k + 1) / a.size
        lx, ly = np.log(x), np.log(P)
        dx = lx - lx.mean()
        dy = ly - ly.mean()
        slope = (dx @ dy) / (dx @ dx)
        resid = dy - slope * dx
        r2 = 1 - (resid @ resid) / (dy @ dy)
        se = np.sqrt((resid @ resid) / (k - 2) / (dx @ dx))
        return TailFit(side, float(-slope), float(se), fit_quantile, k, float(r2), "ols", float(u))
    if method == "hill":
        if not u > 0:
            raise DataError("tail threshold is zero")
        g = 1.0 / np.mean(np.log(x / u))
        return TailFit(side, float(g), float(g / np.sqrt(k)), fit_quantile, k, float("nan"), "hill", float(u))
    raise ValueError("method must be 'ols' or 'hill'")


def inverse_cubic(r: np.ndarray, anchor_r: float, anchor_p: float) -> np.ndarray:
    """Reference line P = anchor_p * (r / anchor_r)^-3."""
    return anchor_p * (np.asarray(r, dtype=float) / anchor_r) ** -3.0
