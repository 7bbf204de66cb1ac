"""Profiles, two-ended box layouts and polynomial detrending residuals."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from mfxcorr.ingest import ReturnSeries

MAX_ORDER = 5


@dataclass(frozen=True)
class ScaleGrid:
    scales: tuple[int, ...]

    def __post_init__(self):
        s = tuple(int(v) for v in self.scales)
        if not s:
            raise ValueError("scale grid is empty")
        if any(b <= a for a, b in zip(s, s[1:])):
            raise ValueError("scales must be strictly increasing")
        object.__setattr__(self, "scales", s)

    @property
    def s_min(self) -> int:
        return self.scales[0]

    @property
    def s_max(self) -> int:
        return self.scales[-1]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.scales, dtype=float)

    def __len__(self):
        return len(self.scales)

    def __iter__(self):
        return iter(self.scales)

    def validate(self, T: int, m: int) -> None:
        if self.s_min < m + 2:
            raise ValueError(f"s_min={self.s_min} must be at least m + 2 = {m + 2}")
        if self.s_max > T // 4:
            raise ValueError(f"s_max={self.s_max} exceeds T/4 = {T // 4}")


def default_scale_grid(T: int, s_min: int = 10, s_max: int = 3750, n_points: int = 25) -> ScaleGrid:
    """Log-spaced integer scales from ``s_min`` to ``min(s_max, T // 4)``."""
    top = min(s_max, T // 4)
    if top < s_min:
        raise ValueError(f"series of length {T} too short for s_min={s_min}")
    s = np.unique(np.round(np.geomspace(s_min, top, n_points)).astype(int))
    return ScaleGrid(tuple(s))


@dataclass(frozen=True)
class BoxLayout:
    T: int
    s: int

    @property
    def M_s(self) -> int:
        return self.T // self.s

    @property
    def boxes(self) -> list[range]:
        M, s, T = self.M_s, self.s, self.T
        start = [range(v * s, (v + 1) * s) for v in range(M)]
        end = [range(T - (k + 1) * s, T - k * s) for k in range(M)]
        return start + end


def layout(T: int, s: int) -> BoxLayout:
    if s > T:
        raise ValueError(f"box size {s} exceeds series length {T}")
    if s < 1:
        raise ValueError("box size must be positive")
    return BoxLayout(T, s)


def profile(series: ReturnSeries | np.ndarray) -> np.ndarray:
    """Cumulative sum of the mean-removed series."""
    x = series.values if isinstance(series, ReturnSeries) else np.asarray(series, dtype=float)
    if x.size == 0:
        raise ValueError("empty series")
    return np.cumsum(x - x.mean())


@lru_cache(maxsize=256)
def _basis(s: int, m: int) -> np.ndarray:
    # orthonormal columns spanning polynomials of degree <= m on i = 1..s
    t = np.linspace(-1.0, 1.0, s)
    q, _ = np.linalg.qr(np.vander(t, m + 1, increasing=True))
    q.setflags(write=False)
    return q


def detrend_boxes(segments: np.ndarray, m: int = 2) -> np.ndarray:
    """Residuals after least-squares degree-``m`` fits along the last axis."""
    segments = np.asarray(segments, dtype=float)
    s = segments.shape[-1]
    if not 0 <= m <= MAX_ORDER:
        raise ValueError(f"polynomial order must be in 0..{MAX_ORDER}")
    if s < m + 2:
        raise ValueError(f"box of {s} points is too short for an order-{m} fit")
    q = _basis(s, m)
    return segments - (segments @ q) @ q.T


def detrend_box(segment, m: int = 2) -> np.ndarray:
    return detrend_boxes(np.asarray(segment, dtype=float)[None, :], m)[0]


def box_segments(prof: np.ndarray, s: int) -> np.ndarray:
    """Stack the 2*M_s boxes (start-anchored first, then end-anchored) as rows."""
    T = prof.size
    lay = layout(T, s)
    M = lay.M_s
    head = prof[: M * s].reshape(M, s)
    tail = prof[T - M * s :].reshape(M, s)[::-1]
    return np.concatenate([head, tail])


def box_residuals(prof: np.ndarray, s: int, m: int = 2) -> np.ndarray:
    return detrend_boxes(box_segments(prof, s), m)


def box_covariance(rx: np.ndarray, ry: np.ndarray) -> np.ndarray:
    """Per-box mean of the residual product; ``rx is ry`` gives the variance."""
    return np.mean(rx * ry, axis=1)
