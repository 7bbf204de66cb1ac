"""Quote loading, log-returns, clock alignment, windowing and lag shifts."""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)


class DataError(ValueError):
    """Raised when input data violates a structural requirement."""


@dataclass(frozen=True)
class RawQuoteSeries:
    instrument_id: str
    timestamps: np.ndarray  # int64 epoch seconds
    prices: np.ndarray
    bar_interval: int = 300
    n_rejected: int = 0

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        px = np.asarray(self.prices, dtype=float)
        if ts.shape != px.shape or ts.ndim != 1:
            raise DataError(f"{self.instrument_id}: timestamps and prices differ in length")
        if np.any(px <= 0) or not np.all(np.isfinite(px)):
            raise DataError(f"{self.instrument_id}: prices must be finite and positive")
        bad = np.flatnonzero(np.diff(ts) <= 0)
        if bad.size:
            raise DataError(
                f"{self.instrument_id}: timestamps not strictly increasing at index {bad[0] + 1}"
            )
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "prices", px)

    def __len__(self):
        return self.prices.size


@dataclass(frozen=True)
class ReturnSeries:
    """A uniformly indexed return series.

    ``timestamps``, when present, holds the epoch second at which each return
    ends; windowing by calendar needs it. ``flags`` carries quality notes such
    as ``"short"`` for windows below the usable length.
    """

    instrument_id: str
    values: np.ndarray
    normalized: bool = False
    window_label: str | None = None
    timestamps: np.ndarray | None = None
    flags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise DataError(f"{self.instrument_id}: return series must be 1-D and non-empty")
        object.__setattr__(self, "values", v)
        if self.timestamps is not None:
            ts = np.asarray(self.timestamps, dtype=np.int64)
            if ts.shape != v.shape:
                raise DataError(f"{self.instrument_id}: timestamps and values differ in length")
            object.__setattr__(self, "timestamps", ts)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class AlignedPanel:
    timestamps: np.ndarray
    columns: tuple[ReturnSeries, ...]
    quote_timestamps: np.ndarray | None = None  # retained price clock, before differencing

    def __post_init__(self):
        n = len(self.timestamps)
        if any(len(c) != n for c in self.columns):
            raise DataError("panel columns must all match the timestamp length")

    @property
    def instruments(self) -> list[str]:
        return [c.instrument_id for c in self.columns]

    def __getitem__(self, instrument_id: str) -> ReturnSeries:
        for c in self.columns:
            if c.instrument_id == instrument_id:
                return c
        raise KeyError(instrument_id)


def parse_timestamp(text: str) -> int:
    """Integer epoch seconds or ``YYYY-MM-DD HH:MM:SS`` (UTC)."""
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    dt = datetime.strptime(text, "%Y-%m-%d %H:%M:%S").replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def _uncommented(lines):
    # metadata lines written by this package start with '#'
    return (ln for ln in lines if not ln.startswith("#"))


def load_csv(
    path,
    time_col: str = "timestamp",
    price_col: str = "price",
    instrument_id: str | None = None,
    bar_interval: int = 300,
) -> RawQuoteSeries:
    """Read a headered UTF-8 CSV of quotes.

    Rows whose price is missing, non-numeric or non-positive are skipped and
    counted in ``n_rejected``. Duplicate or decreasing timestamps raise.
    """
    path = Path(path)
    instrument_id = instrument_id or path.stem
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    times, prices = [], []
    rejected = 0
    with fh:
        reader = csv.DictReader(_uncommented(fh), delimiter=",")
        if reader.fieldnames is None or time_col not in reader.fieldnames or price_col not in reader.fieldnames:
            raise DataError(f"{path}: header must contain {time_col!r} and {price_col!r}")
        for row in reader:
            try:
                p = float(row[price_col])
                t = parse_timestamp(row[time_col])
            except (TypeError, ValueError):
                rejected += 1
                continue
            if not np.isfinite(p) or p <= 0:
                rejected += 1
                continue
            times.append(t)
            prices.append(p)
    if not prices:
        raise DataError(f"{path}: no valid rows")
    if rejected:
        log.warning("%s: rejected %d rows", path, rejected)
    ts = np.asarray(times, dtype=np.int64)
    bad = np.flatnonzero(np.diff(ts) <= 0)
    if bad.size:
        kind = "duplicate" if ts[bad[0] + 1] == ts[bad[0]] else "decreasing"
        raise DataError(f"{path}: {kind} timestamp at row index {bad[0] + 1}")
    return RawQuoteSeries(instrument_id, ts, np.asarray(prices), bar_interval, rejected)


def log_returns(series: RawQuoteSeries) -> ReturnSeries:
    if len(series) < 2:
        raise DataError(f"{series.instrument_id}: need at least 2 prices for returns")
    values = np.diff(np.log(series.prices))
    return ReturnSeries(series.instrument_id, values, timestamps=series.timestamps[1:])


def normalize(series: ReturnSeries) -> ReturnSeries:
    """Shift to zero mean and scale to unit sample standard deviation (ddof=1)."""
    v = series.values
    if v.size < 2:
        raise DataError(f"{series.instrument_id}: need at least 2 values to normalize")
    sd = v.std(ddof=1)
    if not sd > 0:
        raise DataError(f"{series.instrument_id}: zero variance")
    return replace(series, values=(v - v.mean()) / sd, normalized=True)


def align(panel: Sequence[RawQuoteSeries], drop_gap_returns: bool = False) -> AlignedPanel:
    """Keep only timestamps every instrument quotes, then difference.

    Prices are intersected first, so a return may span a removed gap. With
    ``drop_gap_returns`` such returns (longer than the bar interval) are
    discarded instead.
    """
    if len(panel) < 2:
        raise DataError("align needs at least 2 series")
    common = panel[0].timestamps
    for s in panel[1:]:
        common = np.intersect1d(common, s.timestamps, assume_unique=True)
    if common.size < 2:
        raise DataError("timestamp intersection is empty" if common.size == 0 else
                        "timestamp intersection has a single point")
    cols = []
    for s in panel:
        idx = np.searchsorted(s.timestamps, common)
        cols.append(np.diff(np.log(s.prices[idx])))
    ts = common[1:]
    keep = slice(None)
    if drop_gap_returns:
        bar = max(s.bar_interval for s in panel)
        keep = np.diff(common) <= bar
        ts = ts[keep]
        if ts.size == 0:
            raise DataError("no returns left after dropping gap-spanning returns")
    columns = tuple(
        ReturnSeries(s.instrument_id, c[keep], timestamps=ts) for s, c in zip(panel, cols)
    )
    return AlignedPanel(ts, columns, common)


def _half_year_labels(timestamps: np.ndarray) -> np.ndarray:
    months = timestamps.astype("datetime64[s]").astype("datetime64[M]").astype(np.int64)
    year = 1970 + months // 12
    half = np.where(months % 12 < 6, 1, 2)
    return np.array([f"{y}H{h}" for y, h in zip(year, half)])


def split_windows(
    series: ReturnSeries,
    scheme: str | int = "half-year",
    timestamps: np.ndarray | None = None,
    min_length: int | None = None,
) -> list[ReturnSeries]:
    """Disjoint, exhaustive windows of ``series``.

    ``scheme`` is ``"half-year"`` (calendar halves, labels like ``2012H1``) or
    an integer window count; with a count, earlier windows absorb the
    remainder. Windows shorter than ``min_length`` are kept but flagged.
    """
    v = series.values
    ts = series.timestamps if timestamps is None else np.asarray(timestamps, dtype=np.int64)
    bounds: list[tuple[int, int, str]] = []
    if scheme in ("half-year", "halfyear", "calendar"):
        if ts is None or len(ts) != v.size:
            raise DataError("calendar windows need one timestamp per return")
        labels = _half_year_labels(ts)
        cut = np.flatnonzero(labels[1:] != labels[:-1]) + 1
        edges = np.concatenate([[0], cut, [v.size]])
        bounds = [(a, b, str(labels[a])) for a, b in zip(edges[:-1], edges[1:])]
    else:
        k = int(scheme)
        if k < 1 or k > v.size:
            raise DataError(f"cannot split {v.size} values into {k} windows")
        base, extra = divmod(v.size, k)
        start = 0
        for i in range(k):
            n = base + (1 if i < extra else 0)
            bounds.append((start, start + n, f"W{i + 1:02d}"))
            start += n
    out = []
    for a, b, label in bounds:
        flags = ()
        if min_length is not None and b - a < min_length:
            warnings.warn(f"window {label} has {b - a} values, below {min_length}", stacklevel=2)
            flags = ("short",)
        out.append(
            replace(
                series,
                values=v[a:b],
                timestamps=None if ts is None else ts[a:b],
                window_label=label,
                flags=series.flags + flags,
            )
        )
    return out


def shift_pair(x: ReturnSeries, y: ReturnSeries, lag: int) -> tuple[ReturnSeries, ReturnSeries]:
    """Offset ``y`` against ``x`` by ``lag`` steps and trim to the overlap.

    Positive ``lag`` pairs x[t] with y[t + lag], i.e. x leads.
    """
    n = len(x)
    if len(y) != n:
        raise DataError("shift_pair needs equal-length series")
    if abs(lag) >= n:
        raise DataError(f"|lag|={abs(lag)} must be below the series length {n}")
    if lag >= 0:
        xs, ys = slice(0, n - lag), slice(lag, n)
    else:
        xs, ys = slice(-lag, n), slice(0, n + lag)

    def cut(s, sl):
        ts = None if s.timestamps is None else s.timestamps[sl]
        return replace(s, values=s.values[sl], timestamps=ts)

    return cut(x, xs), cut(y, ys)


def load_returns_csv(path, time_col: str = "timestamp", returns_col: str = "return", instrument_id=None) -> ReturnSeries:
    """Read pre-computed returns; non-numeric rows are skipped."""
    path = Path(path)
    times, values = [], []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(_uncommented(fh))
        if reader.fieldnames is None or time_col not in reader.fieldnames or returns_col not in reader.fieldnames:
            raise DataError(f"{path}: header must contain {time_col!r} and {returns_col!r}")
        for row in reader:
            try:
                v = float(row[returns_col])
                t = parse_timestamp(row[time_col])
            except (TypeError, ValueError):
                continue
            if np.isfinite(v):
                times.append(t)
                values.append(v)
    if not values:
        raise DataError(f"{path}: no valid rows")
    ts = np.asarray(times, dtype=np.int64)
    bad = np.flatnonzero(np.diff(ts) <= 0)
    if bad.size:
        raise DataError(f"{path}: timestamps not strictly increasing at row index {bad[0] + 1}")
    return ReturnSeries(instrument_id or path.stem, np.asarray(values), timestamps=ts)


def align_returns(series: Sequence[ReturnSeries]) -> AlignedPanel:
    """Intersect already-computed return series on their timestamps."""
    if len(series) < 2:
        raise DataError("align needs at least 2 series")
    if any(s.timestamps is None for s in series):
        raise DataError("return series need timestamps to be aligned")
    common = series[0].timestamps
    for s in series[1:]:
        common = np.intersect1d(common, s.timestamps, assume_unique=True)
    if common.size == 0:
        raise DataError("timestamp intersection is empty")
    cols = tuple(
        replace(s, values=s.values[np.searchsorted(s.timestamps, common)], timestamps=common)
        for s in series
    )
    return AlignedPanel(common, cols)
