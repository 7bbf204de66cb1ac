"""Seeded generators with known scaling properties, used as test oracles.

``fgn`` uses Davies-Harte circulant embedding (exact covariance), ``cascade``
the binomial multiplicative measure, ``pareto`` symmetric power-law samples,
``coupled`` and ``regime_switch`` correlated pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from mfxcorr.ingest import RawQuoteSeries, ReturnSeries

GENERATOR = "numpy.random.PCG64"
KINDS = ("fgn", "cascade", "pareto", "coupled", "regime_switch")


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def generator_identity() -> str:
    return f"{GENERATOR} (numpy {np.__version__})"


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    length: int = 2**16
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        p = self.params
        if self.kind == "fgn" and not 0 < p.get("H", 0.5) < 1:
            raise ValueError("fgn needs 0 < H < 1")
        if self.kind == "cascade" and not 0.5 < p.get("p", 0.7) < 1:
            raise ValueError("cascade needs 0.5 < p < 1")
        if self.kind == "pareto" and not p.get("gamma", 3.0) > 1:
            raise ValueError("pareto needs gamma > 1")
        if self.kind in ("coupled", "regime_switch") and not 0 <= p.get("c", 0.7) <= 1:
            raise ValueError("coupling c must lie in [0, 1]")
        if self.length < 2:
            raise ValueError("length must be at least 2")


def fgn(length: int, H: float, rng: np.random.Generator) -> np.ndarray:
    """Unit-variance fractional Gaussian noise by circulant embedding."""
    n = length
    k = np.arange(n + 1, dtype=float)
    acov = 0.5 * (np.abs(k + 1) ** (2 * H) - 2 * np.abs(k) ** (2 * H) + np.abs(k - 1) ** (2 * H))
    row = np.concatenate([acov, acov[-2:0:-1]])  # first row of 2n circulant
    lam = np.fft.rfft(row).real
    if lam.min() < -1e-10 * lam.max():
        raise ValueError("circulant embedding has negative eigenvalues")
    lam = np.clip(lam, 0.0, None)
    M = row.size
    z = rng.standard_normal(M)
    # Hermitian-symmetric complex Gaussian vector with E|w_k|^2 = lam_k * M
    w = np.empty(M // 2 + 1, dtype=complex)
    w[0] = z[0] * np.sqrt(lam[0] * M)
    w[-1] = z[1] * np.sqrt(lam[-1] * M)
    re, im = z[2 : M // 2 + 1], z[M // 2 + 1 :]
    w[1:-1] = (re + 1j * im) * np.sqrt(lam[1:-1] * M / 2)
    return np.fft.irfft(w, n=M)[:n]


def fgn_autocovariance(H: float, lags) -> np.ndarray:
    k = np.abs(np.asarray(lags, dtype=float))
    return 0.5 * (np.abs(k + 1) ** (2 * H) - 2 * k ** (2 * H) + np.abs(k - 1) ** (2 * H))


def cascade(depth: int, p: float, rng: np.random.Generator | None = None) -> np.ndarray:
    """Binomial multiplicative measure on 2**depth cells (sums to 1).

    Each split hands weight ``p`` to one child and ``1 - p`` to the other;
    with an ``rng`` the side receiving ``p`` is chosen at random per split,
    otherwise it is always the left child.
    """
    mu = np.ones(1)
    for _ in range(depth):
        left = np.full(mu.size, p)
        if rng is not None:
            flip = rng.random(mu.size) < 0.5
            left[flip] = 1 - p
        mu = np.column_stack([mu * left, mu * (1 - left)]).ravel()
    return mu


def pareto(length: int, gamma: float, rng: np.random.Generator) -> np.ndarray:
    """Symmetric samples with P(|x| >= r) = r**-gamma for r >= 1."""
    mag = (1.0 - rng.random(length)) ** (-1.0 / gamma)
    sign = np.where(rng.random(length) < 0.5, -1.0, 1.0)
    return sign * mag


def _body(length: int, rng: np.random.Generator, df: float | None) -> np.ndarray:
    if df is None:
        return rng.standard_normal(length)
    if df <= 2:
        raise ValueError("df must exceed 2 for a unit-variance Student t")
    return rng.standard_t(df, length) / np.sqrt(df / (df - 2))


def coupled(
    length: int,
    c: float,
    rng: np.random.Generator,
    decouple_tails: bool = False,
    tail_fraction: float = 0.05,
    df: float | None = None,
    x: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Pair with y = c*x + sqrt(1 - c^2)*eta.

    With ``decouple_tails`` the y-values at the largest ``tail_fraction`` of
    |x| are replaced by a random-sign permutation of those |x| values, so
    extremes keep their size but lose their partner.
    """
    if x is None:
        x = _body(length, rng, df)
    eta = _body(length, rng, df)
    y = c * x + np.sqrt(1 - c * c) * eta
    if decouple_tails:
        cut = np.quantile(np.abs(x), 1 - tail_fraction)
        idx = np.flatnonzero(np.abs(x) > cut)
        mags = rng.permutation(np.abs(x[idx]))
        y[idx] = np.where(rng.random(idx.size) < 0.5, -1.0, 1.0) * mags
    return x, y


def regime_switch(length: int, c: float, switch: int, rng: np.random.Generator, df=None):
    """Coupled with strength ``c`` before index ``switch`` and independent after."""
    x = _body(length, rng, df)
    eta = _body(length, rng, df)
    y = np.sqrt(1 - c * c) * eta + c * x
    y[switch:] = eta[switch:]
    return x, y


def generate(spec: GeneratorSpec) -> ReturnSeries | tuple[ReturnSeries, ReturnSeries]:
    rng = rng_for(spec.seed)
    p = spec.params
    n = spec.length
    if spec.kind == "fgn":
        return ReturnSeries("fgn", fgn(n, p.get("H", 0.5), rng))
    if spec.kind == "cascade":
        depth = int(p.get("depth", int(np.log2(n))))
        mu = cascade(depth, p.get("p", 0.7), rng if p.get("randomize", False) else None)
        if p.get("sign_randomize", False):
            mu = mu * np.where(rng.random(mu.size) < 0.5, -1.0, 1.0)
        return ReturnSeries("cascade", mu)
    if spec.kind == "pareto":
        return ReturnSeries("pareto", pareto(n, p.get("gamma", 3.0), rng))
    if spec.kind == "coupled":
        x, y = coupled(
            n,
            p.get("c", 0.7),
            rng,
            decouple_tails=p.get("decouple_tails", False),
            tail_fraction=p.get("tail_fraction", 0.05),
            df=p.get("df"),
        )
        return ReturnSeries("x", x), ReturnSeries("y", y)
    x, y = regime_switch(n, p.get("c", 0.7), int(p.get("switch", n // 2)), rng, p.get("df"))
    return ReturnSeries("x", x), ReturnSeries("y", y)


def cascade_hurst(qs, p: float) -> np.ndarray:
    """h(q) = 1/q - ln(p^q + (1-p)^q) / (q ln 2), with its q -> 0 limit."""
    qs = np.asarray(qs, dtype=float)
    a, b = p, 1 - p
    out = np.empty_like(qs)
    nz = qs != 0
    q = qs[nz]
    out[nz] = 1 / q - np.log(a**q + b**q) / (q * np.log(2))
    # expand ln(a^q + b^q) = ln 2 + q*(ln a + ln b)/2 + O(q^2)
    out[~nz] = -(np.log(a) + np.log(b)) / (2 * np.log(2))
    return out


def cascade_tau(qs, p: float) -> np.ndarray:
    qs = np.asarray(qs, dtype=float)
    return -np.log2(p**qs + (1 - p) ** qs)


def cascade_alpha(qs, p: float) -> np.ndarray:
    qs = np.asarray(qs, dtype=float)
    a, b = p**qs, (1 - p) ** qs
    return -(a * np.log(p) + b * np.log(1 - p)) / ((a + b) * np.log(2))


def analytic_targets(spec: GeneratorSpec, qgrid) -> dict[str, np.ndarray]:
    """Closed-form h, tau, alpha and f on the grid for fgn and cascade specs."""
    qs = np.asarray(getattr(qgrid, "qs", qgrid), dtype=float)
    if spec.kind == "fgn":
        H = spec.params.get("H", 0.5)
        h = np.full(qs.shape, H)
        t = qs * H - 1
        alpha = np.full(qs.shape, H)
    elif spec.kind == "cascade":
        p = spec.params.get("p", 0.7)
        h = cascade_hurst(qs, p)
        t = cascade_tau(qs, p)
        alpha = cascade_alpha(qs, p)
    else:
        raise ValueError(f"no analytic targets for kind {spec.kind!r}")
    return {"q": qs, "h": h, "tau": t, "alpha": alpha, "f": qs * alpha - t}


def calendar_timestamps(n: int, start: str = "2012-01-02", bar: int = 300, skip_weekends: bool = True):
    """First ``n`` bar times from ``start`` (UTC), optionally skipping Sat/Sun."""
    t0 = int(datetime.strptime(start, "%Y-%m-%d").replace(tzinfo=timezone.utc).timestamp())
    out = np.empty(0, dtype=np.int64)
    chunk = max(n, 1024)
    pos = t0
    while out.size < n:
        ts = pos + bar * np.arange(2 * chunk, dtype=np.int64)
        pos = ts[-1] + bar
        if skip_weekends:
            dow = (ts // 86400 + 3) % 7  # 0 = Monday
            ts = ts[dow < 5]
        out = np.concatenate([out, ts])
    return out[:n]


def bars_between(start: str, end: str, bar: int = 300, skip_weekends: bool = True) -> int:
    t0 = datetime.strptime(start, "%Y-%m-%d").replace(tzinfo=timezone.utc).timestamp()
    t1 = datetime.strptime(end, "%Y-%m-%d").replace(tzinfo=timezone.utc).timestamp()
    ts = int(t0) + bar * np.arange(int((t1 - t0) // bar), dtype=np.int64)
    if skip_weekends:
        ts = ts[(ts // 86400 + 3) % 7 < 5]
    return int(ts.size)


def to_quotes(series: ReturnSeries, timestamps: np.ndarray, start_price: float = 100.0, bar: int = 300):
    """Price path whose log-returns are ``series.values`` (one more point than returns)."""
    if len(timestamps) != len(series) + 1:
        raise ValueError("need one timestamp more than returns")
    prices = start_price * np.exp(np.concatenate([[0.0], np.cumsum(series.values)]))
    return RawQuoteSeries(series.instrument_id, np.asarray(timestamps), prices, bar)


def synthetic_panel(
    n_returns: int,
    couplings=(0.8, 0.5, 0.2),
    seed: int = 0,
    df: float | None = 3.0,
    start: str = "2012-01-02",
    bar: int = 300,
    names=None,
) -> list[RawQuoteSeries]:
    """Base instrument plus one coupled partner per entry of ``couplings``."""
    rng = rng_for(seed)
    ts = calendar_timestamps(n_returns + 1, start, bar)
    scale = 1e-3
    base = _body(n_returns, rng, df)
    names = list(names or ["BASE"] + [f"Y{i + 1}" for i in range(len(couplings))])
    out = [to_quotes(ReturnSeries(names[0], scale * base), ts, bar=bar)]
    for name, c in zip(names[1:], couplings):
        _, y = coupled(n_returns, c, rng, decouple_tails=True, df=df, x=base)
        out.append(to_quotes(ReturnSeries(name, scale * y), ts, bar=bar))
    return out
