"""Analysis configuration: defaults, INI-style file loading and validation."""

from __future__ import annotations

import configparser
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from mfxcorr.detrend import MAX_ORDER, ScaleGrid, default_scale_grid
from mfxcorr.mfdfa import QGrid

OUT_ENV = "MFXCORR_OUT"


class ConfigError(ValueError):
    pass


@dataclass
class AnalysisConfig:
    inputs: list[tuple[str, str]] = field(default_factory=list)
    time_col: str = "timestamp"
    price_col: str = "price"
    returns_col: str | None = None
    bar_interval: int = 300
    drop_gap_returns: bool = False

    q_min: float = -4.0
    q_max: float = 4.0
    q_step: float = 0.5
    cross_q_min: float = -4.0
    cross_q_max: float = 4.0
    cross_q_step: float = 0.2
    rho_qs: tuple[float, ...] = (1.0, 2.0, 3.0, 4.0)
    s_min: int = 10
    s_max: int = 3750
    s_points: int = 25
    poly_order: int = 2
    fit_s_min: float | None = None
    fit_s_max: float | None = None
    quality_threshold: float = 0.95
    positivity_threshold: float = 0.9

    windows: str = "half-year"
    min_window: int | None = None
    lags: tuple[int, ...] = (-1, 0, 1)
    surrogates: int = 100
    surrogate_mode: str = "both"
    seed: int = 0

    tail_quantile: float = 0.01

    pair: bool = False
    base: str | None = None
    out: str = field(default_factory=lambda: os.environ.get(OUT_ENV, "mfxcorr_out"))
    threads: int = 1

    # keys left out of output metadata so reruns into other directories or
    # with other worker counts stay byte-identical
    UNRECORDED = ("out", "threads")

    def metadata(self) -> dict:
        d = asdict(self)
        for k in self.UNRECORDED:
            d.pop(k, None)
        d["inputs"] = [list(p) for p in self.inputs]
        return d

    def qgrid(self) -> QGrid:
        return QGrid.arange(self.q_min, self.q_max, self.q_step)

    def cross_qgrid(self) -> QGrid:
        return QGrid.arange(self.cross_q_min, self.cross_q_max, self.cross_q_step)

    def rho_qgrid(self) -> QGrid:
        return QGrid(tuple(self.rho_qs))

    def scale_grid(self, T: int) -> ScaleGrid:
        return default_scale_grid(T, self.s_min, self.s_max, self.s_points)

    def fit_range(self):
        if self.fit_s_min is None and self.fit_s_max is None:
            return None
        return (self.fit_s_min or 0.0, self.fit_s_max or float("inf"))

    def window_scheme(self):
        w = str(self.windows)
        return w if w in ("half-year", "halfyear", "calendar") else int(w)


def _coerce(name: str, raw, current):
    tp = {f.name: f.type for f in fields(AnalysisConfig)}[name]
    text = str(raw).strip()
    if name == "inputs":
        if isinstance(raw, list) and all(isinstance(i, tuple) for i in raw):
            return raw
        return parse_inputs(raw if isinstance(raw, list) else text.split(","))
    if text.lower() in ("none", "") and "None" in str(tp):
        return None
    if "tuple[int" in str(tp):
        return tuple(int(v) for v in text.split(",") if v.strip())
    if "tuple[float" in str(tp):
        return tuple(float(v) for v in text.split(",") if v.strip())
    if "bool" in str(tp):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {text!r}")
    try:
        if str(tp).startswith("int"):
            return int(text)
        if str(tp).startswith("float"):
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from exc
    return text


def parse_inputs(items) -> list[tuple[str, str]]:
    out = []
    for item in items:
        item = str(item).strip()
        if not item:
            continue
        if "=" in item:
            name, path = item.split("=", 1)
        else:
            name, path = Path(item).stem, item
        out.append((name.strip(), path.strip()))
    return out


def load_file(path) -> dict:
    """Flat key/value pairs from an INI file; section names are ignored."""
    cp = configparser.ConfigParser()
    if not cp.read(path, encoding="utf-8"):
        raise ConfigError(f"cannot read config file {path}")
    known = {f.name for f in fields(AnalysisConfig)}
    out = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            key = key.replace("-", "_")
            if key not in known:
                raise ConfigError(f"[{section}] unknown key {key!r}")
            out[key] = value
    return out


def build(file_values: dict | None = None, overrides: dict | None = None) -> AnalysisConfig:
    cfg = AnalysisConfig()
    for source in (file_values or {}, overrides or {}):
        for k, v in source.items():
            if v is None:
                continue
            setattr(cfg, k, _coerce(k, v, getattr(cfg, k)))
    return cfg


def validate(cfg: AnalysisConfig) -> None:
    """Check every parameter against the analysis preconditions before any work."""
    m = cfg.poly_order
    if not 1 <= m <= MAX_ORDER:
        raise ConfigError(f"poly_order must be in 1..{MAX_ORDER}, got {m}")
    if cfg.s_min < m + 2:
        raise ConfigError(f"s_min={cfg.s_min} must be at least poly_order + 2 = {m + 2}")
    if cfg.s_max <= cfg.s_min:
        raise ConfigError("s_max must exceed s_min")
    if cfg.s_points < 3:
        raise ConfigError("s_points must be at least 3")
    for lo, hi, step, label in (
        (cfg.q_min, cfg.q_max, cfg.q_step, "q"),
        (cfg.cross_q_min, cfg.cross_q_max, cfg.cross_q_step, "cross_q"),
    ):
        if not step > 0 or not hi > lo:
            raise ConfigError(f"{label} grid needs {label}_max > {label}_min and a positive step")
        if round((hi - lo) / step) < 2:
            raise ConfigError(f"{label} grid needs at least 3 points")
    if not cfg.rho_qs or min(cfg.rho_qs) <= 0:
        raise ConfigError("rho_qs must be positive")
    if not 0 < cfg.tail_quantile < 0.5:
        raise ConfigError("tail_quantile must lie in (0, 0.5)")
    if cfg.surrogates == 1 or cfg.surrogates < 0:
        raise ConfigError("surrogates must be 0 (off) or at least 2")
    if cfg.surrogate_mode not in ("both", "one"):
        raise ConfigError("surrogate_mode must be 'both' or 'one'")
    if not 0 <= cfg.quality_threshold <= 1 or not 0 < cfg.positivity_threshold <= 1:
        raise ConfigError("quality and positivity thresholds must lie in [0, 1]")
    if cfg.seed < 0 or cfg.seed >= 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if cfg.threads < 0:
        raise ConfigError("threads must be non-negative (0 = all cores)")
    try:
        cfg.window_scheme()
    except ValueError:
        raise ConfigError(f"windows must be 'half-year' or an integer, got {cfg.windows!r}") from None
    for name, path in cfg.inputs:
        if not Path(path).is_file():
            raise ConfigError(f"input {name}: file not found: {path}")
