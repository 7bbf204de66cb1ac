"""Shuffled surrogates and ensemble bands for significance testing."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from mfxcorr._parallel import pmap
from mfxcorr.ingest import ReturnSeries
from mfxcorr.synth import generator_identity, rng_for

MODES = ("both", "one")


@dataclass(frozen=True)
class SurrogateSpec:
    kind: str = "shuffle"
    n_realizations: int = 100
    seed: int = 0
    mode: str = "both"

    def __post_init__(self):
        if self.kind != "shuffle":
            raise ValueError("only shuffle surrogates are supported")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be at least 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


def shuffle(series, seed: int):
    """Uniform random permutation, reproducible from ``seed``."""
    rng = rng_for(seed)
    if isinstance(series, ReturnSeries):
        return replace(series, values=rng.permutation(series.values), timestamps=None)
    return rng.permutation(np.asarray(series))


def realization(x: np.ndarray, y: np.ndarray | None, seed: int, mode: str = "both"):
    """Shuffled copy of (x, y) for one realization seed.

    ``both`` permutes x and y independently; ``one`` leaves x intact.
    """
    rng = rng_for(seed)
    xs = rng.permutation(x) if mode == "both" or y is None else x
    ys = None if y is None else rng.permutation(y)
    return xs, ys


def band(
    statistic: Callable,
    x,
    y=None,
    spec: SurrogateSpec | None = None,
    threads: int | None = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise mean and sample sigma (ddof=1) of ``statistic`` over shuffles.

    Realization i uses seed ``spec.seed + i``; the reduction runs in
    realization order so the result does not depend on ``threads``.
    """
    spec = spec or SurrogateSpec()
    xv = x.values if isinstance(x, ReturnSeries) else np.asarray(x, dtype=float)
    yv = None if y is None else (y.values if isinstance(y, ReturnSeries) else np.asarray(y, dtype=float))

    def one(i):
        a, b = realization(xv, yv, spec.seed + i, spec.mode)
        return np.asarray(statistic(a) if b is None else statistic(a, b), dtype=float)

    stack = np.stack(pmap(one, range(spec.n_realizations), threads))
    mean = stack.mean(axis=0)
    if spec.n_realizations < 2:
        warnings.warn("sigma undefined for a single realization", stacklevel=2)
        return mean, np.full_like(mean, np.nan)
    return mean, stack.std(axis=0, ddof=1)


__all__ = ["SurrogateSpec", "band", "generator_identity", "realization", "shuffle"]
