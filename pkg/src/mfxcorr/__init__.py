"""Multifractal detrended (cross-)correlation analysis of return series."""

__version__ = "0.1.0"

from mfxcorr.ingest import (
    AlignedPanel,
    RawQuoteSeries,
    ReturnSeries,
    align,
    load_csv,
    log_returns,
    normalize,
    shift_pair,
    split_windows,
)
from mfxcorr.detrend import ScaleGrid, default_scale_grid, layout, profile
from mfxcorr.mfdfa import (
    FluctuationSurface,
    QGrid,
    ScalingFit,
    SingularitySpectrum,
    fit_scaling,
    fluctuation_single,
    spectrum,
    tau,
)
from mfxcorr.mfcca import CrossSurface, cross_fluctuation, cs_bound_check, fit_lambda
from mfxcorr.rhoq import RhoProfile, lag_scan, rho, rho_with_band, windowed_rho
from mfxcorr.tails import TailFit, ccdf, tail_exponent

__all__ = [
    "AlignedPanel",
    "CrossSurface",
    "FluctuationSurface",
    "QGrid",
    "RawQuoteSeries",
    "ReturnSeries",
    "RhoProfile",
    "ScaleGrid",
    "ScalingFit",
    "SingularitySpectrum",
    "TailFit",
    "align",
    "ccdf",
    "cross_fluctuation",
    "cs_bound_check",
    "default_scale_grid",
    "fit_lambda",
    "fit_scaling",
    "fluctuation_single",
    "lag_scan",
    "layout",
    "load_csv",
    "log_returns",
    "normalize",
    "profile",
    "rho",
    "rho_with_band",
    "shift_pair",
    "spectrum",
    "split_windows",
    "tail_exponent",
    "tau",
    "windowed_rho",
]
