"""Command-line front end: ``mfxcorr {mfdfa,pair,tails,panel,synth}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from mfxcorr import config as cfgmod
from mfxcorr import synth
from mfxcorr.config import AnalysisConfig, ConfigError
from mfxcorr.ingest import (
    AlignedPanel,
    DataError,
    ReturnSeries,
    align,
    align_returns,
    load_csv,
    load_returns_csv,
    log_returns,
    normalize,
)
from mfxcorr.mfcca import cs_bound_check, mfcca
from mfxcorr.mfdfa import mfdfa, unreliable_qs
from mfxcorr.report import run_metadata, write_csv, write_json
from mfxcorr.rhoq import lag_scan, rho_with_band, summarize, windowed_rho
from mfxcorr.tails import SIDES, ccdf, tail_exponent

log = logging.getLogger("mfxcorr")

SENSITIVITY_QUANTILES = (0.005, 0.01, 0.02)


# ---------------------------------------------------------------- loading


def _load_one(cfg: AnalysisConfig, name: str, path: str):
    if cfg.returns_col:
        return load_returns_csv(path, cfg.time_col, cfg.returns_col, name)
    return load_csv(path, cfg.time_col, cfg.price_col, name, cfg.bar_interval)


def load_series(cfg: AnalysisConfig) -> list[ReturnSeries]:
    out = []
    for name, path in cfg.inputs:
        raw = _load_one(cfg, name, path)
        r = raw if isinstance(raw, ReturnSeries) else log_returns(raw)
        out.append(normalize(r))
    return out


def load_panel(cfg: AnalysisConfig) -> AlignedPanel:
    raws = [_load_one(cfg, n, p) for n, p in cfg.inputs]
    if cfg.returns_col:
        panel = align_returns(raws)
    else:
        panel = align(raws, drop_gap_returns=cfg.drop_gap_returns)
    return AlignedPanel(panel.timestamps, tuple(normalize(c) for c in panel.columns), panel.quote_timestamps)


# ---------------------------------------------------------------- commands


def _meta(cfg: AnalysisConfig, command: str, **extra) -> dict:
    meta = run_metadata(command, cfg.metadata())
    meta.update(extra)
    return meta


def _min_gamma(series: ReturnSeries, q: float) -> float | None:
    gammas = []
    for side in SIDES:
        try:
            gammas.append(tail_exponent(series, side, q, "ols").gamma)
        except DataError:
            pass
    return min(gammas) if gammas else None


def run_mfdfa_one(cfg: AnalysisConfig, series: ReturnSeries, out: Path) -> list[Path]:
    name = series.instrument_id
    scales = cfg.scale_grid(len(series))
    res = mfdfa(series, cfg.qgrid(), scales, cfg.poly_order, cfg.fit_range(), cfg.threads)
    meta = _meta(cfg, "mfdfa", instrument=name, n=len(series))
    qs, s = res.surface.qgrid.as_array(), scales.scales
    files = [
        write_csv(
            out / f"{name}_mfdfa_fluct.csv",
            meta,
            ["q", "s", "F", "excluded", "flagged"],
            (
                (qs[i], s[j], res.surface.values[i, j], res.surface.excluded[i, j], res.surface.flagged[i, j])
                for i in range(len(qs))
                for j in range(len(s))
            ),
        )
    ]
    gamma = _min_gamma(series, cfg.tail_quantile)
    files.append(
        write_json(
            out / f"{name}_mfdfa_hurst.json",
            meta,
            {
                "q": qs,
                "h": res.fit.exponent,
                "intercept": res.fit.intercept,
                "r_squared": res.fit.r_squared,
                "n_points": res.fit.n_points,
                "fit_range": res.fit.fit_range,
                "tau": res.tau,
                "tail_gamma_min": gamma,
                "unreliable_q": qs[unreliable_qs(qs, gamma)],
            },
        )
    )
    sp = res.spectrum
    if sp is None:
        raise DataError(f"{name}: h(q) fit failed at some q; no singularity spectrum")
    files.append(
        write_json(
            out / f"{name}_mfdfa_spectrum.json",
            meta,
            {
                "alpha_0": sp.alpha_0,
                "alpha_min": sp.alpha_min,
                "alpha_max": sp.alpha_max,
                "delta_alpha": sp.delta_alpha,
                "delta_alpha_L": sp.delta_alpha_L,
                "delta_alpha_R": sp.delta_alpha_R,
                "asymmetry": sp.asymmetry,
                "degenerate": sp.degenerate,
                "alpha_endpoints": "sampled alpha range on the q-grid",
                "warnings": list(sp.warnings),
            },
        )
    )
    files.append(
        write_csv(
            out / f"{name}_mfdfa_spectrum.csv",
            meta,
            ["q", "alpha", "f_alpha"],
            zip(sp.qs, sp.alphas, sp.f_values),
        )
    )
    return files


def run_pair(cfg: AnalysisConfig, x: ReturnSeries, y: ReturnSeries, out: Path) -> list[Path]:
    tag = f"{x.instrument_id}_{y.instrument_id}"
    scales = cfg.scale_grid(len(x) - max(abs(l) for l in cfg.lags))
    meta = _meta(cfg, "pair", pair=[x.instrument_id, y.instrument_id], n=len(x))
    res = mfcca(
        x,
        y,
        cfg.cross_qgrid(),
        scales,
        cfg.poly_order,
        cfg.fit_range(),
        cfg.quality_threshold,
        cfg.positivity_threshold,
        cfg.threads,
    )
    cross, rep = res.cross, res.report
    qs, s = cross.qgrid.as_array(), scales.scales
    files = [
        write_csv(
            out / f"{tag}_mfcca_cross.csv",
            meta,
            ["q", "s", "F_signed", "valid"],
            ((qs[i], s[j], cross.values[i, j], cross.valid[i, j]) for i in range(len(qs)) for j in range(len(s))),
        )
    ]
    viol = cs_bound_check(cross, res.fxx, res.fyy)
    files.append(
        write_json(
            out / f"{tag}_mfcca.json",
            meta,
            {
                "q": qs,
                "lambda": rep.lam,
                "lambda_r_squared": rep.lam_r2,
                "positive_fraction": rep.positive_fraction,
                "h_x": rep.h_x,
                "h_y": rep.h_y,
                "h_xy": rep.h_xy,
                "d_xy": rep.d_xy,
                "q_min": rep.q_min,
                "quality_threshold": rep.quality_threshold,
                "positivity_threshold": rep.positivity_threshold,
                "fit_range": rep.fit_range,
                "cs_violations": len(viol),
            },
        )
    )

    rq = cfg.rho_qgrid()
    profiles = lag_scan(x, y, cfg.lags, rq, scales, cfg.poly_order, cfg.threads)
    band = None
    if cfg.surrogates >= 2:
        band = rho_with_band(
            x, y, rq, scales, cfg.poly_order, cfg.surrogates, cfg.seed, cfg.surrogate_mode, cfg.threads
        ).band
    rows = []
    for p in profiles:
        for i, q in enumerate(rq.qs):
            for j, sc in enumerate(s):
                bm = bs = None
                if band is not None and p.lag == 0:
                    bm, bs = band.mean[i, j], band.sigma[i, j]
                rows.append(("full", p.lag, q, sc, p.rho[i, j], bm, bs))
    files.append(
        write_csv(
            out / f"{tag}_rho.csv",
            meta,
            ["window", "lag", "q", "s", "rho", "band_mean", "band_sigma"],
            rows,
        )
    )
    summaries = [summarize(p) for p in profiles]
    files.append(
        write_json(
            out / f"{tag}_rho.json",
            meta,
            {
                "q": list(rq.qs),
                "summaries": [
                    {"lag": sm.lag, "rho_bar": sm.rho_bar, "n_undefined": sm.n_undefined} for sm in summaries
                ],
                "surrogates": None
                if band is None
                else {"n": band.n_realizations, "seed": band.seed, "mode": band.mode, "generator": band.generator},
            },
        )
    )
    return files


def cmd_mfdfa(cfg: AnalysisConfig) -> list[Path]:
    _require(cfg, 1, "mfdfa")
    out = _outdir(cfg)
    series = load_series(cfg)
    files = []
    for s in series:
        files += run_mfdfa_one(cfg, s, out)
    if cfg.pair:
        _require(cfg, 2, "mfdfa --pair")
        panel = load_panel(cfg)
        files += run_pair(cfg, panel.columns[0], panel.columns[1], out)
    return files


def cmd_pair(cfg: AnalysisConfig) -> list[Path]:
    _require(cfg, 2, "pair")
    out = _outdir(cfg)
    panel = load_panel(cfg)
    return run_pair(cfg, panel.columns[0], panel.columns[1], out)


def cmd_tails(cfg: AnalysisConfig) -> list[Path]:
    _require(cfg, 1, "tails")
    out = _outdir(cfg)
    files = []
    for s in load_series(cfg):
        name = s.instrument_id
        meta = _meta(cfg, "tails", instrument=name, n=len(s))
        rows, fits = [], {}
        for side in SIDES:
            try:
                r, P = ccdf(s, side)
            except DataError as exc:
                fits[side] = {"flag": str(exc)}
                continue
            rows += [(side, a, b) for a, b in zip(r, P)]
            side_fits = {}
            for q in sorted({cfg.tail_quantile, *SENSITIVITY_QUANTILES}):
                for method in ("ols", "hill"):
                    key = f"{method}@{q}"
                    try:
                        f = tail_exponent(s, side, q, method)
                        side_fits[key] = {
                            "gamma": f.gamma,
                            "gamma_stderr": f.gamma_stderr,
                            "n_tail": f.n_tail,
                            "r_squared": f.r_squared,
                            "threshold": f.threshold,
                        }
                    except DataError as exc:
                        side_fits[key] = {"flag": str(exc)}
            fits[side] = {"fit_quantile": cfg.tail_quantile, "fits": side_fits}
        files.append(write_csv(out / f"{name}_tails_ccdf.csv", meta, ["side", "r", "ccdf"], rows))
        files.append(write_json(out / f"{name}_tails.json", meta, {"tails": fits}))
    return files


def cmd_panel(cfg: AnalysisConfig) -> list[Path]:
    _require(cfg, 2, "panel")
    out = _outdir(cfg)
    panel = load_panel(cfg)
    names = panel.instruments
    base = cfg.base or names[0]
    if base not in names:
        raise ConfigError(f"base instrument {base!r} not among inputs {names}")
    scales = cfg.scale_grid(len(panel.timestamps))
    meta = _meta(cfg, "panel", base=base, instruments=names, n=len(panel.timestamps))
    detail, summary, doc = [], [], {}
    for k, other in enumerate(n for n in names if n != base):
        results = windowed_rho(
            panel,
            (base, other),
            cfg.window_scheme(),
            cfg.rho_qgrid(),
            scales,
            cfg.poly_order,
            lags=(0,) + tuple(l for l in cfg.lags if l != 0),
            min_length=cfg.min_window,
            n_surrogates=cfg.surrogates,
            seed=cfg.seed + 7919 * k,
            threads=cfg.threads,
        )
        pair = f"{base}_{other}"
        doc[pair] = []
        for wr in results:
            p, sm = wr.profile, wr.summary
            for i, q in enumerate(p.qgrid.qs):
                for j, sc in enumerate(p.scales.scales):
                    bm = bs = None
                    if p.band is not None:
                        bm, bs = p.band.mean[i, j], p.band.sigma[i, j]
                    detail.append((pair, p.window_label, p.lag, q, sc, p.rho[i, j], bm, bs))
                summary.append(
                    (pair, sm.window_label, sm.lag, q, sm.rho_bar[i], sm.n_defined[i], "|".join(sm.flags))
                )
            doc[pair].append(
                {"window": sm.window_label, "lag": sm.lag, "rho_bar": sm.rho_bar, "flags": list(sm.flags)}
            )
    return [
        write_csv(
            out / "panel_rho_windows.csv",
            meta,
            ["pair", "window", "lag", "q", "s", "rho", "band_mean", "band_sigma"],
            detail,
        ),
        write_csv(
            out / "panel_rho_summary.csv",
            meta,
            ["pair", "window", "lag", "q", "rho_bar", "n_defined", "flags"],
            summary,
        ),
        write_json(out / "panel_rho_summary.json", meta, {"q": list(cfg.rho_qs), "pairs": doc}),
    ]


def cmd_synth(args, cfg: AnalysisConfig) -> list[Path]:
    out = _outdir(cfg)
    params = dict(_parse_param(p) for p in args.param or [])
    meta = _meta(cfg, "synth", kind=args.kind, length=args.length, params=params)
    if args.kind == "panel":
        n = args.length or synth.bars_between(args.start, args.end, cfg.bar_interval) - 1
        couplings = tuple(float(c) for c in args.couplings.split(","))
        quotes = synth.synthetic_panel(
            n, couplings, cfg.seed, params.get("df", 3.0), args.start, cfg.bar_interval
        )
        files = []
        for q in quotes:
            r = np.concatenate([[np.nan], np.diff(np.log(q.prices))])
            files.append(
                write_csv(
                    out / f"{q.instrument_id}.csv",
                    meta,
                    ["timestamp", "price", "return"],
                    zip(q.timestamps, q.prices, r),
                )
            )
        return files
    length = args.length or 2**16
    spec = synth.GeneratorSpec(args.kind, length, cfg.seed, params)
    gen = synth.generate(spec)
    series = gen if isinstance(gen, tuple) else (gen,)
    files = []
    for s in series:
        ts = synth.calendar_timestamps(len(s) + 1, args.start, cfg.bar_interval)
        name = args.name or args.kind
        fname = f"{name}_{s.instrument_id}.csv" if len(series) > 1 else f"{name}.csv"
        vals = s.values
        prices = 100.0 * np.exp(np.concatenate([[0.0], np.cumsum(vals * args.return_scale)]))
        r = np.concatenate([[np.nan], vals])
        files.append(write_csv(out / fname, meta, ["timestamp", "price", "return"], zip(ts, prices, r)))
    return files


# ---------------------------------------------------------------- plumbing


def _require(cfg: AnalysisConfig, n: int, what: str) -> None:
    if len(cfg.inputs) < n:
        raise ConfigError(f"{what} needs at least {n} input instrument(s), got {len(cfg.inputs)}")


def _outdir(cfg: AnalysisConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_param(text: str):
    key, _, value = text.partition("=")
    value = value.strip()
    if value.lower() in ("true", "false"):
        return key.strip(), value.lower() == "true"
    try:
        return key.strip(), int(value)
    except ValueError:
        pass
    try:
        return key.strip(), float(value)
    except ValueError:
        return key.strip(), value


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("common")
    g.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    g.add_argument("--config", help="INI-style configuration file")
    g.add_argument("--input", action="append", dest="inputs", metavar="NAME=PATH", help="instrument CSV (repeatable)")
    g.add_argument("--out", help=f"output directory (default ${cfgmod.OUT_ENV} or ./mfxcorr_out)")
    g.add_argument("--seed", type=int)
    g.add_argument("--threads", type=int, help="worker cap; 0 uses every core")
    g.add_argument("--time-col", dest="time_col")
    g.add_argument("--price-col", dest="price_col")
    g.add_argument("--returns-col", dest="returns_col", help="read returns from this column instead of prices")
    g.add_argument("--bar-interval", dest="bar_interval", type=int)
    g.add_argument("--drop-gap-returns", dest="drop_gap_returns", action="store_const", const="true")
    g.add_argument("--q-min", dest="q_min", type=float)
    g.add_argument("--q-max", dest="q_max", type=float)
    g.add_argument("--q-step", dest="q_step", type=float)
    g.add_argument("--s-min", dest="s_min", type=int)
    g.add_argument("--s-max", dest="s_max", type=int)
    g.add_argument("--s-points", dest="s_points", type=int)
    g.add_argument("--poly-order", dest="poly_order", type=int)
    g.add_argument("--windows", help="half-year or a window count K")
    g.add_argument("--lags", help="comma-separated signed lags, e.g. -1,0,1")
    g.add_argument("--surrogates", type=int, help="shuffled realizations (0 disables the band)")
    g.add_argument("--tail-quantile", dest="tail_quantile", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfxcorr", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mfdfa", help="fluctuation functions, h(q), spectrum per instrument")
    _common(p)
    p.add_argument("--pair", action="store_const", const="true", help="also run pair analysis on the first two")

    p = sub.add_parser("pair", help="MFCCA, rho_q, surrogate band and lag scan for two instruments")
    _common(p)

    p = sub.add_parser("tails", help="tail distributions and exponents")
    _common(p)

    p = sub.add_parser("panel", help="windowed rho_q of every instrument against a base instrument")
    _common(p)
    p.add_argument("--base")

    p = sub.add_parser("synth", help="write synthetic series as CSV")
    _common(p)
    p.add_argument("--kind", required=True, choices=synth.KINDS + ("panel",))
    p.add_argument("--length", type=int, help="number of returns")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="generator parameter (repeatable)")
    p.add_argument("--name")
    p.add_argument("--start", default="2012-01-02", help="first bar date (UTC)")
    p.add_argument("--end", default="2018-01-01", help="panel end date (UTC), used when --length is absent")
    p.add_argument("--couplings", default="0.8,0.5,0.2", help="panel partner couplings to the base")
    p.add_argument("--return-scale", dest="return_scale", type=float, default=1e-3)
    return parser


OVERRIDABLE = (
    "inputs", "out", "seed", "threads", "time_col", "price_col", "returns_col", "bar_interval",
    "drop_gap_returns", "q_min", "q_max", "q_step", "s_min", "s_max", "s_points", "poly_order",
    "windows", "lags", "surrogates", "tail_quantile", "pair", "base",
)  # fmt: skip


def config_from_args(args) -> AnalysisConfig:
    file_values = cfgmod.load_file(args.config) if getattr(args, "config", None) else {}
    overrides = {k: getattr(args, k, None) for k in OVERRIDABLE}
    if overrides["inputs"] is not None:
        overrides["inputs"] = cfgmod.parse_inputs(overrides["inputs"])
    cfg = cfgmod.build(file_values, overrides)
    cfgmod.validate(cfg)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"mfxcorr: configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "synth":
            files = cmd_synth(args, cfg)
        else:
            files = {"mfdfa": cmd_mfdfa, "pair": cmd_pair, "tails": cmd_tails, "panel": cmd_panel}[args.command](cfg)
    except ConfigError as exc:
        print(f"mfxcorr: configuration error: {exc}", file=sys.stderr)
        return 2
    except (DataError, ValueError) as exc:
        print(f"mfxcorr: {exc}", file=sys.stderr)
        return 1
    for f in files:
        log.info("wrote %s", f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
