"""Acceptance criteria, each run at its stated tolerance.

Every test prints one PASS/FAIL line; the lines are repeated in the
terminal summary.
"""

import os
import time

import numpy as np
import pytest

from mfxcorr import synth
from mfxcorr.cli import main
from mfxcorr.detrend import default_scale_grid
from mfxcorr.ingest import ReturnSeries
from mfxcorr.mfcca import cs_bound_check, cross_surface, mfcca, pair_box_stats, single_surfaces
from mfxcorr.mfdfa import QGrid, mfdfa
from mfxcorr.report import write_csv, run_metadata
from mfxcorr.rhoq import lag_scan, rho, rho_from_stats, rho_with_band, summarize
from mfxcorr.surrogate import shuffle
from mfxcorr.synth import cascade, cascade_alpha, cascade_hurst, coupled, fgn, pareto, rng_for
from mfxcorr.tails import tail_exponent

Q = QGrid.default()
CQ = QGrid.arange(-4, 4, 0.2)
SEEDS = range(10)


@pytest.fixture(scope="module")
def mu():
    return cascade(16, 0.7)


def test_01_monofractal_oracle(criterion):
    parts, ok, slowest = [], True, 0.0
    for H in (0.3, 0.5, 0.7):
        dev, dev2 = [], []
        for seed in SEEDS:
            x = fgn(2**17, H, rng_for(seed))
            t0 = time.perf_counter()
            h = mfdfa(x, Q, m=2).fit.exponent
            slowest = max(slowest, time.perf_counter() - t0)
            dev.append(np.max(np.abs(h - H)))
            dev2.append(abs(h[Q.index(2.0)] - H))
        md, md2 = np.median(dev), np.median(dev2)
        ok &= md <= 0.05 and md2 <= 0.03
        parts.append(f"H={H} max|dh|={md:.4f} |dh(2)|={md2:.4f}")
    ok &= slowest <= 60
    criterion(1, "monofractal oracle", ok, "; ".join(parts) + f"; slowest {slowest:.2f}s")


def test_02_multifractal_oracle(criterion, mu):
    res = mfdfa(mu, Q)
    qs = Q.as_array()
    dh = np.max(np.abs(res.fit.exponent - cascade_hurst(qs, 0.7)))
    width = float(cascade_alpha(-4.0, 0.7) - cascade_alpha(4.0, 0.7))
    dw = abs(res.spectrum.delta_alpha - width)
    f0 = res.spectrum.f_values[Q.index(0.0)]
    ok = dh <= 0.05 and dw <= 0.08 and abs(f0 - 1) <= 0.02
    criterion(
        2,
        "multifractal oracle",
        ok,
        f"max|dh|={dh:.4f}, width {res.spectrum.delta_alpha:.4f} vs {width:.4f}, f(alpha0)={f0:.4f}",
    )


def test_03_shuffle_collapse(criterion, mu):
    base = mfdfa(mu, Q).spectrum.delta_alpha
    shuffled = [mfdfa(shuffle(mu, seed), Q).spectrum.delta_alpha for seed in SEEDS]
    med = float(np.median(shuffled))
    criterion(
        3,
        "shuffle collapse",
        med < 0.5 * base,
        f"shuffled median width {med:.4f} vs 0.5 x {base:.4f} = {0.5 * base:.4f}",
    )


def test_04_identity_cross(criterion, mu):
    res = mfcca(mu, mu, CQ)
    rep = res.report
    sel = np.isfinite(rep.lam)
    dl = np.max(np.abs(rep.lam[sel] - res.fit_x.exponent[sel]))
    dd = np.max(np.abs(rep.d_xy[sel]))
    qs = CQ.as_array()
    pos = qs >= 0
    bound = np.sqrt(res.fxx.moments * res.fyy.moments)
    nz = pos & (qs != 0)
    tight = np.max(np.abs(np.abs(res.cross.moments[nz]) - bound[nz]) / bound[nz])
    viol = cs_bound_check(res.cross, res.fxx, res.fyy)
    ok = sel.sum() > 0 and dl <= 0.02 and dd <= 0.02 and tight <= 1e-12 and not viol
    criterion(
        4,
        "identity cross-analysis",
        ok,
        f"{sel.sum()} reported q from {rep.q_min}, max|lambda-h|={dl:.2e}, max|d_xy|={dd:.2e}, "
        f"bound gap {tight:.1e}",
    )


def test_05_sign_contract(criterion, mu):
    g = rng_for(1).standard_normal(2**15)
    worst, rho_dev, cells = 0, 0.0, 0
    for x in (mu, g):
        st_pos = pair_box_stats(x, x, default_scale_grid(x.size))
        st_neg = pair_box_stats(x, -x, default_scale_grid(x.size))
        a = cross_surface(st_pos, CQ).values
        b = cross_surface(st_neg, CQ).values
        nz = CQ.as_array() != 0
        worst += int(np.sum(b[nz] != -a[nz]))
        r = rho_from_stats(st_neg, QGrid.arange(0.2, 4, 0.2))
        d = np.isfinite(r)
        cells += int(d.sum())
        rho_dev = max(rho_dev, float(np.max(np.abs(r[d] + 1))))
    ok = worst == 0 and rho_dev == 0.0 and cells > 0
    criterion(5, "sign contract", ok, f"{worst} unequal F cells, max|rho+1|={rho_dev:.1e} over {cells} cells")


def _instance(rng):
    n = int(rng.integers(200, 2001))
    kind = rng.choice(["fgn", "cascade", "pareto", "coupled", "regime", "same", "negated", "gauss"])
    if kind == "cascade":
        depth = int(np.floor(np.log2(n)))
        x = cascade(depth, rng.uniform(0.55, 0.9), rng)
        y = cascade(depth, rng.uniform(0.55, 0.9), rng)
    elif kind == "fgn":
        x, y = fgn(n, rng.uniform(0.1, 0.9), rng), fgn(n, rng.uniform(0.1, 0.9), rng)
    elif kind == "pareto":
        x, y = pareto(n, rng.uniform(1.5, 4), rng), pareto(n, rng.uniform(1.5, 4), rng)
    elif kind == "coupled":
        x, y = coupled(n, rng.uniform(-1, 1) % 1, rng, bool(rng.integers(2)), df=rng.choice([None, 3.0]))
    elif kind == "regime":
        x, y = synth.regime_switch(n, rng.uniform(0, 1), int(rng.integers(n)), rng)
    else:
        x = rng.standard_normal(n) * np.exp(rng.standard_normal(n))
        y = x if kind == "same" else -x if kind == "negated" else rng.standard_normal(n)
    return x, y


def test_06_bound_invariants(criterion):
    rng = rng_for(20240601)
    rq = QGrid.arange(0.2, 4, 0.2)
    rho_viol = cs_viol = 0
    n_cells = 0
    for _ in range(1000):
        x, y = _instance(rng)
        st = pair_box_stats(x, y, default_scale_grid(len(x)))
        r = rho_from_stats(st, rq)
        d = np.isfinite(r)
        n_cells += int(d.sum())
        rho_viol += int(np.sum(np.abs(r[d]) > 1 + 1e-9))
        cs = cross_surface(st, CQ)
        fxx, fyy = single_surfaces(st, CQ)
        cs_viol += len(cs_bound_check(cs, fxx, fyy))
    ok = rho_viol == 0 and cs_viol == 0
    criterion(6, "bound and range invariants", ok, f"1000 instances, {n_cells} rho cells: {rho_viol} rho and {cs_viol} bound violations")


def test_07_surrogate_band(criterion):
    rng = rng_for(7)
    x = ReturnSeries("x", rng.standard_normal(2**16))
    y = ReturnSeries("y", rng.standard_normal(2**16))
    threads = os.cpu_count()
    a = rho_with_band(x, y, n_surrogates=100, seed=42, threads=threads)
    b = rho_with_band(x, y, n_surrogates=100, seed=42, threads=1)
    inside = np.abs(a.rho - a.band.mean) <= 3 * a.band.sigma
    frac = float(inside.mean())
    same = a.band.mean.tobytes() == b.band.mean.tobytes() and a.band.sigma.tobytes() == b.band.sigma.tobytes()
    criterion(7, "surrogate band protocol", frac >= 0.95 and same, f"{100 * frac:.1f}% of cells inside 3 sigma, repeat identical={same}")


def test_08_q_ordering(criterion):
    bars = []
    for seed in SEEDS:
        x, y = coupled(2**16, 0.7, rng_for(seed), decouple_tails=True)
        bars.append(summarize(rho(x, y)).rho_bar)
    med = np.median(np.array(bars), axis=0)
    ok = bool(np.all(np.diff(med) < 0))
    criterion(8, "q-ordering mechanism", ok, "median rho_bar(q=1..4) = " + ", ".join(f"{v:.3f}" for v in med))


def test_09_lead_lag(criterion):
    hits = 0
    for seed in SEEDS:
        rng = rng_for(seed)
        v = rng.standard_normal(2**15 + 1)
        x = v[1:]
        y = v[:-1] + 0.2 * rng.standard_normal(2**15)  # y[t] = x[t - 1] + noise
        profs = lag_scan(ReturnSeries("x", x), ReturnSeries("y", y), (-1, 0, 1))
        small = profs[0].scales.as_array() <= 20
        stack = np.stack([p.rho[:, small] for p in profs])  # lag, q, s
        rank_ok = np.all(np.argmax(stack, axis=0) == 2) and np.all(np.argmin(stack, axis=0) == 0)
        hits += int(rank_ok)
    criterion(9, "lead-lag detection", hits == 10, f"{hits}/10 seeds rank +1 highest and -1 lowest for s <= 20")


def test_10_tail_oracle(criterion):
    parts, ok = [], True
    for gamma in (2.2, 3.0):
        est = {"ols": [], "hill": []}
        for seed in range(20):
            x = pareto(400_000, gamma, rng_for(seed))
            for m in est:
                est[m].append(tail_exponent(x, "positive", 0.01, m).gamma)
        for m, v in est.items():
            med = float(np.median(v))
            ok &= abs(med - gamma) <= 0.15
            parts.append(f"gamma={gamma} {m}={med:.3f}")
    criterion(10, "tail oracle", ok, ", ".join(parts))


@pytest.mark.slow
def test_11_panel_reproducibility(criterion, tmp_path):
    data = tmp_path / "data"
    data.mkdir()
    quotes = synth.synthetic_panel(synth.bars_between("2012-01-02", "2018-01-01") - 1, seed=2024)
    meta = run_metadata("synth", {"seed": 2024})
    args = []
    for q in quotes:
        write_csv(data / f"{q.instrument_id}.csv", meta, ["timestamp", "price"], zip(q.timestamps, q.prices))
        args += ["--input", f"{q.instrument_id}={data / (q.instrument_id + '.csv')}"]
    runs, times = {}, []
    for tag, threads in (("a", 1), ("b", 1), ("c", 0)):
        out = tmp_path / tag
        t0 = time.perf_counter()
        code = main(["panel", *args, "--base", "BASE", "--seed", "5", "--threads", str(threads), "--out", str(out)])
        times.append(time.perf_counter() - t0)
        assert code == 0
        runs[tag] = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
    identical = runs["a"] == runs["b"] == runs["c"] and len(runs["a"]) == 3
    summary = runs["a"]["panel_rho_summary.csv"].decode().splitlines()[2:]
    windows = {ln.split(",")[1] for ln in summary}
    ok = identical and max(times) <= 600 and len(windows) == 12
    criterion(
        11,
        "end-to-end reproducibility",
        ok,
        f"{len(windows)} windows, runs {', '.join(f'{t:.0f}s' for t in times)} "
        f"(threads 1, 1, {os.cpu_count()}), byte-identical={identical}",
    )
