import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfxcorr.ingest import (
    AlignedPanel,
    DataError,
    RawQuoteSeries,
    ReturnSeries,
    align,
    load_csv,
    log_returns,
    normalize,
    shift_pair,
    split_windows,
)
from mfxcorr.synth import calendar_timestamps


def _write(tmp_path, rows, name="q.csv"):
    p = tmp_path / name
    p.write_text("timestamp,price\n" + "\n".join(f"{t},{v}" for t, v in rows) + "\n")
    return p


def _raw(name, ts, px=None):
    ts = np.asarray(ts)
    px = np.linspace(100, 101, ts.size) if px is None else px
    return RawQuoteSeries(name, ts, px)


class TestLoadCsv:
    def test_three_rows(self, tmp_path):
        s = load_csv(_write(tmp_path, [(0, 100), (300, 101), (600, 102)]))
        assert len(s) == 3
        assert s.n_rejected == 0
        np.testing.assert_array_equal(s.prices, [100, 101, 102])

    def test_negative_price_rejected(self, tmp_path):
        s = load_csv(_write(tmp_path, [(0, 100), (300, -1), (600, 102)]))
        assert len(s) == 2
        assert s.n_rejected == 1

    def test_duplicate_timestamp_names_index(self, tmp_path):
        with pytest.raises(DataError, match="duplicate.*index 2"):
            load_csv(_write(tmp_path, [(0, 100), (300, 101), (300, 102)]))

    def test_decreasing_timestamp(self, tmp_path):
        with pytest.raises(DataError, match="decreasing"):
            load_csv(_write(tmp_path, [(0, 100), (600, 101), (300, 102)]))

    def test_datetime_strings_and_comment_line(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text('# {"note": 1}\ntime,close\n2012-01-02 00:00:00,1.5\n2012-01-02 00:05:00,1.6\n')
        s = load_csv(p, time_col="time", price_col="close", instrument_id="EUR")
        assert s.instrument_id == "EUR"
        assert s.timestamps[1] - s.timestamps[0] == 300

    def test_missing_column(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(DataError, match="header"):
            load_csv(p)


class TestLogReturns:
    def test_ln_identities(self):
        r = log_returns(_raw("a", [0, 1, 2], np.array([1, math.e, math.e])))
        np.testing.assert_allclose(r.values, [1, 0], atol=1e-15)

    def test_constant(self):
        r = log_returns(_raw("a", [0, 1, 2, 3], np.full(4, 5.0)))
        np.testing.assert_array_equal(r.values, [0, 0, 0])

    def test_ten_percent(self):
        r = log_returns(_raw("a", [0, 1], np.array([100.0, 110.0])))
        assert r.values[0] == pytest.approx(0.0953102, abs=1e-7)

    def test_timestamps_mark_interval_end(self):
        r = log_returns(_raw("a", [0, 300, 600]))
        np.testing.assert_array_equal(r.timestamps, [300, 600])


class TestNormalize:
    def test_pair(self):
        r = normalize(ReturnSeries("a", [1.0, -1.0]))
        np.testing.assert_allclose(r.values, [0.70710678, -0.70710678], atol=1e-8)
        assert r.normalized

    def test_zero_variance(self):
        with pytest.raises(DataError):
            normalize(ReturnSeries("a", [2.0, 2.0, 2.0]))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=60))
    def test_idempotent(self, vals):
        v = np.asarray(vals)
        if v.std() < 1e-6:
            return
        once = normalize(ReturnSeries("a", v))
        twice = normalize(once)
        np.testing.assert_allclose(twice.values, once.values, atol=1e-12)
        assert abs(once.values.mean()) < 1e-12
        assert once.values.std(ddof=1) == pytest.approx(1.0, abs=1e-12)


class TestAlign:
    def test_identical(self):
        p = align([_raw("a", [0, 300, 600]), _raw("b", [0, 300, 600])])
        assert len(p.timestamps) == 2
        assert p.instruments == ["a", "b"]

    def test_intersection(self):
        p = align([_raw("a", [0, 300, 600]), _raw("b", [300, 600, 900])])
        np.testing.assert_array_equal(p.quote_timestamps, [300, 600])
        assert len(p["a"]) == 1

    def test_disjoint(self):
        with pytest.raises(DataError, match="empty"):
            align([_raw("a", [0, 300]), _raw("b", [600, 900])])

    def test_gap_returns_dropped_on_request(self):
        a = _raw("a", [0, 300, 600, 900, 1200])
        b = _raw("b", [0, 300, 900, 1200])
        kept = align([a, b])
        dropped = align([a, b], drop_gap_returns=True)
        assert len(kept.timestamps) == 3
        np.testing.assert_array_equal(dropped.timestamps, [300, 1200])

    def test_panel_length_check(self):
        with pytest.raises(DataError):
            AlignedPanel(np.arange(3), (ReturnSeries("a", [1.0, 2.0]),))


class TestSplitWindows:
    def test_fixed_count_even(self):
        w = split_windows(ReturnSeries("a", np.arange(100.0)), 4)
        assert [len(x) for x in w] == [25, 25, 25, 25]

    def test_remainder_to_earlier_windows(self):
        w = split_windows(ReturnSeries("a", np.arange(10.0)), 3)
        assert [len(x) for x in w] == [4, 3, 3]
        assert [x.window_label for x in w] == ["W01", "W02", "W03"]

    def test_six_years_twelve_halves(self):
        ts = calendar_timestamps(6 * 365 * 288 * 5 // 7, "2012-01-02", 300)
        assert ts[-1] < 1514764800  # before 2018
        w = split_windows(ReturnSeries("a", np.zeros(ts.size), timestamps=ts), "half-year")
        assert len(w) == 12
        assert w[0].window_label == "2012H1"
        assert w[-1].window_label == "2017H2"

    def test_short_window_flag(self):
        with pytest.warns(UserWarning, match="below"):
            w = split_windows(ReturnSeries("a", np.arange(10.0)), 2, min_length=6)
        assert all("short" in x.flags for x in w)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 500), st.integers(1, 20))
    def test_disjoint_exhaustive(self, n, k):
        if k > n:
            return
        v = np.arange(float(n))
        w = split_windows(ReturnSeries("a", v), k)
        np.testing.assert_array_equal(np.concatenate([x.values for x in w]), v)
        sizes = [len(x) for x in w]
        assert max(sizes) - min(sizes) <= 1
        assert sizes == sorted(sizes, reverse=True)


class TestShiftPair:
    def test_zero(self):
        x = ReturnSeries("x", np.arange(5.0))
        a, b = shift_pair(x, x, 0)
        assert len(a) == len(b) == 5

    def test_plus_one(self):
        x = ReturnSeries("x", np.arange(5.0))
        y = ReturnSeries("y", 10 + np.arange(5.0))
        a, b = shift_pair(x, y, 1)
        np.testing.assert_array_equal(a.values, [0, 1, 2, 3])
        np.testing.assert_array_equal(b.values, [11, 12, 13, 14])

    def test_delayed_copy_becomes_synchronous(self):
        rng = np.random.default_rng(1)
        v = rng.standard_normal(50)
        x = ReturnSeries("x", v)
        y = ReturnSeries("y", np.concatenate([[0.0], v[:-1]]))
        a, b = shift_pair(x, y, 1)
        np.testing.assert_array_equal(a.values, b.values)

    def test_negative_lag(self):
        x = ReturnSeries("x", np.arange(5.0))
        a, b = shift_pair(x, x, -2)
        np.testing.assert_array_equal(a.values, [2, 3, 4])
        np.testing.assert_array_equal(b.values, [0, 1, 2])

    def test_lag_too_large(self):
        x = ReturnSeries("x", np.arange(3.0))
        with pytest.raises(DataError):
            shift_pair(x, x, 3)
