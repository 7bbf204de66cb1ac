import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfxcorr.ingest import ReturnSeries
from mfxcorr.mfdfa import QGrid, mfdfa
from mfxcorr.surrogate import SurrogateSpec, band, realization, shuffle
from mfxcorr.synth import fgn, rng_for


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200), st.integers(0, 2**63))
def test_multiset_preserved(vals, seed):
    v = np.asarray(vals)
    np.testing.assert_array_equal(np.sort(shuffle(v, seed)), np.sort(v))


def test_seeded():
    v = np.arange(100.0)
    np.testing.assert_array_equal(shuffle(v, 5), shuffle(v, 5))
    assert not np.array_equal(shuffle(v, 5), shuffle(v, 6))


def test_series_wrapper():
    s = ReturnSeries("a", np.arange(10.0), timestamps=np.arange(10))
    out = shuffle(s, 1)
    assert isinstance(out, ReturnSeries) and out.timestamps is None


def test_shuffled_fgn_is_uncorrelated():
    x = fgn(2**16, 0.8, rng_for(3))
    q2 = QGrid((1.0, 2.0, 3.0))
    assert mfdfa(x, q2).fit.exponent[1] > 0.7
    assert mfdfa(shuffle(x, 1), q2).fit.exponent[1] == pytest.approx(0.5, abs=0.05)


def test_mode_one_keeps_x():
    x, y = np.arange(50.0), np.arange(50.0) + 100
    a, b = realization(x, y, 3, "one")
    np.testing.assert_array_equal(a, x)
    assert not np.array_equal(b, y)
    a, b = realization(x, y, 3, "both")
    assert not np.array_equal(a, x)


def test_constant_statistic():
    mean, sigma = band(lambda a, b: np.array([2.0, 3.0]), np.arange(10.0), np.arange(10.0), SurrogateSpec(n_realizations=5))
    np.testing.assert_array_equal(mean, [2, 3])
    np.testing.assert_array_equal(sigma, [0, 0])


def test_single_realization_sigma_undefined():
    with pytest.warns(UserWarning):
        _, sigma = band(np.mean, np.arange(10.0), spec=SurrogateSpec(n_realizations=1))
    assert np.isnan(sigma).all()


def test_mean_near_zero():
    rng = rng_for(0)
    x, y = rng.standard_normal(2000), rng.standard_normal(2000)
    spec = SurrogateSpec(n_realizations=200, seed=4)
    mean, sigma = band(lambda a, b: np.corrcoef(a, b)[0, 1], x, y, spec)
    assert abs(mean) < 3 * sigma / np.sqrt(200)


def test_threads_invariant():
    x = rng_for(1).standard_normal(500)
    spec = SurrogateSpec(n_realizations=16, seed=2)
    stat = lambda a: np.array([a[:10].sum(), a[-5:].mean()])  # noqa: E731
    np.testing.assert_array_equal(band(stat, x, spec=spec, threads=1)[1], band(stat, x, spec=spec, threads=4)[1])


def test_spec_defaults_and_validation():
    assert SurrogateSpec().n_realizations == 100
    with pytest.raises(ValueError):
        SurrogateSpec(kind="phase")
    with pytest.raises(ValueError):
        SurrogateSpec(mode="neither")
