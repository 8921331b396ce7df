import numpy as np
import pytest
from scipy import stats

from nomasim.channel import FadingModel, LinkRealization, db_to_linear, realize_link, sample_gains, to_received_snr
from nomasim.rng import RngStream


def test_deterministic_gains_are_returned_in_order():
    model = FadingModel.deterministic([0.5, 2.0])
    assert list(sample_gains(model, RngStream(1), 2)) == [0.5, 2.0]


def test_deterministic_gains_cycle():
    model = FadingModel.deterministic([0.5, 2.0, 3.0])
    assert list(sample_gains(model, RngStream(1), 7)) == [0.5, 2.0, 3.0, 0.5, 2.0, 3.0, 0.5]


def test_same_seed_and_stream_repeat_exactly():
    a = sample_gains(FadingModel.rayleigh(), RngStream(42, 7), 1000)
    b = sample_gains(FadingModel.rayleigh(), RngStream(42, 7), 1000)
    assert np.array_equal(a, b)


def test_distinct_streams_differ():
    a = sample_gains(FadingModel.rayleigh(), RngStream(42, 7), 1000)
    b = sample_gains(FadingModel.rayleigh(), RngStream(42, 8), 1000)
    assert not np.array_equal(a, b)
    assert abs(stats.pearsonr(a, b)[0]) < 0.15


def test_rayleigh_mean():
    g = sample_gains(FadingModel.rayleigh(1.0), RngStream(2021, 3), 10**6)
    assert abs(g.mean() - 1.0) < 0.01


def test_rayleigh_matches_exponential_cdf():
    mean = 2.5
    g = sample_gains(FadingModel.rayleigh(mean), RngStream(5), 10**6)
    result = stats.kstest(g, stats.expon(scale=mean).cdf)
    # 1% critical value of the one-sample KS statistic
    assert result.statistic < 1.63 / np.sqrt(g.size)


def test_gains_are_nonnegative_and_finite():
    g = sample_gains(FadingModel.rayleigh(0.3), RngStream(9), 10**5)
    assert np.all(np.isfinite(g)) and np.all(g >= 0)


@pytest.mark.parametrize("kwargs", [
    dict(kind="rayleigh", mean_gain=0.0),
    dict(kind="rayleigh", mean_gain=-1.0),
    dict(kind="deterministic", fixed_gains=()),
    dict(kind="deterministic", fixed_gains=(1.0, -0.1)),
    dict(kind="nakagami"),
])
def test_invalid_models_rejected(kwargs):
    with pytest.raises(ValueError):
        FadingModel(**kwargs)


def test_sample_gains_needs_positive_count():
    with pytest.raises(ValueError):
        sample_gains(FadingModel.rayleigh(), RngStream(1), 0)


@pytest.mark.parametrize("power, gain, snr", [(0.0, 3.0, 0.0), (1.0, 1.0, 1.0), (10.0, 0.5, 5.0)])
def test_received_snr_is_power_times_gain(power, gain, snr):
    assert to_received_snr(power, gain) == snr


def test_received_snr_rejects_non_finite():
    with pytest.raises(ValueError):
        to_received_snr(float("inf"), 1.0)


def test_db_conversion():
    assert db_to_linear(0.0) == 1.0
    assert db_to_linear(30.0) == pytest.approx(1000.0)


def test_realize_link_pairs_gains_with_powers():
    models = [FadingModel.deterministic([2.0]), FadingModel.deterministic([0.25])]
    link = realize_link([3.0, 8.0], models, RngStream(0))
    assert isinstance(link, LinkRealization)
    assert list(link.gains) == [2.0, 0.25]
    assert list(link.received_snr) == [6.0, 2.0]
