import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nomasim.channel import FadingModel
from nomasim.outage import (ORACLE_STREAM, OutageEstimate, SweepSpec, asymptotic_floor_oracle, classify_floor,
                            detect_floor, estimate_outage, outage_counts, snr_sweep, wilson_interval)
from nomasim.rng import RngStream
from nomasim.sic import DecodingPolicy

RAYLEIGH = FadingModel.rayleigh(1.0)


def _det(*gains):
    return [FadingModel.deterministic([g]) for g in gains]


def test_deterministic_decodable_channel_never_fails():
    est = estimate_outage("qos_based", [1, 1], [1, 1], _det(4, 2), 1000, RngStream(0))
    for user in (0, 1):
        assert est[user].p_hat == 0.0
        assert est[user].ci_low == 0.0


def test_deterministic_blocked_channel_always_fails():
    est = estimate_outage("qos_based", [1, 1], [1, 1], _det(1, 2), 1000, RngStream(0))
    assert est.primary.p_hat == 1.0 and est.secondary.p_hat == 1.0
    assert est.primary.ci_high == 1.0


@pytest.mark.parametrize("policy", list(DecodingPolicy))
@pytest.mark.parametrize("gains", [(4, 2), (1, 2), (0.3, 5), (2, 2)])
def test_deterministic_estimates_are_zero_or_one(policy, gains):
    est = estimate_outage(policy, [1, 0.5], [1, 1], _det(*gains), 500, RngStream(3))
    for user in (0, 1):
        assert est[user].p_hat in (0.0, 1.0)


def test_qos_primary_outage_at_high_snr():
    p = 10.0**6
    est = estimate_outage("qos_based", [1, 1], [p, p], RAYLEIGH, 10**6, RngStream(2021, 60))
    assert abs(est.primary.p_hat - 0.5) < 0.01


@given(k=st.integers(0, 500), extra=st.integers(0, 500))
def test_wilson_interval_brackets_estimate(k, extra):
    n = k + extra
    if n == 0:
        return
    low, high = wilson_interval(k, n)
    assert 0.0 <= low <= k / n <= high <= 1.0


def test_wilson_interval_known_value():
    # closed form at k=50, n=100: 0.5 +- 1.96 * sqrt(0.25/100 + 1.96^2/40000) / (1 + 1.96^2/100)
    low, high = wilson_interval(50, 100)
    assert low == pytest.approx(0.40383, abs=1e-5)
    assert high == pytest.approx(0.59617, abs=1e-5)


def test_estimate_from_counts():
    est = OutageEstimate.from_counts(3, 10)
    assert est.p_hat == 0.3 and est.trials == 10 and est.failures == 3
    assert est.width == est.ci_high - est.ci_low


def test_estimate_requires_trials():
    with pytest.raises(ValueError):
        estimate_outage("qos_based", [1, 1], [1, 1], RAYLEIGH, 0, RngStream(0))


def test_counts_independent_of_workers_and_chunks():
    args = (list(DecodingPolicy), [1, 0.5], [100.0, 30.0], RAYLEIGH, 50000, RngStream(9, 2))
    ref = outage_counts(*args, workers=1)
    for workers, chunk in [(4, 1000), (16, 777), (3, 50000)]:
        other = outage_counts(*args, workers=workers, chunk=chunk)
        for pol in ref:
            assert np.array_equal(ref[pol], other[pol])


def test_hybrid_counts_never_exceed_fixed_orders():
    spec = SweepSpec((0, 10, 20, 30, 40), 20000, (1.0, 0.5), master_seed=4)
    curve = snr_sweep(spec)
    for user in ("primary", "secondary"):
        for i in range(len(spec.snr_db)):
            hybrid = curve.get("hybrid", user, index=i).failures
            assert hybrid <= curve.get("qos_based", user, index=i).failures
            assert hybrid <= curve.get("csi_based", user, index=i).failures


def test_single_point_sweep_matches_estimate():
    spec = SweepSpec((0.0,), 1, (1.0, 1.0), ("qos_based",), _det(4, 2), master_seed=1)
    curve = snr_sweep(spec)
    direct = estimate_outage("qos_based", [1, 1], [1, 1], _det(4, 2), 1, RngStream(1, 0))
    assert curve.get("qos_based", 0, 0.0) == direct.primary
    assert curve.get("qos_based", 1, 0.0) == direct.secondary


def test_sweep_is_repeatable():
    spec = SweepSpec((0, 20, 40), 5000, (1.0, 1.0), master_seed=12)
    assert snr_sweep(spec).cells == snr_sweep(spec, workers=4).cells


def test_sweep_grid_is_complete():
    spec = SweepSpec((0, 20, 40), 100, (1.0, 1.0), master_seed=12)
    curve = snr_sweep(spec)
    rows = list(curve.rows())
    assert len(rows) == 3 * 2 * 3
    assert {(p, u, s) for p, u, s, _ in rows} == {
        (p, u, s) for p in DecodingPolicy for u in ("primary", "secondary") for s in spec.snr_db}


@pytest.mark.parametrize("kwargs", [
    dict(snr_db=(10, 0), trials_per_point=1, rates=(1, 1)),
    dict(snr_db=(), trials_per_point=1, rates=(1, 1)),
    dict(snr_db=(0,), trials_per_point=0, rates=(1, 1)),
    dict(snr_db=(0,), trials_per_point=1, rates=(1,)),
])
def test_invalid_sweep_rejected(kwargs):
    with pytest.raises(ValueError):
        SweepSpec(**kwargs)


# -- asymptotic oracle -----------------------------------------------------------

ORACLE_RNG = RngStream(2021, ORACLE_STREAM)


def test_oracle_qos_floor():
    est = asymptotic_floor_oracle("qos_based", [1, 1], RAYLEIGH, 10**6, ORACLE_RNG)
    assert abs(est.primary.p_hat - 0.5) < 0.005


def test_oracle_csi_floor():
    est = asymptotic_floor_oracle("csi_based", [2, 2], RAYLEIGH, 10**6, ORACLE_RNG)
    assert abs(est.first_stage.p_hat - 0.5) < 0.005


def test_oracle_hybrid_has_no_floor():
    est = asymptotic_floor_oracle("hybrid", [1, 0.5], RAYLEIGH, 10**6, ORACLE_RNG)
    assert est.secondary.p_hat < 0.001


@pytest.mark.parametrize("eps", [0.25, 1.0, 3.0])
def test_oracle_qos_floor_tracks_closed_form(eps):
    rate = float(np.log2(1 + eps))
    est = asymptotic_floor_oracle("qos_based", [rate, 1], RAYLEIGH, 4 * 10**5, ORACLE_RNG)
    assert abs(est.primary.p_hat - eps / (1 + eps)) < 4 * est.primary.width


@pytest.mark.parametrize("policy, rates", [("qos_based", (1, 1)), ("csi_based", (2, 2))])
def test_simulation_agrees_with_oracle_at_high_snr(policy, rates):
    p = 10.0**6
    sim = estimate_outage(policy, rates, [p, p], RAYLEIGH, 10**6, RngStream(77, 0))
    oracle = asymptotic_floor_oracle(policy, rates, RAYLEIGH, 10**6, RngStream(77, ORACLE_STREAM))
    assert abs(sim.first_stage.p_hat - oracle.first_stage.p_hat) <= 3 * sim.first_stage.width


# -- floor detection -------------------------------------------------------------

def _tight(p):
    return OutageEstimate(p, p * 0.99, p * 1.01, 10**7)


def test_constant_curve_is_floored():
    verdict = classify_floor([40, 50, 60], [_tight(0.5)] * 3)
    assert verdict.kind == "floored"
    assert verdict.value == pytest.approx(0.5)


def test_decaying_curve():
    assert classify_floor([40, 50, 60], [_tight(1e-1), _tight(1e-2), _tight(1e-3)]).kind == "decaying"


def test_noisy_curve_is_inconclusive():
    wide = [OutageEstimate(0.3, 0.0, 0.9, 10), OutageEstimate(0.2, 0.0, 0.8, 10), OutageEstimate(0.25, 0.0, 0.85, 10)]
    assert classify_floor([40, 50, 60], wide).kind == "inconclusive"


def test_floor_detection_uses_decade_points_only():
    snr = [40, 45, 50, 55, 60]
    ests = [_tight(1e-1), _tight(0.9), _tight(1e-2), _tight(0.9), _tight(1e-3)]
    assert classify_floor(snr, ests).kind == "decaying"


def test_floor_detection_needs_twenty_db():
    with pytest.raises(ValueError):
        classify_floor([50, 55, 60], [_tight(0.5)] * 3)


def test_detect_floor_on_sweep():
    spec = SweepSpec((40, 50, 60), 200000, (1.0, 1.0), ("qos_based",), master_seed=5)
    assert detect_floor(snr_sweep(spec), "primary").kind == "floored"
