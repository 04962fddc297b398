import math
from dataclasses import replace

import numpy as np
import pytest

from cascadepair import presets
from cascadepair._io import read_csv
from cascadepair.errors import MemoryCapError
from cascadepair.mcsim import (
    THREADS_ENV,
    CorrelationHistogram,
    DetectionChain,
    FilterStage,
    PairSource,
    SourceModel,
    car_from_histogram,
    dp_vs_sp_experiment,
    expected_events,
    pgr_from_singles,
    simulate,
)
from cascadepair.pairgen import car_model, pgr_from_brightness
from cascadepair.phasematch import SPLITTING_PENALTY_DB

IDEAL = DetectionChain()
JITTERY = DetectionChain(facet_loss_db=3.0103, dark_rate_hz=(100.0, 100.0), jitter_fwhm_s=50e-12)


def synthetic(peak_factor, mean=50, half=200, window_bins=5):
    counts = np.full(2 * half + 1, mean, dtype=np.int64)
    counts[half - window_bins // 2 : half + window_bins // 2 + 1] = round(peak_factor * mean)
    delay = (np.arange(2 * half + 1) - half) * 10e-12
    return CorrelationHistogram(delay, counts, 10e-12, (10**6, 10**6), 1.0, 0), window_bins * 10e-12


def test_chain_validation():
    with pytest.raises(ValueError):
        DetectionChain(detector_efficiency=(1.2, 1.0))
    with pytest.raises(ValueError):
        DetectionChain(bin_width_s=0.0)
    with pytest.raises(ValueError):
        DetectionChain(facet_loss_db=-1.0)
    with pytest.raises(ValueError):
        FilterStage(1534.0, 0.0, 40.0, 5.0)


def test_chain_derived_quantities():
    chain = presets.device_chain()
    assert chain.transmission == pytest.approx(10 ** (-1.3))
    assert chain.photon_efficiency(0) == pytest.approx(0.85 * 10 ** (-1.3))
    assert chain.detection_bandwidth_nm == 1.0
    assert chain.pump_rejection_db == 130.0
    assert chain.default_window_s == pytest.approx(290e-12)
    assert chain.window_bins(chain.default_window_s) == 29


def test_darks_only_flat():
    chain = replace(JITTERY, dark_rate_hz=(2e5, 2e5), integration_time_s=2.0)
    h = simulate(chain, PairSource(0.0), 3)
    est = car_from_histogram(h, chain.default_window_s)
    excess = est.peak_counts - est.accidental_mean
    assert abs(excess) < 3 * math.sqrt(est.accidental_mean)
    assert est.car == pytest.approx(1.0, abs=3 * est.uncertainty)


def test_ideal_chain_zero_delay_only():
    # low enough that a chance coincidence between two pairs is improbable
    h = simulate(IDEAL, PairSource(2e3), 9)
    zero = h.counts[np.abs(h.delay_s) < 1e-15]
    assert zero.sum() == h.counts.sum() == h.truth["pairs_split_detected"]
    # half of the pairs end up split across the arms
    assert h.truth["pairs_split_detected"] / h.truth["pairs_emitted"] == pytest.approx(0.5, abs=0.02)


def test_device_like_mc_matches_analytic():
    # 100x lower rates, 100x longer run and a wide histogram keep the
    # accidental floor measurable
    chain = replace(presets.device_chain(integration_time_s=1000.0), histogram_range_s=100e-9)
    pgr = pgr_from_brightness(1e5, 1.0, 0.9, 1.7) / 100
    raman = presets.RAMAN_DENSITY * 2.6 / 100
    h = simulate(chain, PairSource(pgr, raman), 21)
    est = car_from_histogram(h, chain.default_window_s)
    analytic = car_model(
        pgr * chain.pair_efficiency, raman, chain.dark_rate_hz[0], 1.0, chain.default_window_s,
        photon_efficiency=chain.photon_efficiency(0), jitter_fwhm_s=chain.jitter_fwhm_s,
    )
    assert abs(est.car - analytic) < 3 * est.uncertainty


@pytest.mark.parametrize("pgr", [1e3, 1e4, 1e5, 1e6])
def test_mc_car_converges_to_analytic(pgr):
    h = simulate(JITTERY, PairSource(pgr, 2e4), 42)
    w = JITTERY.default_window_s
    est = car_from_histogram(h, w)
    analytic = car_model(pgr * JITTERY.pair_efficiency, 2e4, 100.0, 1.0, w, photon_efficiency=JITTERY.photon_efficiency(0), jitter_fwhm_s=50e-12)
    assert abs(est.car - analytic) < 3 * est.uncertainty


def test_car_from_synthetic_histograms():
    for factor in (372.0, 2.0, 1.0):
        h, w = synthetic(factor)
        est = car_from_histogram(h, w)
        assert est.car == pytest.approx(factor, rel=1e-12)
        assert est.uncertainty > 0
    h, w = synthetic(372.0)
    est = car_from_histogram(h, w)
    assert est.uncertainty == pytest.approx(372 * math.sqrt(1 / (372 * 250) + 1 / (50 * 386)), rel=1e-9)


def test_car_zero_accidentals_lower_bound():
    h, w = synthetic(10.0)
    counts = np.zeros_like(h.counts)
    counts[h.peak_mask(w)] = 100
    est = car_from_histogram(replace(h, counts=counts), w)
    assert est.lower_bound and math.isnan(est.uncertainty) and est.car > 0


def test_car_needs_off_peak_windows():
    h, _ = synthetic(5.0, half=20)
    with pytest.raises(ValueError, match="off-peak"):
        car_from_histogram(h, 5e-9)


def test_klyshko_ideal_chain():
    h = simulate(IDEAL, PairSource(5e4), 4)
    est = pgr_from_singles(h, IDEAL.bin_width_s)
    assert abs(est.rate - 5e4) < 3 * est.uncertainty


@pytest.mark.parametrize("loss_db", [0.0, 5.0, 10.0])
def test_klyshko_loss_independent(loss_db):
    eff = 10 ** (-loss_db / 10)
    chain = replace(JITTERY, detector_efficiency=(eff, eff), integration_time_s=4.0)
    w = chain.default_window_s
    h = simulate(chain, PairSource(2e5, 1e3), 8)
    est = pgr_from_singles(h, w, background_hz=(1e3 + 100.0, 1e3 + 100.0))
    assert abs(est.rate - 2e5) < 3 * est.uncertainty


def test_klyshko_noiseless_expectation():
    # S1 = S2 = R T, C = R T / 2  =>  R exactly
    counts = np.zeros(201, dtype=np.int64)
    counts[100] = 5000
    h = CorrelationHistogram((np.arange(201) - 100) * 10e-12, counts, 10e-12, (10000, 10000), 1.0, 0)
    assert pgr_from_singles(h, 10e-12).rate == pytest.approx(10000.0)
    with pytest.raises(ValueError):
        pgr_from_singles(replace(h, counts=np.zeros_like(counts)), 10e-12)


def test_deterministic_across_threads(monkeypatch):
    src = PairSource(3e5, 1e4)
    assert expected_events(IDEAL, src) > 2 * 250_000
    a = simulate(JITTERY, src, 77, threads=1)
    b = simulate(JITTERY, src, 77, threads=4)
    monkeypatch.setenv(THREADS_ENV, "2")
    c = simulate(JITTERY, src, 77)
    assert a.truth["slices"] > 1
    for other in (b, c):
        assert np.array_equal(a.counts, other.counts) and a.singles == other.singles
    assert not np.array_equal(a.counts, simulate(JITTERY, src, 78, threads=1).counts)


def test_memory_cap():
    with pytest.raises(MemoryCapError):
        simulate(IDEAL, PairSource(1e9), 0, max_events=1e6)


def test_jitter_broadening():
    chain = DetectionChain(jitter_fwhm_s=50e-12, bin_width_s=2e-12, histogram_range_s=1e-9)
    h = simulate(replace(chain, integration_time_s=5.0), PairSource(2e4), 13)
    near = np.abs(h.delay_s) < 250e-12
    d, c = h.delay_s[near], h.counts[near]
    mean = np.sum(d * c) / c.sum()
    std = math.sqrt(np.sum((d - mean) ** 2 * c) / c.sum())
    fwhm = 2 * math.sqrt(2 * math.log(2)) * std
    assert fwhm == pytest.approx(math.sqrt(2) * 50e-12, rel=0.05)


def test_rates_linear_in_pgr():
    pgrs = np.geomspace(2e4, 2e5, 5)
    singles, coinc = [], []
    for i, r in enumerate(pgrs):
        h = simulate(replace(JITTERY, dark_rate_hz=(0.0, 0.0), integration_time_s=2.0), PairSource(r), (5, i))
        singles.append(sum(h.singles))
        coinc.append(h.peak_counts(JITTERY.default_window_s))
    assert np.polyfit(np.log(pgrs), np.log(singles), 1)[0] == pytest.approx(1.0, abs=0.02)
    assert np.polyfit(np.log(pgrs), np.log(coinc), 1)[0] == pytest.approx(1.0, abs=0.02)


def test_histogram_csv(tmp_path):
    h = simulate(JITTERY, PairSource(1e4), 1)
    comments, cols = read_csv(h.to_csv(tmp_path / "h.csv"))
    assert "seed=1" in comments[0]
    np.testing.assert_array_equal(cols["counts"], h.counts)


def test_source_model_splitting_factor():
    dp = SourceModel(1e5, 1.0)
    sp = SourceModel(1e5, 1.0, n_pumps=1)
    assert 10 * math.log10(dp.pgr_onchip(2.0) / sp.pgr_onchip(2.0)) == pytest.approx(SPLITTING_PENALTY_DB)
    assert sp.source(2.0).raman_rate_per_arm == 0.0
    with pytest.raises(ValueError):
        SourceModel(1e5, 1.0, n_pumps=3)


def _sweep(sp_suppression_db, seed):
    chain = replace(presets.device_chain(bandwidth_nm=2.0), dark_rate_hz=(0.1, 0.1))
    dp = SourceModel(1e5, 2.0, raman_density=presets.RAMAN_DENSITY * 1e-3)
    sp = SourceModel(1e5, 2.0, sp_suppression_db, raman_density=presets.RAMAN_DENSITY * 1e-3, n_pumps=1)
    return dp_vs_sp_experiment(chain, dp, sp, [0.5, 0.8, 1.2, 1.9, 3.0], seed=seed, target_coincidences=1000)


def test_dp_sp_gap_40db():
    res = _sweep(40.0 - SPLITTING_PENALTY_DB, 7)
    assert np.all(np.abs(res.gap_db - 40.0) < 1.0)
    assert res.dp_fit[0] == pytest.approx(2.0, abs=0.1)
    assert res.sp_fit[0] == pytest.approx(2.0, abs=0.1)


def test_dp_sp_gap_splitting_only():
    res = _sweep(0.0, 8)
    assert res.mean_gap_db == pytest.approx(SPLITTING_PENALTY_DB, abs=0.3)


def test_dp_sp_empty_sweep():
    with pytest.raises(ValueError):
        dp_vs_sp_experiment(IDEAL, SourceModel(1e5, 1.0), SourceModel(1e5, 1.0), [])
