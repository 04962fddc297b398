import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cascadepair import presets
from cascadepair.dispersion import C_NM_PER_S, DispersionModel, Poling, PolingScheme, WaveguideSpec, delta_k_shg
from cascadepair.errors import InfeasibleError, MultipleRootsError, RootFindingError
from cascadepair.phasematch import (
    DEFAULT_CAP_DB,
    SINC2_HALF_X,
    SPLITTING_PENALTY_DB,
    PumpPlacement,
    find_pm_wavelength,
    optimize_pump_placement,
    raman_clearance,
    shg_bandwidth_fwhm,
    shg_power,
    shg_spectrum,
    sinc,
    suppression_budget,
)
from cascadepair.raman import LN_LINES

from _fixtures import linear_fixture


def test_sinc_branches():
    assert sinc(0.0) == 1.0
    x = np.array([1e-5, 9.99e-5, 1.01e-4, 0.5, math.pi])
    np.testing.assert_allclose(sinc(x)[:4], np.sin(x[:4]) / x[:4], rtol=1e-15)
    assert abs(sinc(math.pi)) < 1e-16
    assert sinc(SINC2_HALF_X) ** 2 == pytest.approx(0.5, abs=1e-14)


def test_pm_wavelength_fixture(model, spec):
    wl = find_pm_wavelength(model, spec, (1500, 1570))
    assert wl == pytest.approx(1534.0, abs=0.01)
    assert abs(delta_k_shg(model, spec, "TE00", "TE01", wl)) < 1e-9


def test_pm_dispersionless_has_no_isolated_root():
    m = DispersionModel.constant(2.0)
    spec = WaveguideSpec(1.0, 250.0, PolingScheme(Poling.NONE))
    with pytest.raises(RootFindingError):
        find_pm_wavelength(m, spec, (1400, 1700))


def test_pm_no_sign_change(model, spec):
    with pytest.raises(RootFindingError):
        find_pm_wavelength(model, spec, (1540, 1570))


def test_pm_qpm_design_wavelength():
    m = presets.qpm_model()
    n = lambda wl: 2.14 + 1.2e-4 * (wl - 1000) + 6.0e-8 * (wl - 1000) ** 2
    period = 2 * math.pi / (4 * math.pi * n(1534) / 1.534 - 2 * math.pi * n(767) / 0.767)
    spec = WaveguideSpec(0.445, 250.0, PolingScheme(Poling.QPM, period), pump_mode="TE00", sh_mode="TE00")
    assert find_pm_wavelength(m, spec, (1450, 1650)) == pytest.approx(1534.0, abs=1e-6)


def test_multiple_roots_reported():
    # index curve whose mismatch crosses zero twice
    from cascadepair.dispersion import DispersionCurve

    te00 = DispersionCurve((1.85, 0.0, 1e-6), (1400, 1700), center=1550)
    te01 = DispersionCurve((1.85 + 1e-6 * 100,), (700, 850))
    m = DispersionModel({"TE00": te00, "TE01": te01})
    with pytest.raises(MultipleRootsError) as exc:
        find_pm_wavelength(m, WaveguideSpec(0.445, 250.0), (1400, 1700))
    assert len(exc.value.roots) == 2
    assert sorted(exc.value.roots) == pytest.approx([1540.0, 1560.0], abs=1e-3)


def test_spectrum_peak_equals_closed_form(model, spec):
    wl = find_pm_wavelength(model, spec)
    s = shg_spectrum(model, spec, 1.0, (wl, wl + 1), 2)
    peak = 2.5 * 1e-6 * 0.445**2  # kappa^2 P^2 L^2 by hand
    assert peak == pytest.approx(4.950625e-07)
    assert s.values[0] == pytest.approx(peak, rel=1e-12)


def test_spectrum_normalized_and_increasing(model, spec):
    s = shg_spectrum(model, spec, 1.0, (1500, 1570), 701, normalize=True)
    assert s.normalized and s.values.max() == pytest.approx(1.0, rel=0, abs=0)
    assert np.all(np.diff(s.wavelength_nm) > 0)
    assert s.peak_wavelength == pytest.approx(1534.0, abs=0.1)


def test_spectrum_zero_at_first_null(linear):
    model, spec = linear
    # dk = 4 pi dn / lambda - K vanishes at 1534; find lambda where dk L / 2 = pi
    dn = 0.1
    k_grating = 4 * math.pi * dn / 1.534
    wl_null = 4 * math.pi * dn / (k_grating + 2 * math.pi / spec.length_um) * 1e3
    s = shg_spectrum(model, spec, 1.0, (wl_null, wl_null + 0.01), 2)
    # zero up to the round-off in locating the null (x = pi to ~1e-13)
    assert s.values[0] / shg_power(spec, 1.0, 0.0) < 1e-20


def test_spectrum_floor(model, spec):
    s = shg_spectrum(model, spec, 1.0, (1500, 1570), 701, normalize=True, floor=1e-3)
    assert s.values.min() == pytest.approx(1e-3)


def test_main_lobe_integral_power_invariant(model, spec):
    a = shg_spectrum(model, spec, 0.5, (1530, 1538), 801, normalize=True)
    b = shg_spectrum(model, spec, 7.0, (1530, 1538), 801, normalize=True)
    assert np.trapezoid(a.values, a.wavelength_nm) == pytest.approx(np.trapezoid(b.values, b.wavelength_nm), rel=1e-12)


def test_spectrum_needs_two_samples(model, spec):
    with pytest.raises(ValueError):
        shg_spectrum(model, spec, 1.0, (1500, 1570), 1)


def test_bandwidth_in_typical_range(model):
    fwhm = shg_bandwidth_fwhm(model, presets.tfln_waveguide(0.5))
    assert 250 <= fwhm <= 750


def test_bandwidth_halves_with_length(model):
    a = shg_bandwidth_fwhm(model, presets.tfln_waveguide(0.5))
    b = shg_bandwidth_fwhm(model, presets.tfln_waveguide(1.0))
    assert b / a == pytest.approx(0.5, rel=0.01)


def test_bandwidth_linear_fixture_closed_form(linear):
    model, spec = linear
    # dk/domega = 2 dn / c (c in um/s); FWHM = 2 x_half * 2 / (L dk/domega) / (2 pi)
    c_um = 2.99792458e14
    expected_ghz = 4 * 1.391557 / (spec.length_um * 2 * 0.1 / c_um) / (2 * math.pi) / 1e9
    assert expected_ghz == pytest.approx(298.4089328427992, rel=1e-12)
    assert shg_bandwidth_fwhm(model, spec) == pytest.approx(expected_ghz, rel=1e-3)


def test_suppression_budget_device_pumps(model, spec):
    b = suppression_budget(model, spec, 1513.56, 1555.05)
    assert b.total_min_suppression > 36
    assert b.total_min_suppression == min(b.shg1_db, b.shg2_db)
    assert -0.1 < b.sfg_peak_db_rel <= 0


def test_suppression_degenerate_at_pm(model, spec):
    wl = find_pm_wavelength(model, spec)
    b = suppression_budget(model, spec, wl, wl)
    assert b.total_min_suppression == pytest.approx(SPLITTING_PENALTY_DB, abs=1e-9)
    assert SPLITTING_PENALTY_DB == pytest.approx(6.0206, abs=1e-4)


def test_suppression_sentinel_at_null(linear):
    model, spec = linear
    dn = 0.1
    k_grating = 4 * math.pi * dn / 1.534
    x = 2 * math.pi / spec.length_um
    wl1 = 4 * math.pi * dn / (k_grating + x) * 1e3
    wl2 = 4 * math.pi * dn / (k_grating - x) * 1e3
    b = suppression_budget(model, spec, wl1, wl2)
    assert b.shg1_db == pytest.approx(DEFAULT_CAP_DB + SPLITTING_PENALTY_DB)
    assert suppression_budget(model, spec, wl1, wl2, cap_db=90).shg1_db == pytest.approx(90 + SPLITTING_PENALTY_DB)


@settings(max_examples=30, deadline=None)
@given(st.floats(1480, 1530), st.floats(1538, 1600))
def test_suppression_symmetric(a, b):
    model, spec = presets.tfln_model(), presets.tfln_waveguide()
    x = suppression_budget(model, spec, a, b)
    y = suppression_budget(model, spec, b, a)
    assert x.total_min_suppression == y.total_min_suppression
    assert (x.shg1_db, x.shg2_db) == (y.shg2_db, y.shg1_db)


def test_optimizer_beats_exhaustive_grid(model, spec):
    p = optimize_pump_placement(model, spec, 5.0, 50.0, raman_shifts=LN_LINES, raman_margin_nm=1.0)
    # energy conservation and bounds
    assert 1 / p.wl1_nm + 1 / p.wl2_nm == pytest.approx(2 / p.wl_degenerate_nm, rel=1e-14)
    for wl in (p.wl1_nm, p.wl2_nm):
        assert 5.0 - 1e-9 <= abs(wl - p.wl_degenerate_nm) <= 50.0 + 1e-9
    assert p.suppression_db > 36
    assert p.raman_clearance_nm >= 1.0
    assert suppression_budget(model, spec, p.wl1_nm, p.wl2_nm).total_min_suppression == p.suppression_db
    # oracle: exhaustive fine grid over symmetric detunings
    nu_d = C_NM_PER_S / p.wl_degenerate_nm
    best = -np.inf
    for dnu in np.linspace(C_NM_PER_S / (1534 - 5) - nu_d, nu_d - C_NM_PER_S / (1534 + 50), 20001):
        wl1, wl2 = C_NM_PER_S / (nu_d - dnu), C_NM_PER_S / (nu_d + dnu)
        if raman_clearance(wl1, wl2, LN_LINES, p.wl_degenerate_nm) >= 1.0:
            best = max(best, suppression_budget(model, spec, wl1, wl2).total_min_suppression)
    assert p.suppression_db >= best - 1e-6


def test_optimizer_monotone_fixture_hits_bound():
    # short linear fixture: first sinc null lies beyond the detuning bound
    model, spec = linear_fixture(length_cm=0.01)
    p = optimize_pump_placement(model, spec, 5.0, 50.0)
    assert max(abs(p.wl1_nm - 1534), abs(p.wl2_nm - 1534)) == pytest.approx(50.0, abs=1e-6)


def test_optimizer_deterministic(model, spec):
    a = optimize_pump_placement(model, spec, raman_shifts=LN_LINES, raman_margin_nm=1.0)
    b = optimize_pump_placement(model, spec, raman_shifts=LN_LINES, raman_margin_nm=1.0)
    assert a == b


def test_optimizer_infeasible(model, spec):
    with pytest.raises(InfeasibleError):
        optimize_pump_placement(model, spec, raman_shifts=LN_LINES, raman_margin_nm=100.0)
    with pytest.raises(InfeasibleError):
        optimize_pump_placement(model, spec, min_detuning_nm=60.0, max_detuning_nm=50.0)


def test_pump_placement_energy_conservation():
    p = PumpPlacement.from_pumps(1513.56, 1555.05, 40.0, 10.0)
    assert 1 / p.wl1_nm + 1 / p.wl2_nm == pytest.approx(2 / p.wl_degenerate_nm, rel=1e-15)
