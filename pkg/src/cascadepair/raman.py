"""Spontaneous Raman noise: line positions, spectra, and power-scaling fits.

Shifts and widths are in cm^-1, wavelengths in nm, pump powers in mW.
Absolute spectral amplitudes are in arbitrary counts; only ratios carry
physical meaning here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RamanLine:
    shift_cm: float
    amplitude: float = 1.0
    width_cm: float = 10.0  # FWHM
    label: str = ""

    def __post_init__(self):
        if self.shift_cm == 0:
            raise ValueError("Raman shift must be non-zero")
        if not self.amplitude > 0:
            raise ValueError("Raman line amplitude must be positive")
        if not self.width_cm > 0:
            raise ValueError("Raman linewidth must be positive")


# X(ZZ, ZY) lines of lithium niobate; relative amplitudes are calibration choices
LN_LINES = (
    RamanLine(251.0, 1.0, 10.0, "1A1 TO"),
    RamanLine(238.0, 0.5, 10.0, "2E TO"),
    RamanLine(151.0, 0.3, 10.0, "1E TO"),
)


def _shift(line):
    return abs(line.shift_cm) if isinstance(line, RamanLine) else abs(float(line))


def raman_shifted_wavelengths(pump_nm, lines):
    """Return ``[(stokes_nm, anti_stokes_nm), ...]`` for each line.

    1/l_AS = 1/l_p + shift and 1/l_S = 1/l_p - shift, in cm^-1.
    """
    if not pump_nm > 0:
        raise ValueError("pump wavelength must be positive")
    nu_p = 1e7 / pump_nm
    out = []
    for line in lines:
        s = _shift(line)
        out.append((1e7 / (nu_p - s), 1e7 / (nu_p + s)))
    return out


def _lorentzian(x, x0, fwhm):
    hw = fwhm / 2
    return hw * hw / ((x - x0) ** 2 + hw * hw)


def line_profile(pump_nm, lines, wavelength_nm):
    """Per-mW Raman profile (no background) sampled at ``wavelength_nm``.

    Stokes and anti-Stokes components share the line amplitude.
    """
    nu = 1e7 / np.asarray(wavelength_nm, dtype=float)
    nu_p = 1e7 / pump_nm
    total = np.zeros_like(nu)
    for line in lines:
        if not isinstance(line, RamanLine):
            line = RamanLine(float(line))
        s = abs(line.shift_cm)
        total += line.amplitude * (_lorentzian(nu, nu_p + s, line.width_cm) + _lorentzian(nu, nu_p - s, line.width_cm))
    return total


def calibrate_background(pump_nm, lines, peak_nm, reference_nm, ratio):
    """Flat per-mW background that makes spectrum(peak)/spectrum(reference) == ratio."""
    lp = float(line_profile(pump_nm, lines, peak_nm))
    lr = float(line_profile(pump_nm, lines, reference_nm))
    if ratio <= 1:
        raise ValueError("ratio must exceed 1")
    bg = (lp - ratio * lr) / (ratio - 1)
    if bg < 0:
        raise ValueError(f"no non-negative background reaches ratio {ratio}; line tails alone give {lp / lr:.3g}")
    return bg


LN_PUMP_NM = 1534.0
LN_REFERENCE_NM = 1502.0
LN_PEAK_RATIO = 7.0
LN_BACKGROUND = calibrate_background(
    LN_PUMP_NM,
    LN_LINES,
    raman_shifted_wavelengths(LN_PUMP_NM, LN_LINES[:1])[0][1],
    LN_REFERENCE_NM,
    LN_PEAK_RATIO,
)


@dataclass(frozen=True)
class RamanSpectrum:
    wavelength_nm: np.ndarray
    counts: np.ndarray
    # samples within 0.5 nm of the pump, where the residual pump is not modeled
    pump_mask: np.ndarray

    @property
    def pump_in_grid(self):
        return bool(self.pump_mask.any())


def raman_spectrum(pump_nm, pump_mw, lines, wavelength_nm, background=0.0, extra=None, scale=1.0):
    """Raman scattering spectrum, linear in pump power.

    ``background`` is a flat per-mW level (LN_BACKGROUND reproduces the
    calibrated peak-to-1502 nm ratio); ``extra`` is an additive
    user-supplied spectrum on the same grid (e.g. fiber Raman), not scaled
    with pump power.
    """
    wl = np.asarray(wavelength_nm, dtype=float)
    counts = scale * pump_mw * (line_profile(pump_nm, lines, wl) + background)
    if extra is not None:
        counts = counts + np.asarray(extra, dtype=float)
    return RamanSpectrum(wl, counts, np.abs(wl - pump_nm) < 0.5)


@dataclass(frozen=True)
class PowerScalingFit:
    a: float  # quadratic (cascaded SPDC), counts/mW^2
    b: float  # linear (Raman), counts/mW
    residual_norm: float
    wavelength_nm: float | None = None

    def __call__(self, power_mw):
        p = np.asarray(power_mw, dtype=float)
        return self.a * p * p + self.b * p


def fit_power_scaling(powers_mw, counts, wavelength_nm=None):
    """Least-squares fit of counts = a*P^2 + b*P (no constant term)."""
    p = np.asarray(powers_mw, dtype=float)
    y = np.asarray(counts, dtype=float)
    if p.shape != y.shape or p.ndim != 1:
        raise ValueError("powers and counts must be 1-D arrays of equal length")
    if np.any(y < 0):
        raise ValueError("counts must be non-negative")
    n_distinct = len(np.unique(p))
    if n_distinct < 3:
        raise ValueError(f"rank-deficient design: need >= 3 distinct powers, got {n_distinct}")
    design = np.column_stack([p * p, p])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = float(np.linalg.norm(design @ coef - y))
    return PowerScalingFit(float(coef[0]), float(coef[1]), resid, wavelength_nm)


def crossover_power(fit):
    """Pump power (mW) where the quadratic and linear contributions are equal."""
    if not (fit.a > 0 and fit.b > 0):
        raise ValueError("crossover needs positive a and b")
    return fit.b / fit.a
