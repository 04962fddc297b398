"""Phase-matching spectra, bandwidths, single-pump suppression and pump placement."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .dispersion import C_NM_PER_S, delta_k_sfg, delta_k_shg
from .errors import InfeasibleError, MultipleRootsError, RootFindingError
from .raman import raman_shifted_wavelengths

SERIES_CUTOFF = 1e-4
SPLITTING_PENALTY_DB = 10 * math.log10(4.0)
DEFAULT_CAP_DB = 200.0


def sinc(x):
    """sin(x)/x with a series branch for |x| < 1e-4."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    x2 = x * x
    out = np.where(small, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(safe) / safe)
    return float(out) if out.ndim == 0 else out


# sinc^2(x) = 1/2
SINC2_HALF_X = brentq(lambda x: sinc(x) ** 2 - 0.5, 1.0, 2.0, xtol=1e-15)


def _mismatch(model, spec, wl):
    return delta_k_shg(model, spec, spec.pump_mode, spec.sh_mode, wl)


def default_bracket(model, spec):
    """Pump wavelengths for which both the pump and its second harmonic are in range."""
    lo_p, hi_p = model.curve(spec.pump_mode).interval
    lo_s, hi_s = model.curve(spec.sh_mode).interval
    lo, hi = max(lo_p, 2 * lo_s), min(hi_p, 2 * hi_s)
    if not lo < hi:
        raise RootFindingError("pump and second-harmonic validity intervals do not overlap")
    return lo, hi


def find_pm_wavelength(model, spec, bracket=None, scan_points=2001):
    """Pump wavelength (nm) where the SHG mismatch vanishes.

    The bracket is scanned for sign changes; a single one is refined with
    Brent's method. Several sign changes raise :class:`MultipleRootsError`
    carrying every refined root.
    """
    lo, hi = bracket if bracket is not None else default_bracket(model, spec)
    grid = np.linspace(lo, hi, scan_points)
    dk = _mismatch(model, spec, grid)
    scale = np.max(np.abs(_mismatch(model, spec, np.array([lo, hi]))))
    if np.all(np.abs(dk) <= 1e-12 * max(1.0, scale)):
        raise RootFindingError("mismatch vanishes identically over the bracket; no isolated root")

    roots = []
    f = lambda wl: _mismatch(model, spec, wl)
    for i in range(scan_points - 1):
        a, b = dk[i], dk[i + 1]
        if a == 0.0:
            roots.append(float(grid[i]))
        elif a * b < 0:
            roots.append(brentq(f, grid[i], grid[i + 1], xtol=1e-13, rtol=4 * np.finfo(float).eps))
    if dk[-1] == 0.0:
        roots.append(float(grid[-1]))
    if not roots:
        raise RootFindingError(f"SHG mismatch does not change sign over [{lo}, {hi}] nm")
    if len(roots) > 1:
        raise MultipleRootsError(roots)
    return roots[0]


@dataclass(frozen=True)
class ShgSpectrum:
    wavelength_nm: np.ndarray
    values: np.ndarray
    normalized: bool
    units: str = "W"

    def __post_init__(self):
        if np.any(np.diff(self.wavelength_nm) <= 0):
            raise ValueError("spectrum wavelengths must be strictly increasing")

    @property
    def peak_wavelength(self):
        return float(self.wavelength_nm[np.argmax(self.values)])

    def normalize(self):
        return ShgSpectrum(self.wavelength_nm, self.values / np.max(self.values), True, "relative")


def shg_power(spec, pump_mw, dk_rad_per_um):
    """Undepleted SH power (W): kappa^2 P^2 L^2 sinc^2(dk L / 2)."""
    p_w = np.asarray(pump_mw, dtype=float) * 1e-3
    x = np.asarray(dk_rad_per_um) * spec.length_um / 2
    return (spec.eta_shg / 100.0) * p_w**2 * spec.length_cm**2 * sinc(x) ** 2


def shg_spectrum(model, spec, pump_mw, wl_range, n_samples, normalize=False, floor=0.0):
    """Sampled SHG response versus pump wavelength.

    ``floor`` (relative to the peak) emulates a measured suppression floor;
    zero reproduces the ideal sinc^2.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    wl = np.linspace(wl_range[0], wl_range[1], int(n_samples))
    dk = _mismatch(model, spec, wl)
    peak = shg_power(spec, pump_mw, 0.0)
    values = shg_power(spec, pump_mw, dk)
    if floor > 0:
        values = np.maximum(values, floor * peak)
    out = ShgSpectrum(wl, values, False)
    return out.normalize() if normalize else out


def shg_bandwidth_fwhm(model, spec, bracket=None):
    """FWHM of the SHG sinc^2 response in pump optical frequency, GHz."""
    lo, hi = bracket if bracket is not None else default_bracket(model, spec)
    wl0 = find_pm_wavelength(model, spec, (lo, hi))
    half = lambda wl: abs(_mismatch(model, spec, wl)) * spec.length_um / 2 - SINC2_HALF_X
    # walk outwards from the root until the half-maximum is crossed
    edges = []
    for direction, limit in ((-1, lo), (+1, hi)):
        step = 0.05
        inner = wl0
        while True:
            outer = wl0 + direction * step
            if (direction < 0 and outer <= limit) or (direction > 0 and outer >= limit):
                outer = limit
            if half(outer) > 0:
                break
            if outer == limit:
                raise RootFindingError("half-maximum not reached inside the bracket")
            inner = outer
            step *= 1.5
        a, b = sorted((inner, outer))
        edges.append(brentq(half, a, b, xtol=1e-12, rtol=4 * np.finfo(float).eps))
    blue, red = edges
    return (C_NM_PER_S / blue - C_NM_PER_S / red) / 1e9


def _suppression_db(sinc2, cap_db):
    with np.errstate(divide="ignore"):
        db = -10.0 * np.log10(sinc2)
    return np.minimum(db, cap_db)


class SuppressionBudget(NamedTuple):
    sfg_peak_db_rel: float  # SFG level relative to perfect phase matching (<= 0)
    shg1_db: float  # single-pump SHG of pump 1 below the phase-matched SFG peak
    shg2_db: float
    total_min_suppression: float


def suppression_budget(model, spec, wl1_nm, wl2_nm, cap_db=DEFAULT_CAP_DB):
    """Single-pump SHG suppression relative to the dual-pump SFG at equal total power.

    Each pump carries half the power, so its own SHG starts 6.02 dB below
    the SFG peak before its sinc^2 detuning loss is added. Suppressions at
    a sinc null saturate at ``cap_db``.
    """
    half_l = spec.length_um / 2
    sf = sinc(delta_k_sfg(model, spec, spec.pump_mode, spec.pump_mode, spec.sh_mode, wl1_nm, wl2_nm) * half_l) ** 2
    s1 = sinc(_mismatch(model, spec, wl1_nm) * half_l) ** 2
    s2 = sinc(_mismatch(model, spec, wl2_nm) * half_l) ** 2
    sfg_rel = -float(_suppression_db(sf, cap_db))
    shg1 = float(_suppression_db(s1, cap_db)) + SPLITTING_PENALTY_DB
    shg2 = float(_suppression_db(s2, cap_db)) + SPLITTING_PENALTY_DB
    return SuppressionBudget(sfg_rel, shg1, shg2, min(shg1, shg2))


@dataclass(frozen=True)
class PumpPlacement:
    wl1_nm: float
    wl2_nm: float
    wl_degenerate_nm: float
    suppression_db: float
    raman_clearance_nm: float

    @classmethod
    def from_pumps(cls, wl1_nm, wl2_nm, suppression_db, raman_clearance_nm):
        wl_d = 2.0 / (1.0 / wl1_nm + 1.0 / wl2_nm)
        return cls(wl1_nm, wl2_nm, wl_d, suppression_db, raman_clearance_nm)


def raman_clearance(wl1_nm, wl2_nm, raman_shifts, wl_d_nm=None):
    """Distance (nm) from the degenerate wavelength to the nearest Raman line of either pump."""
    if wl_d_nm is None:
        wl_d_nm = 2.0 / (1.0 / wl1_nm + 1.0 / wl2_nm)
    if len(raman_shifts) == 0:
        return math.inf
    lines = raman_shifted_wavelengths(wl1_nm, raman_shifts) + raman_shifted_wavelengths(wl2_nm, raman_shifts)
    return min(abs(wl_d_nm - w) for pair in lines for w in pair)


def optimize_pump_placement(
    model,
    spec,
    min_detuning_nm=5.0,
    max_detuning_nm=50.0,
    raman_shifts=(),
    raman_margin_nm=0.0,
    pm_wavelength_nm=None,
    grid_points=4001,
    cap_db=DEFAULT_CAP_DB,
):
    """Best frequency-symmetric pump pair around the SHG phase-matched point.

    Pumps sit at omega_D -/+ Delta. Both pumps must lie between
    ``min_detuning_nm`` and ``max_detuning_nm`` from lambda_D, and lambda_D
    must clear every Raman line of either pump by ``raman_margin_nm``
    (``raman_shifts`` in cm^-1 or :class:`RamanLine`). The worst-pump
    suppression is maximized by a grid scan refined with a bounded scalar
    search; the result is deterministic.
    """
    wl_d = find_pm_wavelength(model, spec) if pm_wavelength_nm is None else pm_wavelength_nm
    nu_d = C_NM_PER_S / wl_d
    lo_p, hi_p = model.curve(spec.pump_mode).interval

    # blue pump sets the lower Delta bound, red pump the upper one
    dnu_min = C_NM_PER_S / (wl_d - min_detuning_nm) - nu_d
    dnu_max = nu_d - C_NM_PER_S / (wl_d + max_detuning_nm)
    dnu_max = min(dnu_max, nu_d - C_NM_PER_S / hi_p, C_NM_PER_S / lo_p - nu_d)
    if not dnu_min < dnu_max:
        raise InfeasibleError("detuning bounds leave no admissible pump separation")

    def pumps(dnu):
        return C_NM_PER_S / (nu_d - dnu), C_NM_PER_S / (nu_d + dnu)

    def objective(dnu):
        wl1, wl2 = pumps(dnu)
        return suppression_budget(model, spec, wl1, wl2, cap_db).total_min_suppression

    def feasible(dnu):
        wl1, wl2 = pumps(dnu)
        return raman_clearance(wl1, wl2, raman_shifts, wl_d) >= raman_margin_nm

    grid = np.linspace(dnu_min, dnu_max, int(grid_points))
    ok = np.array([feasible(d) for d in grid])
    if not ok.any():
        raise InfeasibleError(f"no pump separation keeps lambda_D {raman_margin_nm} nm clear of Raman lines")
    wl1g, wl2g = pumps(grid)
    half_l = spec.length_um / 2
    s1 = _suppression_db(sinc(_mismatch(model, spec, wl1g) * half_l) ** 2, cap_db)
    s2 = _suppression_db(sinc(_mismatch(model, spec, wl2g) * half_l) ** 2, cap_db)
    score = np.where(ok, np.minimum(s1, s2), -np.inf)
    i = int(np.argmax(score))
    best_dnu, best = grid[i], objective(grid[i])

    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    if b > a and best < cap_db + SPLITTING_PENALTY_DB:
        res = minimize_scalar(lambda d: -objective(d), bounds=(a, b), method="bounded", options={"xatol": 1e-6 * (b - a)})
        if res.success and -res.fun > best and feasible(res.x):
            best_dnu = float(res.x)

    wl1, wl2 = pumps(best_dnu)
    budget = suppression_budget(model, spec, wl1, wl2, cap_db)
    return PumpPlacement.from_pumps(
        float(wl1), float(wl2), budget.total_min_suppression, raman_clearance(wl1, wl2, raman_shifts)
    )
