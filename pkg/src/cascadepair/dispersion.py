"""Effective-index curves and phase-mismatch primitives.

All wavelengths are vacuum wavelengths in nm. Wavenumbers are returned in
rad/um, so a mismatch times a length in um is a phase in radians.

Each optical mode carries a polynomial n_eff(lambda) in powers of
``(lambda - center)`` that is only trusted inside a declared interval.
Evaluating outside that interval raises instead of extrapolating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.constants import c as C_M_PER_S

from .errors import UnknownModeError, WavelengthRangeError

C_NM_PER_S = C_M_PER_S * 1e9

TE00 = "TE00"
TE01 = "TE01"


def omega_from_nm(wavelength_nm):
    """Angular frequency (rad/s) of a vacuum wavelength in nm."""
    return 2 * np.pi * C_NM_PER_S / np.asarray(wavelength_nm, dtype=float)


def nm_from_omega(omega):
    return 2 * np.pi * C_NM_PER_S / np.asarray(omega, dtype=float)


def sum_frequency_nm(wl1_nm, wl2_nm):
    """Wavelength of the sum-frequency wave, (1/l1 + 1/l2)^-1."""
    return 1.0 / (1.0 / np.asarray(wl1_nm, dtype=float) + 1.0 / np.asarray(wl2_nm, dtype=float))


@dataclass(frozen=True)
class DispersionCurve:
    """n_eff(lambda) = sum_i coefficients[i] * (lambda - center)**i over [lo, hi] nm."""

    coefficients: tuple
    interval: tuple
    center: float = 0.0

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs:
            raise ValueError("dispersion curve needs at least one coefficient")
        lo, hi = (float(v) for v in self.interval)
        if not lo < hi:
            raise ValueError(f"empty validity interval [{lo}, {hi}]")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "interval", (lo, hi))
        object.__setattr__(self, "center", float(self.center))

    def __call__(self, wavelength_nm):
        # Horner form; np.polyval wants highest order first
        return np.polyval(self.coefficients[::-1], np.asarray(wavelength_nm, dtype=float) - self.center)

    def in_range(self, wavelength_nm):
        wl = np.asarray(wavelength_nm, dtype=float)
        lo, hi = self.interval
        # absorbs round-off from l1*l2/(l1+l2) at the interval edges
        slack = 1e-12 * hi
        return (wl >= lo - slack) & (wl <= hi + slack)

    def min_index(self, samples=2001):
        """Smallest n_eff over the validity interval (dense sampling plus endpoints)."""
        grid = np.linspace(*self.interval, samples)
        return float(np.min(self(grid)))


@dataclass(frozen=True)
class DispersionModel:
    curves: Mapping[str, DispersionCurve]

    def __post_init__(self):
        object.__setattr__(self, "curves", dict(self.curves))
        for mode, curve in self.curves.items():
            if curve.min_index() <= 1.0:
                raise ValueError(f"mode {mode!r}: n_eff must exceed 1 over its validity interval")

    @property
    def modes(self):
        return tuple(self.curves)

    def curve(self, mode):
        try:
            return self.curves[mode]
        except KeyError:
            raise UnknownModeError(mode, self.curves) from None

    @classmethod
    def constant(cls, index, modes=(TE00, TE01), interval=(300.0, 3000.0)):
        """Dispersionless model: every mode has the same constant index."""
        return cls({m: DispersionCurve((index,), interval) for m in modes})


class Poling:
    NONE = "none"
    QPM = "qpm"
    MPM = "layer-poled-mpm"


@dataclass(frozen=True)
class PolingScheme:
    kind: str = Poling.MPM
    period_um: float | None = None
    order: int = 1

    def __post_init__(self):
        if self.kind not in (Poling.NONE, Poling.QPM, Poling.MPM):
            raise ValueError(f"unknown poling kind {self.kind!r}")
        if self.kind == Poling.QPM:
            if self.period_um is None or not self.period_um > 0:
                raise ValueError("QPM poling requires a positive period")
            if int(self.order) < 1:
                raise ValueError("QPM order must be a positive integer")

    @property
    def grating_wavenumber(self):
        """Grating vector 2*pi*m/Lambda in rad/um (zero without QPM)."""
        if self.kind != Poling.QPM:
            return 0.0
        return 2 * math.pi * self.order / self.period_um


@dataclass(frozen=True)
class WaveguideSpec:
    """Physical device under simulation.

    ``eta_shg`` is the normalized SHG efficiency in %/W/cm^2; the coupling
    kappa_SHG (W^-1/2 cm^-1) is derived from it. ``sfg_coupling_factor``
    is kappa_SFG / kappa_SHG; the default of 2 makes non-degenerate SFG with
    P1 = P2 = P/2 reproduce SHG driven by P.
    """

    length_cm: float
    eta_shg: float
    poling: PolingScheme = field(default_factory=PolingScheme)
    losses_db_per_cm: Mapping[str, float] = field(default_factory=dict)
    facet_loss_db: float = 0.0
    pump_mode: str = TE00
    sh_mode: str = TE01
    sfg_coupling_factor: float = 2.0

    def __post_init__(self):
        if not self.length_cm > 0:
            raise ValueError("waveguide length must be positive")
        if self.eta_shg < 0:
            raise ValueError("eta_shg must be non-negative")
        if self.facet_loss_db < 0:
            raise ValueError("facet loss must be non-negative")
        losses = dict(self.losses_db_per_cm)
        for mode, loss in losses.items():
            if loss < 0:
                raise ValueError(f"propagation loss of {mode!r} must be non-negative")
        object.__setattr__(self, "losses_db_per_cm", losses)

    @classmethod
    def from_kappa(cls, length_cm, kappa_shg, **kwargs):
        return cls(length_cm=length_cm, eta_shg=100.0 * kappa_shg**2, **kwargs)

    @property
    def kappa_shg(self):
        return math.sqrt(self.eta_shg / 100.0)

    @property
    def kappa_sfg(self):
        return self.sfg_coupling_factor * self.kappa_shg

    @property
    def length_um(self):
        return self.length_cm * 1e4

    def power_loss_per_cm(self, mode):
        """Power attenuation coefficient (1/cm) of a mode."""
        return self.losses_db_per_cm.get(mode, 0.0) * math.log(10) / 10

    def with_length(self, length_cm):
        return WaveguideSpec(
            length_cm=length_cm,
            eta_shg=self.eta_shg,
            poling=self.poling,
            losses_db_per_cm=self.losses_db_per_cm,
            facet_loss_db=self.facet_loss_db,
            pump_mode=self.pump_mode,
            sh_mode=self.sh_mode,
            sfg_coupling_factor=self.sfg_coupling_factor,
        )


def n_eff(model, mode, wavelength_nm):
    curve = model.curve(mode)
    wl = np.asarray(wavelength_nm, dtype=float)
    if not np.all(curve.in_range(wl)):
        bad = wl[~curve.in_range(wl)] if wl.ndim else wl
        raise WavelengthRangeError(mode, float(np.ravel(bad)[0]), curve.interval)
    value = curve(wl)
    return float(value) if np.ndim(value) == 0 else value


def wavenumber(model, mode, wavelength_nm):
    """k = 2*pi*n_eff/lambda in rad/um."""
    wl_um = np.asarray(wavelength_nm, dtype=float) * 1e-3
    k = 2 * np.pi * n_eff(model, mode, wavelength_nm) / wl_um
    return float(k) if np.ndim(k) == 0 else k


def delta_k_sfg(model, spec, mode1, mode2, sf_mode, wl1_nm, wl2_nm):
    """k1 + k2 - k_SF - K_grating, in rad/um."""
    wl_sf = sum_frequency_nm(wl1_nm, wl2_nm)
    dk = (
        wavenumber(model, mode1, wl1_nm)
        + wavenumber(model, mode2, wl2_nm)
        - wavenumber(model, sf_mode, wl_sf)
        - spec.poling.grating_wavenumber
    )
    return float(dk) if np.ndim(dk) == 0 else dk


def delta_k_shg(model, spec, pump_mode, sh_mode, wl_pump_nm):
    """2*k_p - k_SH - K_grating, in rad/um.

    Shares the SFG code path so that delta_k_sfg(l, l) == delta_k_shg(l)
    bit for bit.
    """
    return delta_k_sfg(model, spec, pump_mode, pump_mode, sh_mode, wl_pump_nm, wl_pump_nm)


def qpm_period_um(model, pump_mode, sh_mode, wl_pump_nm, order=1):
    """Poling period that cancels the SHG mismatch at ``wl_pump_nm``."""
    bare = delta_k_shg(model, WaveguideSpec(1.0, 0.0, PolingScheme(Poling.NONE)), pump_mode, sh_mode, wl_pump_nm)
    if bare <= 0:
        raise ValueError("first-order QPM needs a positive bare mismatch 2k_p - k_SH")
    return 2 * math.pi * order / bare
