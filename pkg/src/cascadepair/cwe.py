"""Coupled-wave integration of SFG and SHG with loss and pump depletion.

Amplitudes are normalized so that |A|^2 is the optical power in W and z is
in cm. The three-wave SFG system is

    dA1/dz  = -i k1 A_SF A2* exp(-i dk z) - a1/2 A1
    dA2/dz  = -i k2 A_SF A1* exp(-i dk z) - a2/2 A2
    dASF/dz = -i k3 A1 A2 exp(+i dk z)   - a3/2 A_SF

with k3 = kappa_SFG and k1,2 = k3 * omega_1,2 / omega_SF, the choice that
conserves photon flux. The SHG system is the degenerate two-wave version
with kappa_SHG on both equations. Undepleted and lossless, both reduce to
the sinc^2 closed forms.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .dispersion import delta_k_sfg, delta_k_shg, omega_from_nm, sum_frequency_nm
from .errors import IntegrationError
from .phasematch import sinc

MIN_STEPS = 16
REFERENCE_ETA_SHG = 250.0  # %/W/cm^2
REFERENCE_LENGTH_CM = 0.445


@dataclass(frozen=True)
class PumpConfig:
    """One or two CW pump lines (on-chip power in mW, optional input phase)."""

    wavelengths_nm: tuple
    powers_mw: tuple
    phases_rad: tuple = ()

    def __post_init__(self):
        wl = tuple(float(w) for w in np.atleast_1d(self.wavelengths_nm))
        p = tuple(float(x) for x in np.atleast_1d(self.powers_mw))
        ph = tuple(float(x) for x in self.phases_rad) or (0.0,) * len(wl)
        if len(wl) not in (1, 2) or len(p) != len(wl) or len(ph) != len(wl):
            raise ValueError("a pump config holds one or two lines with matching powers and phases")
        if any(x < 0 for x in p):
            raise ValueError("pump powers must be non-negative")
        object.__setattr__(self, "wavelengths_nm", wl)
        object.__setattr__(self, "powers_mw", p)
        object.__setattr__(self, "phases_rad", ph)

    @property
    def is_dual(self):
        return len(self.wavelengths_nm) == 2

    def amplitudes(self):
        return [math.sqrt(p * 1e-3) * cmath.exp(1j * ph) for p, ph in zip(self.powers_mw, self.phases_rad)]


@dataclass(frozen=True)
class Trajectory:
    z_cm: np.ndarray
    fields: np.ndarray  # (n_steps + 1, n_waves) complex
    wavelengths_nm: tuple
    labels: tuple

    @property
    def powers(self):
        return np.abs(self.fields) ** 2

    @property
    def photon_flux(self):
        """Power over angular frequency, proportional to photons per second."""
        return self.powers / omega_from_nm(np.array(self.wavelengths_nm))

    def final_power(self, label):
        return float(self.powers[-1, self.labels.index(label)])

    def to_csv(self, path):
        from ._io import write_csv

        cols = {"z_cm": self.z_cm}
        for i, lab in enumerate(self.labels):
            cols[f"{lab}_W"] = self.powers[:, i]
        for i, lab in enumerate(self.labels):
            cols[f"phase_{lab}_rad"] = np.angle(self.fields[:, i])
        return write_csv(path, cols)


def _rk4(rhs, y0, length_cm, z_steps):
    if z_steps < MIN_STEPS:
        raise ValueError(f"z_steps must be >= {MIN_STEPS}")
    h = length_cm / z_steps
    out = np.empty((z_steps + 1, len(y0)), dtype=complex)
    y = list(y0)
    out[0] = y
    for i in range(z_steps):
        z = i * h
        k1 = rhs(z, y)
        k2 = rhs(z + h / 2, [a + h / 2 * b for a, b in zip(y, k1)])
        k3 = rhs(z + h / 2, [a + h / 2 * b for a, b in zip(y, k2)])
        k4 = rhs(z + h, [a + h * b for a, b in zip(y, k3)])
        y = [a + h / 6 * (b1 + 2 * b2 + 2 * b3 + b4) for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)]
        if not all(cmath.isfinite(a) for a in y):
            raise IntegrationError(
                f"non-finite field at z = {(i + 1) * h:.6g} cm (step {i + 1}/{z_steps}); "
                f"reduce the step size or the input power"
            )
        out[i + 1] = y
    return np.linspace(0.0, length_cm, z_steps + 1), out


def integrate_sfg(spec, model, pumps, z_steps=400, sf_seed=0j):
    """Integrate dual-pump SFG along the waveguide; returns the full trajectory.

    ``sf_seed`` is the input sum-frequency amplitude (sqrt(W)); zero by default.
    """
    if not pumps.is_dual:
        raise ValueError("SFG needs two pump lines")
    wl1, wl2 = pumps.wavelengths_nm
    wl_sf = float(sum_frequency_nm(wl1, wl2))
    dk = 1e4 * delta_k_sfg(model, spec, spec.pump_mode, spec.pump_mode, spec.sh_mode, wl1, wl2)
    w1, w2, w3 = omega_from_nm([wl1, wl2, wl_sf])
    k3 = spec.kappa_sfg
    k1, k2 = k3 * w1 / w3, k3 * w2 / w3
    a1 = spec.power_loss_per_cm(spec.pump_mode) / 2
    a3 = spec.power_loss_per_cm(spec.sh_mode) / 2

    def rhs(z, y):
        e1, e2, e3 = y
        ph = cmath.exp(1j * dk * z)
        return [
            -1j * k1 * e3 * e2.conjugate() * ph.conjugate() - a1 * e1,
            -1j * k2 * e3 * e1.conjugate() * ph.conjugate() - a1 * e2,
            -1j * k3 * e1 * e2 * ph - a3 * e3,
        ]

    z, fields = _rk4(rhs, pumps.amplitudes() + [complex(sf_seed)], spec.length_cm, z_steps)
    return Trajectory(z, fields, (wl1, wl2, wl_sf), ("P1", "P2", "PSF"))


def integrate_shg(spec, model, pump, z_steps=400, sh_seed=0j):
    """Integrate single-pump SHG (two-wave system)."""
    if pump.is_dual:
        raise ValueError("SHG takes a single pump line")
    (wl,) = pump.wavelengths_nm
    dk = 1e4 * delta_k_shg(model, spec, spec.pump_mode, spec.sh_mode, wl)
    k = spec.kappa_shg
    ap = spec.power_loss_per_cm(spec.pump_mode) / 2
    ash = spec.power_loss_per_cm(spec.sh_mode) / 2

    def rhs(z, y):
        ep, esh = y
        ph = cmath.exp(1j * dk * z)
        return [
            -1j * k * esh * ep.conjugate() * ph.conjugate() - ap * ep,
            -1j * k * ep * ep * ph - ash * esh,
        ]

    z, fields = _rk4(rhs, pump.amplitudes() + [complex(sh_seed)], spec.length_cm, z_steps)
    return Trajectory(z, fields, (wl, wl / 2), ("PP", "PSH"))


def sfg_power_undepleted(spec, model, pumps):
    """Closed-form SF power (W) for undepleted, lossless pumps."""
    wl1, wl2 = pumps.wavelengths_nm
    p1, p2 = (p * 1e-3 for p in pumps.powers_mw)
    dk = delta_k_sfg(model, spec, spec.pump_mode, spec.pump_mode, spec.sh_mode, wl1, wl2)
    return spec.kappa_sfg**2 * p1 * p2 * spec.length_cm**2 * sinc(dk * spec.length_um / 2) ** 2


def shg_power_undepleted(spec, model, pump):
    (wl,) = pump.wavelengths_nm
    p = pump.powers_mw[0] * 1e-3
    dk = delta_k_shg(model, spec, spec.pump_mode, spec.sh_mode, wl)
    return spec.kappa_shg**2 * p * p * spec.length_cm**2 * sinc(dk * spec.length_um / 2) ** 2


def observed_order(coarse, medium, fine, refinement=2.0):
    """Convergence order from three solutions at step sizes h, h/r, h/r^2."""
    return math.log(abs(coarse - medium) / abs(medium - fine)) / math.log(refinement)


def cascaded_efficiency_scaling(eta_shg, length_cm, reference_eta=REFERENCE_ETA_SHG, reference_length_cm=REFERENCE_LENGTH_CM):
    """Cascaded SFG/SPDC figure of merit, proportional to eta_SHG^2 L^4.

    Normalized to 1 for the reference device (250 %/W/cm^2, 4.45 mm).
    """
    if not (eta_shg > 0 and length_cm > 0):
        raise ValueError("efficiency and length must be positive")
    return (eta_shg / reference_eta) ** 2 * (length_cm / reference_length_cm) ** 4
