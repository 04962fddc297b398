"""Photon-pair figures of merit: JSA, generation rate, brightness, parasitic rates, CAR.

Rates are in Hz, pump powers in mW, detection bandwidths in nm, and
brightness in Hz/nm/mW^2 with B = PGR / (4 dl P1 P2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import erf

from .dispersion import delta_k_sfg, nm_from_omega
from .phasematch import sinc, suppression_budget

CAR_SENTINEL = 1e12
FWHM_PER_SIGMA = 2 * math.sqrt(2 * math.log(2))


@dataclass(frozen=True)
class PumpEnvelope:
    """Spectral envelope of the SPDC pump (the generated SF wave).

    ``kind`` is ``"cw"`` (single line at ``omega_sf``) or ``"gaussian"``
    with RMS width ``sigma`` in rad/s.
    """

    omega_sf: float
    kind: str = "cw"
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("cw", "gaussian"):
            raise ValueError(f"unknown pump envelope {self.kind!r}")
        if self.kind == "gaussian" and not self.sigma > 0:
            raise ValueError("gaussian envelope needs a positive width")

    def __call__(self, omega_sum, cell):
        detuning = omega_sum - self.omega_sf
        if self.kind == "cw":
            return (np.abs(detuning) <= cell / 2).astype(float)
        return np.exp(-(detuning**2) / (4 * self.sigma**2))


@dataclass(frozen=True)
class JsaGrid:
    omega1: np.ndarray
    omega2: np.ndarray
    amplitude: np.ndarray  # f[i, j] at (omega1[i], omega2[j])
    envelope: str
    raw_norm: float  # integral of |f|^2 before normalization

    @property
    def intensity(self):
        return np.abs(self.amplitude) ** 2

    def norm(self):
        d1 = self.omega1[1] - self.omega1[0]
        d2 = self.omega2[1] - self.omega2[0]
        return float(self.intensity.sum() * d1 * d2)

    def to_csv(self, path):
        """Dense |f|^2 matrix; header comments carry both axes (rad/s)."""
        path = Path(path)
        lines = [
            f"# envelope={self.envelope}; rows=omega1, columns=omega2; values=|f|^2 in s^2/rad^2",
            "# omega1_rad_per_s=" + " ".join(repr(float(w)) for w in self.omega1),
            "# omega2_rad_per_s=" + " ".join(repr(float(w)) for w in self.omega2),
        ]
        lines += [",".join(repr(float(v)) for v in row) for row in self.intensity]
        path.write_text("\n".join(lines) + "\n")
        return path


def _uniform_step(axis, name):
    axis = np.asarray(axis, dtype=float)
    if axis.ndim != 1 or len(axis) < 2:
        raise ValueError(f"{name} axis needs at least two points")
    steps = np.diff(axis)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise ValueError(f"{name} axis must be uniform and increasing")
    return axis, float(steps[0])


def jsa(model, spec, envelope, omega1, omega2):
    """Joint spectral amplitude f = alpha * phi on a uniform frequency grid.

    phi = sinc(dk L/2) exp(i dk L/2) with dk the SFG mismatch of the pair
    (both photons in the pump mode, SF wave in the SH mode); alpha is the
    pump envelope. Normalized so the integral of |f|^2 is one.
    """
    w1, d1 = _uniform_step(omega1, "omega1")
    w2, d2 = _uniform_step(omega2, "omega2")
    W1, W2 = np.meshgrid(w1, w2, indexing="ij")
    dk = delta_k_sfg(model, spec, spec.pump_mode, spec.pump_mode, spec.sh_mode, nm_from_omega(W1), nm_from_omega(W2))
    x = dk * spec.length_um / 2
    phi = sinc(x) * np.exp(1j * x)
    alpha = envelope(W1 + W2, max(d1, d2))
    f = alpha * phi
    raw = float(np.sum(np.abs(f) ** 2) * d1 * d2)
    if raw == 0:
        raise ValueError("pump envelope has no support on the grid")
    return JsaGrid(w1, w2, f / math.sqrt(raw), envelope.kind, raw)


@dataclass(frozen=True)
class PairRates:
    pgr_onchip: float
    pgr_detected: float
    bandwidth_nm: float
    p1_mw: float
    p2_mw: float

    @property
    def brightness(self):
        return brightness_from_pgr(self.pgr_onchip, self.bandwidth_nm, self.p1_mw, self.p2_mw)


def brightness_from_pgr(pgr_onchip, bandwidth_nm, p1_mw, p2_mw):
    return pgr_onchip / (4 * bandwidth_nm * p1_mw * p2_mw)


def pgr_from_brightness(brightness, bandwidth_nm, p1_mw, p2_mw):
    return 4 * brightness * bandwidth_nm * p1_mw * p2_mw


def pgr_dual_pump(brightness, p1_mw, p2_mw, bandwidth_nm, chain_efficiency=1.0):
    """On-chip and detected dual-pump pair rates.

    ``chain_efficiency`` is the pair detection efficiency (product of the two
    per-photon chain efficiencies).
    """
    if min(brightness, p1_mw, p2_mw, bandwidth_nm) < 0 or not 0 <= chain_efficiency <= 1:
        raise ValueError("rates, powers and bandwidth must be non-negative; efficiency in [0, 1]")
    onchip = pgr_from_brightness(brightness, bandwidth_nm, p1_mw, p2_mw)
    return PairRates(onchip, onchip * chain_efficiency, bandwidth_nm, p1_mw, p2_mw)


def pump_product_for_rate(pgr_onchip, brightness, bandwidth_nm):
    """P1*P2 (mW^2) that yields ``pgr_onchip`` at the given brightness."""
    return pgr_onchip / (4 * brightness * bandwidth_nm)


def single_pump_suppression_db(model, spec, pump_nm, cap_db=200.0):
    """Suppression of one pump's cSHG/SPDC below the DP process, including the 6.02 dB split."""
    return suppression_budget(model, spec, pump_nm, pump_nm, cap_db).shg1_db


def sp_parasitic_pgr(brightness, pump_mw, bandwidth_nm, suppression_db=None, *, model=None, spec=None, pump_nm=None):
    """Single-pump cSHG/SPDC rate into the degenerate band (Hz).

    Equal-power dual-pump rate attenuated by ``suppression_db``. Without an
    explicit value the pump's own suppression (sinc^2 detuning plus the
    pump-splitting factor) is computed from ``model``/``spec``.
    """
    if suppression_db is None:
        if model is None or spec is None or pump_nm is None:
            raise ValueError("need suppression_db or model, spec and pump_nm")
        suppression_db = single_pump_suppression_db(model, spec, pump_nm)
    return pgr_from_brightness(brightness, bandwidth_nm, pump_mw, pump_mw) * 10 ** (-suppression_db / 10)


def suppression_db(pgr_dp, pgr_sp):
    if not (pgr_dp > 0 and pgr_sp > 0):
        raise ValueError("both rates must be positive")
    return 10 * math.log10(pgr_dp / pgr_sp)


def window_capture(window_s, jitter_fwhm_s):
    """Fraction of true coincidences inside a centered window.

    The cross-arm delay of a pair is Gaussian with sqrt(2) times the
    single-detector jitter.
    """
    if jitter_fwhm_s <= 0:
        return 1.0
    sigma = math.sqrt(2) * jitter_fwhm_s / FWHM_PER_SIGMA
    return float(erf(window_s / 2 / (math.sqrt(2) * sigma)))


@dataclass(frozen=True)
class CarTerms:
    car: float
    singles_a: float
    singles_b: float
    true_rate: float
    accidental_rate: float


def car_terms(pgr_detected, raman_rate, dark_rate, bandwidth_nm, window_s, photon_efficiency=1.0, splitter_ratio=0.5, jitter_fwhm_s=0.0):
    """Analytic CAR and the singles/coincidence rates behind it.

    ``pgr_detected`` counts pairs with both photons detected, i.e. on-chip
    rate times ``photon_efficiency``^2 (symmetric arms). ``raman_rate`` is
    the detected Raman spectral density per arm (Hz/nm), so the Raman
    singles scale with ``bandwidth_nm``; ``dark_rate`` is per arm (Hz).
    Pairs are Poissonian: accidentals in any window are S_a S_b tau, true
    coincidences 2 s (1 - s) R_det times the window capture fraction, and
    CAR = (true + accidental) / accidental.
    """
    if not window_s > 0:
        raise ValueError("coincidence window must be positive")
    if min(pgr_detected, raman_rate, dark_rate, bandwidth_nm) < 0:
        raise ValueError("rates and bandwidth must be non-negative")
    if not 0 < photon_efficiency <= 1:
        raise ValueError("photon efficiency must be in (0, 1]")
    s = splitter_ratio
    onchip = pgr_detected / photon_efficiency**2
    noise = raman_rate * bandwidth_nm + dark_rate
    sa = 2 * onchip * photon_efficiency * s + noise
    sb = 2 * onchip * photon_efficiency * (1 - s) + noise
    true = 2 * s * (1 - s) * pgr_detected * window_capture(window_s, jitter_fwhm_s)
    acc = sa * sb * window_s
    car = CAR_SENTINEL if acc == 0 else (true + acc) / acc
    return CarTerms(min(car, CAR_SENTINEL), sa, sb, true, acc)


def car_model(pgr_detected, raman_rate, dark_rate, bandwidth_nm, window_s, **chain):
    """Coincidence-to-accidental ratio; see :func:`car_terms` for the model."""
    return car_terms(pgr_detected, raman_rate, dark_rate, bandwidth_nm, window_s, **chain).car


def fit_inverse_law(x, y):
    """Fit y = a * x^k on log-log axes; returns (a, k)."""
    k, log_a = np.polyfit(np.log(x), np.log(y), 1)
    return float(math.exp(log_a)), float(k)

