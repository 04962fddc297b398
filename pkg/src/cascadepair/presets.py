"""Calibrated configuration of the layer-poled TFLN device.

The effective-index curves are a calibration, not a mode-solver output:
TE00 (telecom) and TE01 (near-visible) are matched at a 1534 nm pump, with
group-index mismatch and curvature chosen so that pumps at 1513.56 and
1555.05 nm both sit ~34 dB down the SHG sinc^2 response.
"""

from .dispersion import TE00, TE01, DispersionCurve, DispersionModel, Poling, PolingScheme, WaveguideSpec

PM_WAVELENGTH_NM = 1534.0
PUMP_WAVELENGTHS_NM = (1513.56, 1555.05)
LENGTH_CM = 0.445
ETA_SHG = 250.0  # %/W/cm^2
BRIGHTNESS = 1.0e5  # Hz/nm/mW^2

TE00_COEFFS = (1.85, -3.2e-4, -2.0e-8)
TE01_COEFFS = (1.85, -7.731e-4, 2.0e-7)


def tfln_model():
    return DispersionModel(
        {
            TE00: DispersionCurve(TE00_COEFFS, (1400.0, 1700.0), center=PM_WAVELENGTH_NM),
            TE01: DispersionCurve(TE01_COEFFS, (700.0, 850.0), center=PM_WAVELENGTH_NM / 2),
        }
    )


def tfln_waveguide(length_cm=LENGTH_CM):
    return WaveguideSpec(
        length_cm=length_cm,
        eta_shg=ETA_SHG,
        poling=PolingScheme(Poling.MPM),
        losses_db_per_cm={TE00: 0.0, TE01: 0.0},
        facet_loss_db=5.0,
        pump_mode=TE00,
        sh_mode=TE01,
    )


def qpm_model():
    """Single-mode model for first-order QPM tests; TE00 covers both bands.

    The index rises with wavelength so that 2k_p - k_SH > 0 and the grating
    term (subtracted) can cancel it with a positive period.
    """
    return DispersionModel({TE00: DispersionCurve((2.14, 1.2e-4, 6.0e-8), (700.0, 1700.0), center=1000.0)})


# Detection chain of the dual-pump measurement: output facet, waveshaper
# notch, three CWDM stages, 50/50 splitter, two SNSPDs.
JITTER_FWHM_S = 50e-12
# detected Raman singles per arm, per nm of bandwidth and per mW of total
# pump power; set so that CAR = 372 at 1 nm with pumps of 0.9 and 1.7 mW
# in the default 290 ps coincidence window
RAMAN_DENSITY = 1.757e4
DARK_RATE_HZ = 100.0


def device_chain(bandwidth_nm=1.0, integration_time_s=1.0, bin_width_s=10e-12):
    from .mcsim import DetectionChain, FilterStage

    stages = (FilterStage(PM_WAVELENGTH_NM, bandwidth_nm, 40.0, 5.0),) + (FilterStage(1530.0, 13.0, 30.0, 1.0),) * 3
    return DetectionChain(
        facet_loss_db=5.0,
        filter_stages=stages,
        splitter_ratio=0.5,
        detector_efficiency=(0.85, 0.85),
        dark_rate_hz=(DARK_RATE_HZ, DARK_RATE_HZ),
        jitter_fwhm_s=JITTER_FWHM_S,
        bin_width_s=bin_width_s,
        integration_time_s=integration_time_s,
    )
