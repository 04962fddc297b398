"""Where the device phase matches, and how far down each pump's own SHG sits.

Run: python demos/01_phase_matching.py
"""

import numpy as np

from cascadepair import presets
from cascadepair.phasematch import find_pm_wavelength, optimize_pump_placement, shg_bandwidth_fwhm, shg_spectrum, suppression_budget
from cascadepair.raman import LN_LINES

model, spec = presets.tfln_model(), presets.tfln_waveguide()

wl_pm = find_pm_wavelength(model, spec)
print(f"SHG phase matching at {wl_pm:.3f} nm, FWHM {shg_bandwidth_fwhm(model, spec):.1f} GHz")

sp = shg_spectrum(model, spec, 1.0, (1500, 1570), 1401).normalize()
for wl in (1513.56, 1530.0, 1534.0, 1538.0, 1555.05):
    i = np.argmin(np.abs(sp.wavelength_nm - wl))
    print(f"  {wl:8.2f} nm  {10 * np.log10(max(sp.values[i], 1e-20)):7.2f} dB")

# the configured pumps: each has half the power, hence the extra 6 dB
b = suppression_budget(model, spec, *presets.PUMP_WAVELENGTHS_NM)
print(f"pump 1 SHG {b.shg1_db:.2f} dB, pump 2 SHG {b.shg2_db:.2f} dB below the SFG peak")

best = optimize_pump_placement(model, spec, raman_shifts=LN_LINES, raman_margin_nm=1.0)
print(
    f"best symmetric pair: {best.wl1_nm:.2f} / {best.wl2_nm:.2f} nm, "
    f"{best.suppression_db:.1f} dB, Raman clearance {best.raman_clearance_nm:.2f} nm"
)
