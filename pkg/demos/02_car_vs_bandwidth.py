"""CAR of the cascaded source against filter bandwidth, analytic and simulated.

Both pumps stay at 0.9 / 1.7 mW. Pairs grow linearly with bandwidth while
Raman noise grows with it too, so accidentals go as bandwidth squared and
CAR falls as 1/bandwidth.

Run: python demos/02_car_vs_bandwidth.py
"""

import numpy as np

from cascadepair import presets
from cascadepair.mcsim import PairSource, car_from_histogram, simulate
from cascadepair.pairgen import car_model, fit_inverse_law, pgr_from_brightness

P1, P2 = 0.9, 1.7
chain = presets.device_chain(integration_time_s=20.0)
window = chain.default_window_s
raman = presets.RAMAN_DENSITY * (P1 + P2)

bws = np.array([0.1, 0.2, 0.5, 1.0, 1.5, 2.0])
analytic, mc = [], []
for i, bw in enumerate(bws):
    pgr = pgr_from_brightness(presets.BRIGHTNESS, bw, P1, P2)
    analytic.append(
        car_model(pgr * chain.pair_efficiency, raman, chain.dark_rate_hz[0], bw, window,
                  photon_efficiency=chain.photon_efficiency(0), jitter_fwhm_s=chain.jitter_fwhm_s)
    )
    h = simulate(chain, PairSource(pgr, raman * bw), (7, i))
    mc.append(car_from_histogram(h, window))

print(" bw(nm)   analytic        MC")
for bw, a, e in zip(bws, analytic, mc):
    print(f"{bw:7.1f} {a:10.1f}  {e.car:8.1f} +- {e.uncertainty:.1f}")

a, k = fit_inverse_law(bws, analytic)
print(f"fit a*x^k: a = {a:.1f}, k = {k:.3f}")
