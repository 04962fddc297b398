"""Monte Carlo of the detection chain: emission, loss, splitting, jitter, tagging.

Photon pairs and noise counts are generated as Poisson processes by
exponential inter-arrival sampling. The integration time is cut into
fixed slices, each driven by its own counter-based Philox stream keyed on
``(seed, slice index)``; slices can run on any number of threads and their
integer histograms are summed in slice order, so a seed fixes the output
bit for bit.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .errors import MemoryCapError
from .pairgen import FWHM_PER_SIGMA, pgr_from_brightness

THREADS_ENV = "CASCADEPAIR_THREADS"
SLICE_EVENTS = 250_000
DEFAULT_MAX_EVENTS = 50_000_000
# 95% Poisson upper limit for zero observed counts
ZERO_COUNT_UPPER = -math.log(0.05)


@dataclass(frozen=True)
class FilterStage:
    center_nm: float
    bandwidth_nm: float
    extinction_db: float
    insertion_db: float

    def __post_init__(self):
        if self.bandwidth_nm <= 0 or self.extinction_db < 0 or self.insertion_db < 0:
            raise ValueError("filter bandwidth must be positive and losses non-negative")


@dataclass(frozen=True)
class DetectionChain:
    facet_loss_db: float = 0.0
    filter_stages: tuple = ()
    splitter_ratio: float = 0.5
    detector_efficiency: tuple = (1.0, 1.0)
    dark_rate_hz: tuple = (0.0, 0.0)
    jitter_fwhm_s: float = 0.0
    bin_width_s: float = 10e-12
    integration_time_s: float = 1.0
    histogram_range_s: float = 5e-9

    def __post_init__(self):
        object.__setattr__(self, "filter_stages", tuple(self.filter_stages))
        object.__setattr__(self, "detector_efficiency", tuple(float(x) for x in self.detector_efficiency))
        object.__setattr__(self, "dark_rate_hz", tuple(float(x) for x in self.dark_rate_hz))
        if len(self.detector_efficiency) != 2 or len(self.dark_rate_hz) != 2:
            raise ValueError("detector efficiency and dark rate are given per arm (two values)")
        if not all(0 <= e <= 1 for e in self.detector_efficiency) or not 0 <= self.splitter_ratio <= 1:
            raise ValueError("efficiencies and splitter ratio must lie in [0, 1]")
        if self.facet_loss_db < 0 or min(self.dark_rate_hz) < 0 or self.jitter_fwhm_s < 0:
            raise ValueError("losses, dark rates and jitter must be non-negative")
        if not (self.bin_width_s > 0 and self.integration_time_s > 0):
            raise ValueError("bin width and integration time must be positive")
        if self.histogram_range_s < self.bin_width_s:
            raise ValueError("histogram range must span at least one bin")

    @property
    def transmission(self):
        """Common-path transmission of an in-band photon (output facet and filter insertion)."""
        loss = self.facet_loss_db + sum(f.insertion_db for f in self.filter_stages)
        return 10 ** (-loss / 10)

    def photon_efficiency(self, arm=0):
        """Detection probability of a photon routed to ``arm`` (excludes the splitter)."""
        return self.transmission * self.detector_efficiency[arm]

    @property
    def pair_efficiency(self):
        return self.photon_efficiency(0) * self.photon_efficiency(1)

    @property
    def detection_bandwidth_nm(self):
        return min((f.bandwidth_nm for f in self.filter_stages), default=math.inf)

    @property
    def pump_rejection_db(self):
        return sum(f.extinction_db for f in self.filter_stages)

    @property
    def combined_jitter_fwhm_s(self):
        return math.sqrt(2) * self.jitter_fwhm_s

    @property
    def default_window_s(self):
        """Four combined-jitter FWHM, rounded to an odd number of bins (at least one)."""
        return self.window_bins(4 * self.combined_jitter_fwhm_s) * self.bin_width_s

    def window_bins(self, window_s):
        half = int(math.floor(window_s / 2 / self.bin_width_s + 1e-9))
        return 2 * half + 1


@dataclass(frozen=True)
class PairSource:
    pgr_onchip: float
    raman_rate_per_arm: float = 0.0  # detected Raman counts per arm, Hz

    def __post_init__(self):
        if self.pgr_onchip < 0 or self.raman_rate_per_arm < 0:
            raise ValueError("source rates must be non-negative")


@dataclass(frozen=True)
class CorrelationHistogram:
    delay_s: np.ndarray  # bin centers
    counts: np.ndarray
    bin_width_s: float
    singles: tuple  # (S1, S2) total counts
    integration_time_s: float
    seed: object
    truth: dict = field(default_factory=dict)

    @property
    def edges_s(self):
        return np.append(self.delay_s - self.bin_width_s / 2, self.delay_s[-1] + self.bin_width_s / 2)

    def peak_mask(self, window_s):
        return np.abs(self.delay_s) <= window_s / 2 + 1e-9 * self.bin_width_s

    def peak_counts(self, window_s):
        return int(self.counts[self.peak_mask(window_s)].sum())

    def to_csv(self, path):
        from ._io import write_csv

        return write_csv(path, {"delay_s": self.delay_s, "counts": self.counts}, [f"seed={self.seed}; integration_time_s={self.integration_time_s!r}"])


def _threads(threads):
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else (os.cpu_count() or 1)


def poisson_arrivals(rng, rate, duration):
    """Sorted arrival times of a homogeneous Poisson process on [0, duration)."""
    if rate <= 0:
        return np.empty(0)
    mean = rate * duration
    chunk = int(mean + 6 * math.sqrt(mean) + 16)
    t = np.cumsum(rng.exponential(1.0 / rate, chunk))
    while t[-1] < duration:
        t = np.concatenate([t, t[-1] + np.cumsum(rng.exponential(1.0 / rate, chunk))])
    return t[: np.searchsorted(t, duration)]


def _cross_delays(ta, tb, reach):
    """All t_b - t_a within +-reach for sorted arrays."""
    lo = np.searchsorted(tb, ta - reach, side="left")
    hi = np.searchsorted(tb, ta + reach, side="right")
    n = hi - lo
    total = int(n.sum())
    if total == 0:
        return np.empty(0)
    a_idx = np.repeat(np.arange(len(ta)), n)
    starts = np.repeat(lo - np.concatenate([[0], np.cumsum(n)[:-1]]), n)
    b_idx = starts + np.arange(total)
    return tb[b_idx] - ta[a_idx]


def _outcome_probabilities(chain):
    """Per-pair detection outcomes: split, both in arm 0, both in arm 1, single in 0, single in 1."""
    t, s = chain.transmission, chain.splitter_ratio
    q0 = t * s * chain.detector_efficiency[0]
    q1 = t * (1 - s) * chain.detector_efficiency[1]
    miss = 1 - q0 - q1
    return 2 * q0 * q1, q0 * q0, q1 * q1, 2 * q0 * miss, 2 * q1 * miss


def _simulate_slice(chain, source, seed_key, index, duration, n_half):
    # Each photon of a pair independently survives the common path, picks an
    # arm and fires that arm's detector. Thinning the Poisson pair stream by
    # outcome gives independent Poisson streams, so only pairs that leave at
    # least one click are ever drawn.
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([*seed_key, index])))
    sigma = chain.jitter_fwhm_s / FWHM_PER_SIGMA
    p_split, p_00, p_11, p_0, p_1 = _outcome_probabilities(chain)
    r = source.pgr_onchip

    split = poisson_arrivals(rng, r * p_split, duration)
    both = [poisson_arrivals(rng, r * p_00, duration), poisson_arrivals(rng, r * p_11, duration)]
    single = [poisson_arrivals(rng, r * p_0, duration), poisson_arrivals(rng, r * p_1, duration)]
    p_click = p_split + p_00 + p_11 + p_0 + p_1
    missed = int(rng.poisson(r * max(1.0 - p_click, 0.0) * duration))
    emitted = missed + len(split) + len(both[0]) + len(both[1]) + len(single[0]) + len(single[1])

    arms = []
    for k in (0, 1):
        noise = poisson_arrivals(rng, source.raman_rate_per_arm + chain.dark_rate_hz[k], duration)
        times = np.concatenate([split, both[k], both[k], single[k], noise])
        if sigma > 0:
            times = times + rng.normal(0.0, sigma, len(times))
        arms.append(np.sort(times))

    bw = chain.bin_width_s
    delays = _cross_delays(arms[0], arms[1], (n_half + 0.5) * bw)
    idx = np.floor(delays / bw + 0.5).astype(np.int64) + n_half
    idx = idx[(idx >= 0) & (idx <= 2 * n_half)]
    hist = np.bincount(idx, minlength=2 * n_half + 1).astype(np.int64)
    return hist, len(arms[0]), len(arms[1]), emitted, len(split)


def expected_events(chain, source):
    """Expected number of detector clicks (photons plus noise) over the integration time."""
    p_split, p_00, p_11, p_0, p_1 = _outcome_probabilities(chain)
    photons = source.pgr_onchip * (2 * p_split + 2 * p_00 + 2 * p_11 + p_0 + p_1)
    return chain.integration_time_s * (photons + 2 * source.raman_rate_per_arm + sum(chain.dark_rate_hz))


def simulate(chain, source, seed, threads=None, max_events=DEFAULT_MAX_EVENTS):
    """Simulate a coincidence measurement and return the cross-arm delay histogram.

    ``seed`` is an int or a tuple of ints. Results do not depend on
    ``threads`` (default: ``$CASCADEPAIR_THREADS`` or the CPU count).
    """
    if isinstance(source, dict):
        source = PairSource(**source)
    events = expected_events(chain, source)
    if events > max_events:
        raise MemoryCapError(f"expected {events:.3g} events exceeds the cap of {max_events:.3g}")
    seed_key = tuple(int(x) for x in np.atleast_1d(seed))
    n_slices = max(1, math.ceil(events / SLICE_EVENTS))
    duration = chain.integration_time_s / n_slices
    n_half = int(round(chain.histogram_range_s / chain.bin_width_s))

    def run(i):
        return _simulate_slice(chain, source, seed_key, i, duration, n_half)

    workers = min(_threads(threads), n_slices)
    if workers == 1:
        parts = [run(i) for i in range(n_slices)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(n_slices)))

    hist = np.zeros(2 * n_half + 1, dtype=np.int64)
    s1 = s2 = pairs = split = 0
    for h, a, b, n, k in parts:
        hist += h
        s1 += a
        s2 += b
        pairs += n
        split += k
    delay = (np.arange(2 * n_half + 1) - n_half) * chain.bin_width_s
    return CorrelationHistogram(
        delay,
        hist,
        chain.bin_width_s,
        (s1, s2),
        chain.integration_time_s,
        seed if np.ndim(seed) == 0 else tuple(seed_key),
        {"pairs_emitted": pairs, "pairs_split_detected": split, "slices": n_slices},
    )


class CarEstimate(NamedTuple):
    car: float
    uncertainty: float
    peak_counts: int
    accidental_mean: float
    window_s: float
    lower_bound: bool = False


def _split_windows(h, window_s, guard_s):
    m = int(h.peak_mask(window_s).sum())
    off = np.abs(h.delay_s) > window_s / 2 + guard_s
    n_off = int(off.sum())
    if n_off < 10 * m:
        raise ValueError(f"histogram holds {n_off / max(m, 1):.1f} off-peak windows; need at least 10")
    return m, int(h.counts[off].sum()), n_off


def car_from_histogram(h, peak_window_s, guard_s=None):
    """CAR = peak-window counts / mean off-peak counts per window of equal width.

    Off-peak bins start ``guard_s`` (default: one window) beyond the peak
    edge. With no off-peak counts the accidental level is replaced by its
    95% upper limit and the result is flagged as a lower bound.
    """
    guard_s = peak_window_s if guard_s is None else guard_s
    m, off_total, n_off = _split_windows(h, peak_window_s, guard_s)
    c = h.peak_counts(peak_window_s)
    window = m * h.bin_width_s
    if off_total == 0:
        upper = ZERO_COUNT_UPPER * m / n_off
        return CarEstimate(c / upper, math.nan, c, 0.0, window, True)
    acc = off_total * m / n_off
    car = c / acc
    sigma = car * math.sqrt((1 / c if c else 0.0) + 1 / off_total)
    return CarEstimate(car, sigma, c, acc, window)


class RateEstimate(NamedTuple):
    rate: float
    uncertainty: float


def pgr_from_singles(h, peak_window_s, subtract_accidentals=True, background_hz=(0.0, 0.0), guard_s=None):
    """Klyshko-style on-chip pair rate R = S1 S2 / (2 C T).

    The 2 accounts for the 50/50 splitter sending both photons to the same
    arm half the time. ``C`` is the peak-window coincidence count, by
    default with the off-peak accidental level subtracted. Known
    uncorrelated singles rates per arm (darks, Raman) can be removed from
    S1 and S2 through ``background_hz``.
    """
    guard_s = peak_window_s if guard_s is None else guard_s
    m, off_total, n_off = _split_windows(h, peak_window_s, guard_s)
    c = h.peak_counts(peak_window_s)
    acc = off_total * m / n_off if subtract_accidentals else 0.0
    net = c - acc
    if net <= 0:
        raise ValueError("no coincidences above the accidental level")
    s1, s2 = (s - b * h.integration_time_s for s, b in zip(h.singles, background_hz))
    if s1 <= 0 or s2 <= 0:
        raise ValueError("background exceeds the recorded singles")
    rate = s1 * s2 / (2 * net * h.integration_time_s)
    var_net = c + (m / n_off) ** 2 * off_total if subtract_accidentals else c
    rel = math.sqrt(var_net / net**2 + h.singles[0] / s1**2 + h.singles[1] / s2**2)
    return RateEstimate(rate, rate * rel)


@dataclass(frozen=True)
class SourceModel:
    """Pump-power-dependent source for sweeps; ``power_mw`` is the per-pump power.

    Two pumps give the on-chip rate 4 B dl P^2. A single pump carrying P
    drives the degenerate process like two pumps of P/2 each, so it starts
    a factor 4 (6.02 dB) lower; ``suppression_db`` is the additional sinc^2
    detuning suppression. Raman singles per arm are ``raman_density``
    (Hz/nm/mW) times bandwidth and total pump power (``n_pumps`` * P).
    """

    brightness: float
    bandwidth_nm: float
    suppression_db: float = 0.0
    integration_time_s: float = 1.0
    raman_density: float = 0.0
    n_pumps: int = 2

    def __post_init__(self):
        if self.n_pumps not in (1, 2):
            raise ValueError("n_pumps must be 1 or 2")

    def pgr_onchip(self, power_mw):
        per_line = power_mw if self.n_pumps == 2 else power_mw / 2
        return pgr_from_brightness(self.brightness, self.bandwidth_nm, per_line, per_line) * 10 ** (-self.suppression_db / 10)

    def source(self, power_mw):
        return PairSource(self.pgr_onchip(power_mw), self.raman_density * self.bandwidth_nm * self.n_pumps * power_mw)


@dataclass(frozen=True)
class SweepResult:
    power_mw: np.ndarray
    pgr_dp_db: np.ndarray  # 10 log10(rate / 1 Hz)
    pgr_sp_db: np.ndarray
    dp_fit: tuple  # (slope, offset) of dB-Hz versus dBm
    sp_fit: tuple
    gap_db: np.ndarray

    @property
    def mean_gap_db(self):
        return float(np.mean(self.gap_db))


def dp_vs_sp_experiment(
    chain, dp_source, sp_source, power_sweep, seed=0, threads=None, max_events=DEFAULT_MAX_EVENTS, target_coincidences=None
):
    """Dual-pump versus single-pump PGR across a pump-power sweep.

    Both configurations are simulated at every power, their on-chip PGR
    is re-estimated from singles and coincidences (with the known dark and
    Raman singles removed), and straight lines are fitted on log-log (dB)
    axes. With ``target_coincidences`` each point integrates just long
    enough to expect that many true coincidences instead of using the
    source's fixed integration time.
    """
    powers = np.asarray(power_sweep, dtype=float)
    if powers.size == 0:
        raise ValueError("power sweep is empty")
    window = chain.default_window_s if chain.jitter_fwhm_s > 0 else chain.bin_width_s
    out = {"dp": [], "sp": []}
    for i, p in enumerate(powers):
        for j, (name, model) in enumerate((("dp", dp_source), ("sp", sp_source))):
            src = model.source(p)
            t_int = model.integration_time_s
            if target_coincidences is not None:
                true_rate = 2 * chain.splitter_ratio * (1 - chain.splitter_ratio) * src.pgr_onchip * chain.pair_efficiency
                if not true_rate > 0:
                    raise ValueError("source yields no coincidences")
                t_int = target_coincidences / true_rate
            run_chain = replace(chain, integration_time_s=t_int)
            h = simulate(run_chain, src, (*np.atleast_1d(seed), i, j), threads, max_events)
            background = [src.raman_rate_per_arm + d for d in chain.dark_rate_hz]
            out[name].append(10 * math.log10(pgr_from_singles(h, window, background_hz=background).rate))
    x = 10 * np.log10(powers)
    dp, sp = np.array(out["dp"]), np.array(out["sp"])
    dp_fit = tuple(np.polyfit(x, dp, 1)) if len(x) > 1 else (math.nan, float(dp[0]))
    sp_fit = tuple(np.polyfit(x, sp, 1)) if len(x) > 1 else (math.nan, float(sp[0]))
    return SweepResult(powers, dp, sp, tuple(map(float, dp_fit)), tuple(map(float, sp_fit)), dp - sp)
