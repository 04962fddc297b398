"""Command-line entry point: validate a config or run one scenario.

    cascadepair run <scenario> --config device.toml --out results/ [--seed N]
    cascadepair validate --config device.toml

Every scenario writes plot-ready CSV (header row with units) and a JSON
summary, then a ``manifest.json`` with the config hash, toolkit version,
seed and a timestamp. Only the manifest carries the timestamp, so reruns
with the same config and seed produce byte-identical data files.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, mcsim, pairgen, phasematch, raman
from ._io import stable_hash, write_csv, write_json
from .config import SCENARIOS, load_config, validate_config
from .errors import CascadeError, ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _car_inputs(cfg, chain, bandwidth_nm, p1, p2):
    """Analytic CAR at one operating point of the configured chain."""
    pgr = pairgen.pgr_from_brightness(cfg.brightness, bandwidth_nm, p1, p2)
    raman_rate = cfg.raman_density * (p1 + p2)
    terms = pairgen.car_terms(
        pgr * chain.pair_efficiency,
        raman_rate,
        chain.dark_rate_hz[0],
        bandwidth_nm,
        chain.default_window_s,
        photon_efficiency=chain.photon_efficiency(0),
        splitter_ratio=chain.splitter_ratio,
        jitter_fwhm_s=chain.jitter_fwhm_s,
    )
    return pgr, terms, mcsim.PairSource(pgr, raman_rate * bandwidth_nm)


def _with_bandwidth(chain, bandwidth_nm):
    """Chain with its narrowest filter retuned to ``bandwidth_nm``."""
    if not chain.filter_stages:
        return chain
    i = min(range(len(chain.filter_stages)), key=lambda k: chain.filter_stages[k].bandwidth_nm)
    stages = list(chain.filter_stages)
    stages[i] = replace(stages[i], bandwidth_nm=bandwidth_nm)
    return replace(chain, filter_stages=tuple(stages))


def _mc_car(chain, source, seed):
    h = mcsim.simulate(chain, source, seed)
    est = mcsim.car_from_histogram(h, chain.default_window_s)
    return h, est


def scenario_shg_spectrum(cfg, out, seed):
    p = cfg.scenarios["shg-spectrum"]
    spec, model = cfg.waveguide, cfg.model
    wl_pm = phasematch.find_pm_wavelength(model, spec)
    spectrum = phasematch.shg_spectrum(model, spec, p["power"], p["range"], int(p["samples"]), normalize=False)
    rel = spectrum.values / phasematch.shg_power(spec, p["power"], 0.0)
    write_csv(
        out / "shg_spectrum.csv",
        {"wavelength_nm": spectrum.wavelength_nm, "shg_power_W": spectrum.values, "shg_relative": rel},
        [f"spec_hash={stable_hash(spec, model)}; pump_power_mW={p['power']!r}; normalized=false (shg_relative is P_SH over the phase-matched peak)"],
    )
    summary = {
        "pm_wavelength_nm": wl_pm,
        "peak_wavelength_nm": spectrum.peak_wavelength,
        "fwhm_GHz": phasematch.shg_bandwidth_fwhm(model, spec),
    }
    if cfg.pumps.is_dual:
        budget = phasematch.suppression_budget(model, spec, *cfg.pumps.wavelengths_nm)
        summary["suppression_budget_dB"] = budget._asdict()
        summary["splitting_penalty_dB"] = phasematch.SPLITTING_PENALTY_DB
    write_json(out / "shg_spectrum.json", summary)
    return ["shg_spectrum.csv", "shg_spectrum.json"]


def scenario_raman_fit(cfg, out, seed):
    p = cfg.scenarios["raman-fit"]
    pump, lines = p["pump"], cfg.raman_lines
    grid = np.linspace(*p["spectrum_range"], int(p["spectrum_samples"]))
    powers = np.asarray(p["powers"])

    def counts(wl, power):
        prof = raman.line_profile(pump, lines, wl) + cfg.raman_background
        return p["raman_scale"] * power * prof + p["spdc_level"] * power**2

    # spectra at each pump power
    cols = {"wavelength_nm": grid}
    for pw in powers:
        cols[f"counts_{pw:g}mW"] = counts(grid, pw)
    cols["pump_region"] = (np.abs(grid - pump) < 0.5).astype(int)
    write_csv(out / "raman_spectra.csv", cols, ["counts in arbitrary units per acquisition"])

    anti_stokes = [a for _, a in raman.raman_shifted_wavelengths(pump, lines)]
    fit_wl = anti_stokes + list(p["wavelengths"])
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 2])))
    rows = []
    for wl in fit_wl:
        clean = counts(np.full(powers.shape, wl), powers)
        noisy = clean * (1 + p["noise"] * rng.standard_normal(len(powers)))
        fit = raman.fit_power_scaling(powers, np.clip(noisy, 0, None), wl)
        cross = raman.crossover_power(fit) if fit.a > 0 and fit.b > 0 else math.nan
        rows.append((wl, fit.a, fit.b, cross, fit.residual_norm))
    rows = np.array(rows)
    write_csv(
        out / "raman_fit.csv",
        {
            "wavelength_nm": rows[:, 0],
            "a_counts_per_mW2": rows[:, 1],
            "b_counts_per_mW": rows[:, 2],
            "crossover_mW": rows[:, 3],
            "residual_norm": rows[:, 4],
        },
    )
    peak_b = rows[0, 2]
    summary = {
        "anti_stokes_nm": anti_stokes,
        "stokes_nm": [s for s, _ in raman.raman_shifted_wavelengths(pump, lines)],
        "b_ratio_to_reference": {f"{wl:g}": peak_b / b for wl, b in zip(p["wavelengths"], rows[len(anti_stokes) :, 2])},
        "background_per_mW": cfg.raman_background,
    }
    write_json(out / "raman_fit.json", summary)
    return ["raman_spectra.csv", "raman_fit.csv", "raman_fit.json"]


def scenario_dp_power_sweep(cfg, out, seed):
    p = cfg.scenarios["dp-power-sweep"]
    bw = p["bandwidth"]
    chain = replace(_with_bandwidth(cfg.chain, bw), integration_time_s=p["integration_time"])
    rows = []
    for which in (1, 2):
        for j, pw in enumerate(p["swept_powers"]):
            p1, p2 = (pw, p["fixed_power"]) if which == 1 else (p["fixed_power"], pw)
            pgr, terms, source = _car_inputs(cfg, chain, bw, p1, p2)
            h, est = _mc_car(chain, source, (seed, 3, which, j))
            background = [source.raman_rate_per_arm + d for d in chain.dark_rate_hz]
            try:
                k = mcsim.pgr_from_singles(h, chain.default_window_s, background_hz=background)
            except ValueError:
                k = mcsim.RateEstimate(math.nan, math.nan)
            rows.append((which, p1, p2, pgr, pgr * chain.pair_efficiency, terms.car, est.car, est.uncertainty, k.rate, k.uncertainty))
    rows = np.array(rows)
    names = [
        "swept_pump",
        "p1_mW",
        "p2_mW",
        "pgr_onchip_Hz",
        "pgr_detected_Hz",
        "car_model",
        "car_mc",
        "car_mc_sigma",
        "pgr_klyshko_Hz",
        "pgr_klyshko_sigma_Hz",
    ]
    write_csv(out / "dp_power_sweep.csv", {n: rows[:, i] if i else rows[:, i].astype(int) for i, n in enumerate(names)})
    summary = {}
    for which in (1, 2):
        sel = rows[:, 0] == which
        x = np.log10(rows[sel, which])
        slope, _ = np.polyfit(x, np.log10(rows[sel, 3]), 1)
        ok = np.isfinite(rows[sel, 8])
        k_slope = float(np.polyfit(x[ok], np.log10(rows[sel, 8][ok]), 1)[0]) if ok.sum() > 1 else math.nan
        summary[f"pump{which}"] = {"pgr_loglog_slope": float(slope), "klyshko_loglog_slope": k_slope}
    summary["brightness_Hz_per_nm_mW2"] = cfg.brightness
    summary["window_s"] = chain.default_window_s
    write_json(out / "dp_power_sweep.json", summary)
    return ["dp_power_sweep.csv", "dp_power_sweep.json"]


def scenario_car_vs_bandwidth(cfg, out, seed):
    p = cfg.scenarios["car-vs-bandwidth"]
    bws = np.asarray(p["bandwidths"])
    if cfg.pumps.is_dual:
        p1, p2 = cfg.pumps.powers_mw
    else:
        p1 = p2 = cfg.pumps.powers_mw[0]
    rows, records, files = [], [], []
    for j, bw in enumerate(bws):
        chain = replace(_with_bandwidth(cfg.chain, bw), integration_time_s=p["integration_time"])
        pgr, terms, source = _car_inputs(cfg, chain, bw, p1, p2)
        mc_seed = (seed, 4, j)
        h, est = _mc_car(chain, source, mc_seed)
        rows.append((bw, pgr, terms.singles_a, terms.car, est.car, est.uncertainty))
        name = f"histogram_{bw:g}nm.csv"
        h.to_csv(out / name)
        files.append(name)
        background = [source.raman_rate_per_arm + d for d in chain.dark_rate_hz]
        try:
            k = mcsim.pgr_from_singles(h, chain.default_window_s, background_hz=background)
        except ValueError:
            k = mcsim.RateEstimate(math.nan, math.nan)
        records.append(
            {
                "bandwidth_nm": bw,
                "S1": h.singles[0],
                "S2": h.singles[1],
                "C": est.peak_counts,
                "car": est.car,
                "car_sigma": est.uncertainty,
                "car_lower_bound": est.lower_bound,
                "pgr_klyshko_Hz": k.rate,
                "pgr_klyshko_sigma_Hz": k.uncertainty,
                "seed": list(mc_seed),
            }
        )
    rows = np.array(rows)
    write_csv(
        out / "car_vs_bandwidth.csv",
        {
            "bandwidth_nm": rows[:, 0],
            "pgr_onchip_Hz": rows[:, 1],
            "singles_Hz": rows[:, 2],
            "car_model": rows[:, 3],
            "car_mc": rows[:, 4],
            "car_mc_sigma": rows[:, 5],
        },
    )
    free_a, free_k = pairgen.fit_inverse_law(rows[:, 0], rows[:, 3])
    fixed_a = float(np.exp(np.mean(np.log(rows[:, 3] * rows[:, 0]))))
    mc_a, mc_k = pairgen.fit_inverse_law(rows[:, 0], rows[:, 4])
    summary = {
        "fit_free": {"a": free_a, "k": free_k},
        "fit_inverse": {"a": fixed_a},
        "fit_mc": {"a": mc_a, "k": mc_k},
        "pump_powers_mW": [p1, p2],
        "histograms": records,
    }
    write_json(out / "car_vs_bandwidth.json", summary)
    return ["car_vs_bandwidth.csv", "car_vs_bandwidth.json"] + files


def scenario_sp_vs_dp(cfg, out, seed):
    p = cfg.scenarios["sp-vs-dp"]
    bw = p["bandwidth"]
    model, spec = cfg.model, cfg.waveguide
    if not cfg.pumps.is_dual:
        raise ValueError("sp-vs-dp needs two pump wavelengths")
    budget = phasematch.suppression_budget(model, spec, *cfg.pumps.wavelengths_nm)
    scale = p["rate_scale"]
    chain = _with_bandwidth(cfg.chain, bw)
    chain = replace(chain, dark_rate_hz=tuple(d * scale for d in chain.dark_rate_hz))
    dp = mcsim.SourceModel(cfg.brightness, bw, 0.0, raman_density=cfg.raman_density * scale, n_pumps=2)
    # the single-pump source carries the splitting factor itself
    sinc2_db = budget.total_min_suppression - phasematch.SPLITTING_PENALTY_DB
    sp = mcsim.SourceModel(cfg.brightness, bw, sinc2_db, raman_density=cfg.raman_density * scale, n_pumps=1)
    res = mcsim.dp_vs_sp_experiment(chain, dp, sp, p["powers"], seed=(seed, 5), target_coincidences=int(p["target_coincidences"]))
    analytic_dp = [10 * math.log10(pairgen.pgr_from_brightness(cfg.brightness, bw, x, x)) for x in res.power_mw]
    analytic_sp = [10 * math.log10(pairgen.sp_parasitic_pgr(cfg.brightness, x, bw, budget.total_min_suppression)) for x in res.power_mw]
    write_csv(
        out / "sp_vs_dp.csv",
        {
            "power_mW": res.power_mw,
            "power_dBm": 10 * np.log10(res.power_mw),
            "pgr_dp_dBHz": res.pgr_dp_db,
            "pgr_sp_dBHz": res.pgr_sp_db,
            "gap_dB": res.gap_db,
            "pgr_dp_model_dBHz": analytic_dp,
            "pgr_sp_model_dBHz": analytic_sp,
        },
        [f"noise scaled by {scale!r}; {int(p['target_coincidences'])} expected true coincidences per point"],
    )
    summary = {
        "mean_gap_dB": res.mean_gap_db,
        "model_gap_dB": budget.total_min_suppression,
        "dp_fit": {"slope": res.dp_fit[0], "offset_dBHz": res.dp_fit[1]},
        "sp_fit": {"slope": res.sp_fit[0], "offset_dBHz": res.sp_fit[1]},
        "suppression_budget_dB": budget._asdict(),
    }
    write_json(out / "sp_vs_dp.json", summary)
    return ["sp_vs_dp.csv", "sp_vs_dp.json"]


def scenario_pump_optimize(cfg, out, seed):
    p = cfg.scenarios["pump-optimize"]
    model, spec = cfg.model, cfg.waveguide
    wl_d = phasematch.find_pm_wavelength(model, spec)
    best = phasematch.optimize_pump_placement(
        model,
        spec,
        min_detuning_nm=p["min_detuning"],
        max_detuning_nm=p["max_detuning"],
        raman_shifts=cfg.raman_lines,
        raman_margin_nm=p["raman_margin"],
        pm_wavelength_nm=wl_d,
    )
    # suppression landscape versus blue-pump detuning (frequency-symmetric pairs)
    c = phasematch.C_NM_PER_S
    nu_d = c / wl_d
    lo, hi = model.curve(spec.pump_mode).interval
    dnu_max = min(nu_d - c / min(wl_d + p["max_detuning"], hi), c / lo - nu_d)
    dnu = np.linspace(c / (wl_d - p["min_detuning"]) - nu_d, dnu_max, 401)
    rows = []
    for d in dnu:
        wl1, wl2 = c / (nu_d + d), c / (nu_d - d)
        b = phasematch.suppression_budget(model, spec, wl1, wl2)
        rows.append((wl1, wl2, b.shg1_db, b.shg2_db, b.total_min_suppression, phasematch.raman_clearance(wl1, wl2, cfg.raman_lines, wl_d)))
    rows = np.array(rows)
    write_csv(
        out / "pump_placement.csv",
        {
            "wl1_nm": rows[:, 0],
            "wl2_nm": rows[:, 1],
            "shg1_suppression_dB": rows[:, 2],
            "shg2_suppression_dB": rows[:, 3],
            "total_suppression_dB": rows[:, 4],
            "raman_clearance_nm": rows[:, 5],
        },
    )
    summary = {"optimum": best, "pm_wavelength_nm": wl_d}
    if cfg.pumps.is_dual:
        wl1, wl2 = cfg.pumps.wavelengths_nm
        summary["configured"] = {
            "wl1_nm": wl1,
            "wl2_nm": wl2,
            "suppression_dB": phasematch.suppression_budget(model, spec, wl1, wl2).total_min_suppression,
            "raman_clearance_nm": phasematch.raman_clearance(wl1, wl2, cfg.raman_lines, wl_d),
        }
    write_json(out / "pump_placement.json", summary)
    return ["pump_placement.csv", "pump_placement.json"]


SCENARIO_FUNCS = {
    "shg-spectrum": scenario_shg_spectrum,
    "raman-fit": scenario_raman_fit,
    "dp-power-sweep": scenario_dp_power_sweep,
    "car-vs-bandwidth": scenario_car_vs_bandwidth,
    "sp-vs-dp": scenario_sp_vs_dp,
    "pump-optimize": scenario_pump_optimize,
}
assert set(SCENARIO_FUNCS) == set(SCENARIOS)


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_scenario(config, scenario, out_dir, seed=None):
    """Run one scenario and write its outputs plus ``manifest.json``; returns the manifest."""
    if scenario not in SCENARIO_FUNCS:
        raise ConfigError([{"field": "scenario", "message": f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}"}])
    seed = config.seed if seed is None else int(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = SCENARIO_FUNCS[scenario](config, out, seed)
    manifest = {
        "scenario": scenario,
        "config_sha256": config.source_hash,
        "version": __version__,
        "seed": seed,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "files": {name: _sha256(out / name) for name in files},
    }
    write_json(out / "manifest.json", manifest)
    return manifest


def build_parser():
    parser = argparse.ArgumentParser(prog="cascadepair", description="Cascaded SFG/SPDC photon-pair source toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario and write plot-ready data")
    run.add_argument("scenario", choices=SCENARIOS)
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--out", type=Path, help="output directory (default: output_dir from the config)")
    run.add_argument("--seed", type=int, help="override the config seed")
    val = sub.add_parser("validate", help="validate a config and print a JSON report")
    val.add_argument("--config", required=True, type=Path)
    return parser


def _report_errors(errors):
    for e in errors:
        where = e["field"]
        if "line" in e:
            where += f":{e['line']}:{e['column']}"
        print(f"config error: {where}: {e['message']}", file=sys.stderr)


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        report = validate_config(args.config)
        print(json.dumps(report, indent=2))
        return EXIT_OK if report["ok"] else EXIT_CONFIG

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        _report_errors(exc.errors)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or cfg.output_dir
    if out is None:
        print("config error: no output directory (use --out or set output_dir)", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest = run_scenario(cfg, args.scenario, out, args.seed)
    except ConfigError as exc:
        _report_errors(exc.errors)
        return EXIT_CONFIG
    except (CascadeError, ArithmeticError, ValueError) as exc:
        print(f"{args.scenario} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(json.dumps({"scenario": args.scenario, "out": str(out), "files": sorted(manifest["files"])}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
