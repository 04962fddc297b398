"""Experiment configuration: TOML with a unit on every physical quantity.

Physical values are strings such as ``"4.45 mm"`` or ``"250 %/W/cm2"``;
bare numbers are accepted only for dimensionless fields. Everything is
validated (structure, units, ranges, mode references) before any
computation, and all problems are reported together with their field path.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import presets
from .cwe import PumpConfig
from .dispersion import DispersionCurve, DispersionModel, Poling, PolingScheme, WaveguideSpec
from .errors import ConfigError
from .mcsim import DetectionChain, FilterStage
from .raman import LN_BACKGROUND, LN_LINES, RamanLine

# unit -> (dimension, factor to the dimension's base unit)
UNITS = {
    "nm": ("length", 1e-9),
    "um": ("length", 1e-6),
    "µm": ("length", 1e-6),
    "mm": ("length", 1e-3),
    "cm": ("length", 1e-2),
    "m": ("length", 1.0),
    "uW": ("power", 1e-6),
    "mW": ("power", 1e-3),
    "W": ("power", 1.0),
    "Hz": ("rate", 1.0),
    "kHz": ("rate", 1e3),
    "MHz": ("rate", 1e6),
    "GHz": ("rate", 1e9),
    "fs": ("time", 1e-15),
    "ps": ("time", 1e-12),
    "ns": ("time", 1e-9),
    "us": ("time", 1e-6),
    "ms": ("time", 1e-3),
    "s": ("time", 1.0),
    "dB": ("ratio_db", 1.0),
    "dB/cm": ("loss", 1.0),
    "dB/m": ("loss", 0.01),
    "%/W/cm2": ("norm_efficiency", 1.0),
    "%/W/cm^2": ("norm_efficiency", 1.0),
    "1/cm": ("wavenumber", 1.0),
    "cm-1": ("wavenumber", 1.0),
    "cm^-1": ("wavenumber", 1.0),
    "Hz/nm/mW2": ("brightness", 1.0),
    "Hz/nm/mW^2": ("brightness", 1.0),
    "Hz/nm/mW": ("raman_density", 1.0),
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S+)\s*$")

SCENARIOS = ("shg-spectrum", "raman-fit", "dp-power-sweep", "car-vs-bandwidth", "sp-vs-dp", "pump-optimize")

# per-scenario parameters: name -> (target unit or None for dimensionless, default)
SCENARIO_PARAMS = {
    "shg-spectrum": {
        "range": ("nm", ["1500 nm", "1570 nm"]),
        "samples": (None, 1401),
        "power": ("mW", "1 mW"),
        "normalize": (None, True),
    },
    "raman-fit": {
        "pump": ("nm", "1534 nm"),
        "wavelengths": ("nm", ["1475 nm", "1483 nm", "1502 nm"]),
        "powers": ("mW", ["2 mW", "5 mW", "10 mW", "20 mW", "40 mW", "60 mW", "80 mW"]),
        "spectrum_range": ("nm", ["1460 nm", "1610 nm"]),
        "spectrum_samples": (None, 1501),
        "spdc_level": (None, 2e-3),
        "raman_scale": (None, 1.0),
        "noise": (None, 0.01),
    },
    "dp-power-sweep": {
        "fixed_power": ("mW", "0.9 mW"),
        "swept_powers": ("mW", ["0.1 mW", "0.2 mW", "0.5 mW", "1 mW", "1.7 mW", "3 mW", "5 mW"]),
        "bandwidth": ("nm", "1 nm"),
        "integration_time": ("s", "10 s"),
    },
    "car-vs-bandwidth": {
        "bandwidths": ("nm", ["0.1 nm", "0.2 nm", "0.5 nm", "1 nm", "1.5 nm", "2 nm"]),
        "integration_time": ("s", "20 s"),
    },
    "sp-vs-dp": {
        "powers": ("mW", ["0.5 mW", "0.8 mW", "1.2 mW", "1.9 mW", "3 mW"]),
        "bandwidth": ("nm", "2 nm"),
        "rate_scale": (None, 1e-3),
        "target_coincidences": (None, 1000),
    },
    "pump-optimize": {
        "min_detuning": ("nm", "5 nm"),
        "max_detuning": ("nm", "50 nm"),
        "raman_margin": ("nm", "1 nm"),
    },
}


def convert(value, target_unit, path="value"):
    """Parse ``"<number> <unit>"`` and convert to ``target_unit``; raises ConfigError."""
    if isinstance(value, bool) or not isinstance(value, str):
        raise ConfigError([{"field": path, "message": f"expected a quantity with a unit of {target_unit!r}, got {value!r}"}])
    m = _QUANTITY.match(value)
    if not m:
        raise ConfigError([{"field": path, "message": f"cannot parse quantity {value!r}"}])
    number, unit = float(m.group(1)), m.group(2)
    if unit not in UNITS:
        raise ConfigError([{"field": path, "message": f"unknown unit {unit!r}"}])
    dim, factor = UNITS[unit]
    tdim, tfactor = UNITS[target_unit]
    if dim != tdim:
        raise ConfigError([{"field": path, "message": f"unit {unit!r} is not a {tdim} (expected e.g. {target_unit!r})"}])
    return number * factor / tfactor


@dataclass(frozen=True)
class ExperimentConfig:
    waveguide: WaveguideSpec
    model: DispersionModel
    pumps: PumpConfig
    chain: DetectionChain
    brightness: float
    raman_lines: tuple
    raman_density: float
    raman_background: float
    seed: int
    scenarios: dict = field(default_factory=dict)
    output_dir: str | None = None
    source_hash: str = ""

    def scenario(self, name):
        return self.scenarios[name]


class _Reader:
    """Collects field-level errors while walking the parsed document."""

    def __init__(self, doc):
        self.doc = doc
        self.errors = []

    def error(self, path, message):
        self.errors.append({"field": path, "message": message})

    def table(self, path, required=True):
        node = self.doc
        for part in path.split("."):
            if not isinstance(node, dict) or part not in node:
                if required:
                    self.error(path, "missing required section")
                return None
            node = node[part]
        if not isinstance(node, dict):
            self.error(path, "expected a table")
            return None
        return node

    def quantity(self, table, key, unit, path, default=None, required=True):
        if table is None or key not in table:
            if default is not None:
                return convert(default, unit, f"{path}.{key}")
            if required:
                self.error(f"{path}.{key}", "missing required key")
            return None
        try:
            return convert(table[key], unit, f"{path}.{key}")
        except ConfigError as exc:
            self.errors.extend(exc.errors)
            return None

    def quantities(self, table, key, unit, path, default=None):
        raw = (table or {}).get(key, default)
        if raw is None:
            self.error(f"{path}.{key}", "missing required key")
            return None
        if not isinstance(raw, list):
            self.error(f"{path}.{key}", "expected a list of quantities")
            return None
        out = []
        for i, item in enumerate(raw):
            try:
                out.append(convert(item, unit, f"{path}.{key}[{i}]"))
            except ConfigError as exc:
                self.errors.extend(exc.errors)
                return None
        return out

    def number(self, table, key, path, default=None, lo=None, hi=None):
        raw = (table or {}).get(key, default)
        if raw is None:
            self.error(f"{path}.{key}", "missing required key")
            return None
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            self.error(f"{path}.{key}", f"expected a dimensionless number, got {raw!r}")
            return None
        if (lo is not None and raw < lo) or (hi is not None and raw > hi):
            self.error(f"{path}.{key}", f"value {raw} outside [{lo}, {hi}]")
            return None
        return raw

    def check(self, cond, path, message):
        if not cond:
            self.error(path, message)
        return cond


def _read_dispersion(r):
    table = r.table("dispersion")
    if table is None:
        return None
    if not table:
        r.error("dispersion", "no modes defined")
        return None
    curves = {}
    for mode, spec in table.items():
        path = f"dispersion.{mode}"
        if not isinstance(spec, dict):
            r.error(path, "expected a table")
            continue
        if spec.get("units") != "nm":
            r.error(f"{path}.units", "coefficient units must be declared as 'nm' (polynomial variable is lambda - center in nm)")
        coeffs = spec.get("coefficients")
        if not isinstance(coeffs, list) or not coeffs or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in coeffs):
            r.error(f"{path}.coefficients", "expected a non-empty list of numbers")
            continue
        rng = r.quantities(spec, "range", "nm", path)
        center = r.quantity(spec, "center", "nm", path, default="0 nm")
        if rng is None or center is None:
            continue
        if not r.check(len(rng) == 2 and rng[0] < rng[1], f"{path}.range", "expected [min, max] with min < max"):
            continue
        curve = DispersionCurve(tuple(coeffs), tuple(rng), center)
        if r.check(curve.min_index() > 1.0, f"{path}.coefficients", "n_eff must exceed 1 over the validity range"):
            curves[mode] = curve
    return DispersionModel(curves) if curves and len(curves) == len(table) else None


def _read_waveguide(r, modes):
    t = r.table("waveguide")
    if t is None:
        return None
    length = r.quantity(t, "length", "cm", "waveguide")
    eta = r.quantity(t, "eta_shg", "%/W/cm2", "waveguide")
    facet = r.quantity(t, "facet_loss", "dB", "waveguide", default="0 dB")
    factor = r.number(t, "sfg_coupling_factor", "waveguide", default=2.0, lo=0.0)
    pump_mode = t.get("pump_mode", presets.TE00)
    sh_mode = t.get("sh_mode", presets.TE01)
    if modes is not None:
        for key, mode in (("pump_mode", pump_mode), ("sh_mode", sh_mode)):
            r.check(mode in modes, f"waveguide.{key}", f"mode {mode!r} has no dispersion curve")
    r.check(length is None or length > 0, "waveguide.length", "must be positive")
    r.check(eta is None or eta >= 0, "waveguide.eta_shg", "must be non-negative")
    r.check(facet is None or facet >= 0, "waveguide.facet_loss", "must be non-negative")

    poling = None
    pt = t.get("poling", {"kind": Poling.MPM})
    if not isinstance(pt, dict):
        r.error("waveguide.poling", "expected a table")
    else:
        kind = pt.get("kind", Poling.MPM)
        if kind not in (Poling.NONE, Poling.QPM, Poling.MPM):
            r.error("waveguide.poling.kind", f"unknown poling kind {kind!r}")
        elif kind == Poling.QPM:
            period = r.quantity(pt, "period", "um", "waveguide.poling")
            order = pt.get("order", 1)
            ok = r.check(period is None or period > 0, "waveguide.poling.period", "must be positive")
            ok &= r.check(isinstance(order, int) and order >= 1, "waveguide.poling.order", "must be a positive integer")
            if period is not None and ok:
                poling = PolingScheme(Poling.QPM, period, order)
        else:
            poling = PolingScheme(kind)

    losses = {}
    lt = t.get("loss", {})
    if not isinstance(lt, dict):
        r.error("waveguide.loss", "expected a table of per-mode losses")
    else:
        for mode, val in lt.items():
            v = r.quantity(lt, mode, "dB/cm", "waveguide.loss")
            if v is None:
                continue
            if modes is not None and mode not in modes:
                r.error(f"waveguide.loss.{mode}", f"mode {mode!r} has no dispersion curve")
            elif r.check(v >= 0, f"waveguide.loss.{mode}", "must be non-negative"):
                losses[mode] = v
    if None in (length, eta, facet, factor, poling) or length <= 0 or eta < 0 or facet < 0:
        return None
    return WaveguideSpec(length, eta, poling, losses, facet, pump_mode, sh_mode, factor)


def _read_pumps(r):
    t = r.table("pumps")
    if t is None:
        return None
    wl = r.quantities(t, "wavelengths", "nm", "pumps")
    p = r.quantities(t, "powers", "mW", "pumps")
    if wl is None or p is None:
        return None
    if not r.check(len(wl) in (1, 2) and len(wl) == len(p), "pumps", "one or two pump lines with matching powers"):
        return None
    if not r.check(min(p) >= 0, "pumps.powers", "must be non-negative"):
        return None
    return PumpConfig(tuple(wl), tuple(p))


def _read_chain(r):
    t = r.table("detection", required=False)
    if t is None:
        return presets.device_chain()
    path = "detection"
    facet = r.quantity(t, "facet_loss", "dB", path, default="0 dB")
    split = r.number(t, "splitter_ratio", path, default=0.5, lo=0.0, hi=1.0)
    eff = t.get("detector_efficiency", [1.0, 1.0])
    if not (isinstance(eff, list) and len(eff) == 2 and all(isinstance(e, (int, float)) and 0 <= e <= 1 for e in eff)):
        r.error(f"{path}.detector_efficiency", "expected two efficiencies in [0, 1]")
        eff = None
    dark = r.quantities(t, "dark_rate", "Hz", path, default=["0 Hz", "0 Hz"])
    if dark is not None and not r.check(len(dark) == 2 and min(dark) >= 0, f"{path}.dark_rate", "expected two non-negative rates"):
        dark = None
    jitter = r.quantity(t, "jitter_fwhm", "s", path, default="0 s")
    bin_width = r.quantity(t, "bin_width", "s", path, default="10 ps")
    integration = r.quantity(t, "integration_time", "s", path, default="1 s")
    hist_range = r.quantity(t, "histogram_range", "s", path, default="5 ns")
    r.check(facet is None or facet >= 0, f"{path}.facet_loss", "must be non-negative")
    r.check(jitter is None or jitter >= 0, f"{path}.jitter_fwhm", "must be non-negative")
    r.check(bin_width is None or bin_width > 0, f"{path}.bin_width", "must be positive")
    r.check(integration is None or integration > 0, f"{path}.integration_time", "must be positive")
    stages = []
    ft = t.get("filters", [])
    if not isinstance(ft, list):
        r.error(f"{path}.filters", "expected an array of tables")
        ft = []
    for i, f in enumerate(ft):
        fp = f"{path}.filters[{i}]"
        vals = [
            r.quantity(f, "center", "nm", fp),
            r.quantity(f, "bandwidth", "nm", fp),
            r.quantity(f, "extinction", "dB", fp, default="0 dB"),
            r.quantity(f, "insertion", "dB", fp, default="0 dB"),
        ]
        if None in vals:
            continue
        if r.check(vals[1] > 0 and vals[2] >= 0 and vals[3] >= 0, fp, "bandwidth must be positive and losses non-negative"):
            stages.append(FilterStage(*vals))
    fields_ = (facet, split, eff, dark, jitter, bin_width, integration, hist_range)
    if None in fields_ or len(stages) != len(ft) or facet < 0 or jitter < 0 or bin_width <= 0 or integration <= 0:
        return None
    try:
        return DetectionChain(facet, tuple(stages), split, tuple(eff), tuple(dark), jitter, bin_width, integration, hist_range)
    except ValueError as exc:
        r.error(path, str(exc))
        return None


def _read_raman(r):
    t = r.table("raman", required=False)
    if t is None:
        return LN_LINES, presets.RAMAN_DENSITY, LN_BACKGROUND
    density = r.quantity(t, "density", "Hz/nm/mW", "raman", default="0 Hz/nm/mW")
    background = t.get("background", "calibrated")
    if background == "calibrated":
        background = LN_BACKGROUND
    elif isinstance(background, bool) or not isinstance(background, (int, float)) or background < 0:
        r.error("raman.background", "expected a non-negative number or 'calibrated'")
        background = None
    lines = []
    raw = t.get("lines")
    if raw is None:
        lines = list(LN_LINES)
    elif not isinstance(raw, list):
        r.error("raman.lines", "expected an array of tables")
    else:
        for i, ln in enumerate(raw):
            lp = f"raman.lines[{i}]"
            shift = r.quantity(ln, "shift", "1/cm", lp)
            width = r.quantity(ln, "width", "1/cm", lp, default="10 1/cm")
            amp = r.number(ln, "amplitude", lp, default=1.0)
            if None in (shift, width, amp):
                continue
            try:
                lines.append(RamanLine(shift, amp, width, str(ln.get("label", ""))))
            except ValueError as exc:
                r.error(lp, str(exc))
    r.check(density is None or density >= 0, "raman.density", "must be non-negative")
    return tuple(lines), density, background


def _read_scenarios(r):
    t = r.table("scenarios", required=False) or {}
    out = {}
    for name in t:
        if name not in SCENARIO_PARAMS:
            r.error(f"scenarios.{name}", f"unknown scenario; choose from {', '.join(SCENARIOS)}")
    for name, params in SCENARIO_PARAMS.items():
        given = t.get(name, {})
        if not isinstance(given, dict):
            r.error(f"scenarios.{name}", "expected a table")
            continue
        for key in given:
            if key not in params:
                r.error(f"scenarios.{name}.{key}", "unknown parameter")
        vals = {}
        for key, (unit, default) in params.items():
            path = f"scenarios.{name}"
            if unit is None:
                raw = given.get(key, default)
                if isinstance(default, bool):
                    if not isinstance(raw, bool):
                        r.error(f"{path}.{key}", "expected true or false")
                    vals[key] = raw
                else:
                    vals[key] = r.number(given, key, path, default=default, lo=0)
            elif isinstance(default, list):
                vals[key] = r.quantities(given, key, unit, path, default=default)
            else:
                vals[key] = r.quantity(given, key, unit, path, default=default)
        out[name] = vals
    return out


def _parse_error(path, exc):
    record = {"field": str(path), "message": str(exc)}
    m = re.search(r"line (\d+), column (\d+)", str(exc))
    if m:
        record["line"], record["column"] = int(m.group(1)), int(m.group(2))
    return record


def parse_config(text, source="<string>"):
    """Parse and validate config text; raises :class:`ConfigError` listing every problem."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([_parse_error(source, exc)]) from None
    r = _Reader(doc)
    known = {"seed", "output_dir", "waveguide", "dispersion", "pumps", "detection", "raman", "source", "scenarios"}
    for key in doc:
        if key not in known:
            r.error(key, "unknown top-level key")
    model = _read_dispersion(r)
    modes = set(model.modes) if model is not None else (set(doc["dispersion"]) if isinstance(doc.get("dispersion"), dict) else None)
    waveguide = _read_waveguide(r, modes)
    pumps = _read_pumps(r)
    chain = _read_chain(r)
    lines, density, background = _read_raman(r)
    brightness = r.quantity(r.table("source", required=False), "brightness", "Hz/nm/mW2", "source", default=f"{presets.BRIGHTNESS} Hz/nm/mW2")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        r.error("seed", "expected a non-negative integer")
    scenarios = _read_scenarios(r)
    if model is not None and pumps is not None:
        for i, wl in enumerate(pumps.wavelengths_nm):
            curve = model.curve(waveguide.pump_mode) if waveguide is not None and waveguide.pump_mode in model.curves else None
            if curve is not None and not curve.in_range(wl):
                r.error(f"pumps.wavelengths[{i}]", f"{wl} nm outside the {waveguide.pump_mode} validity range {curve.interval}")
    if r.errors:
        raise ConfigError(r.errors)
    return ExperimentConfig(
        waveguide=waveguide,
        model=model,
        pumps=pumps,
        chain=chain,
        brightness=brightness,
        raman_lines=lines,
        raman_density=density,
        raman_background=background,
        seed=seed,
        scenarios=scenarios,
        output_dir=doc.get("output_dir"),
        source_hash=hashlib.sha256(text.encode()).hexdigest(),
    )


def load_config(path):
    path = Path(path)
    return parse_config(path.read_text(), str(path))


def validate_config(path):
    """Machine-readable validation report: ``{"path", "ok", "errors"}``."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        return {"path": str(path), "ok": False, "errors": [{"field": str(path), "message": str(exc)}]}
    try:
        parse_config(text, str(path))
    except ConfigError as exc:
        return {"path": str(path), "ok": False, "errors": exc.errors}
    return {"path": str(path), "ok": True, "errors": []}


def default_config_path():
    """Path of the bundled calibrated device configuration."""
    return Path(__file__).with_name("data") / "tfln_device.toml"
