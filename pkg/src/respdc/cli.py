"""Command-line front end.

Every subcommand reads one TOML configuration, runs a single analysis and
writes CSV and/or JSON artifacts into the output directory. Exit status is 0
on success, 1 for physics or domain errors and 2 for usage or configuration
errors.
"""
from __future__ import annotations

import argparse
import math
import sys
import tempfile
from pathlib import Path

import numpy as np
import tomli
import tomli_w
from scipy.constants import c

from . import io
from .brightness import enhancement_factor
from .config import (ConfigError, RunConfig, load_run_config, read_toml, source_from_dict,
                     source_to_dict)
from .design import (MemoryTarget, bandwidth_map, design_for_memory, evaluate_configuration,
                     high_purity_linewidth, purity_map)
from .errors import RespdcError
from .jsa import (PumpLineshape, PumpSpec, apply_cluster_filter, build_jsa, purity_report,
                  purity_vs_pump_bandwidth)
from .phasematch import PhasematchPoint, cluster_spacing_estimate, doubly_resonant_point
from .spectrum import detect_clusters, signal_spectrum, stability_windows
from .tuning import fine_tune_schedule

SUBCOMMANDS = ("spectrum", "clusters", "jsa", "purity", "bandwidth-map", "purity-map",
               "purity-vs-pump", "brightness", "stability", "fine-tune", "design")

DEMONSTRATOR_CONFIG = """
[source]
length_mm = 12.3
reflectivity_signal_1 = 0.99
reflectivity_signal_2 = 0.98
reflectivity_idler_1 = 0.99
reflectivity_idler_2 = 0.98
loss_signal_db_per_cm = 0.016
loss_idler_db_per_cm = 0.022
reference_temperature_c = 148.14

[operating_point]
temperature_c = 148.14
pump_wavelength_nm = 532.0
signal_wavelength_nm = 890.0

[pump]
bandwidth_mhz = 100.0
lineshape = "gaussian"
"""


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- helpers

def _setpoint(cfg: RunConfig) -> PhasematchPoint:
    op = cfg.operating_point
    return doubly_resonant_point(cfg.source, c / (op["pump_wavelength_nm"] * 1e-9),
                                 c / (op["signal_wavelength_nm"] * 1e-9), float(op["temperature_c"]))


def _pump(cfg: RunConfig, point: PhasematchPoint) -> PumpSpec:
    try:
        shape = PumpLineshape(str(cfg.pump.get("lineshape", "gaussian")))
    except ValueError:
        raise ConfigError("[pump] lineshape must be 'gaussian' or 'monochromatic'") from None
    sigma = float(cfg.pump.get("bandwidth_mhz", 100.0)) * 1e6
    return PumpSpec(point.pump_frequency, sigma if shape is PumpLineshape.GAUSSIAN else 0.0, shape)


def _window(cfg: RunConfig, point: PhasematchPoint, default_spacings: float):
    grid = cfg.section("grid")
    spacings = float(grid.get("window_cluster_spacings", default_spacings))
    half = spacings * cluster_spacing_estimate(cfg.source, point)
    return (point.signal_frequency - half, point.signal_frequency + half), grid.get("points")


class Emitter:
    def __init__(self, cfg: RunConfig):
        self.dir = cfg.output_directory
        self.fmt = cfg.output_format
        self.written: list[Path] = []

    @property
    def csv(self) -> bool:
        return self.fmt in ("csv", "both")

    @property
    def json(self) -> bool:
        return self.fmt in ("json", "both")

    def write_csv(self, name, header, rows):
        if self.csv:
            self.written.append(io.write_csv(self.dir / name, header, rows))

    def write_matrix(self, name, corner, rows, cols, matrix):
        if self.csv:
            self.written.append(io.write_matrix_csv(self.dir / name, corner, rows, cols, matrix))

    def write_json(self, name, obj):
        if self.json:
            self.written.append(io.write_json(self.dir / name, obj))


# ------------------------------------------------------------- subcommands

def cmd_spectrum(cfg, out):
    point = _setpoint(cfg)
    window, points = _window(cfg, point, 1.5)
    s = signal_spectrum(cfg.source, point.pump_frequency, point.temperature, window, points)
    report = detect_clusters(s, cfg.source)
    out.write_csv("spectrum.csv", ["signal_frequency_hz", "relative_density"],
                  zip(s.frequencies, s.values))
    out.write_json("spectrum.json", {"setpoint": point, "clusters": report,
                                     "points": len(s.frequencies)})
    return f"central_fraction={report.central_fraction:.4f} clusters={len(report.clusters)}"


def cmd_clusters(cfg, out):
    point = _setpoint(cfg)
    window, points = _window(cfg, point, 1.5)
    s = signal_spectrum(cfg.source, point.pump_frequency, point.temperature, window, points)
    report = detect_clusters(s, cfg.source)
    out.write_csv("clusters.csv", ["center_hz", "peak_frequency_hz", "integrated_weight", "peak_count"],
                  ((cl.center, cl.peak_frequency, cl.integrated_weight, cl.peak_count)
                   for cl in report.clusters))
    out.write_json("clusters.json", report)
    return (f"central_fraction={report.central_fraction:.4f} "
            f"spacing_measured_ghz={report.spacing_measured / 1e9:.3f} "
            f"spacing_estimate_ghz={report.spacing_estimate / 1e9:.3f}")


def _filtered_jsa(cfg, point):
    pump = _pump(cfg, point)
    js = build_jsa(cfg.source, pump, point.temperature, signal_hint=point.signal_frequency)
    width = cfg.section("filter").get("width_ghz")
    return apply_cluster_filter(js, cfg.source, None if width is None else float(width) * 1e9)


def cmd_jsa(cfg, out):
    point = _setpoint(cfg)
    js = _filtered_jsa(cfg, point)
    report = purity_report(js)
    opts = cfg.section("jsa")
    max_points = int(opts.get("export_points", 401))
    fsr_s = js.signal_comb.fsr
    half = float(opts.get("export_halfwidth_ghz", 1.5 * fsr_s / 1e9)) * 1e9
    s0, i0 = report.dominant_mode
    rows = np.flatnonzero(np.abs(js.signal_grid - s0) <= half)
    cols = np.flatnonzero(np.abs(js.idler_grid - i0) <= half)
    rs = max(1, math.ceil(len(rows) / max_points))
    cs = max(1, math.ceil(len(cols) / max_points))
    rows, cols = rows[::rs], cols[::cs]
    # dense crop built row by row from the band storage
    crop = np.zeros((len(rows), len(cols)))
    mask = np.zeros((len(rows), len(cols)), dtype=bool)
    lookup = {int(b): k for k, b in enumerate(cols)}
    idx = js.idler_indices()
    for r_out, r in enumerate(rows):
        for k in np.flatnonzero(js.valid[r]):
            j = lookup.get(int(idx[r, k]))
            if j is not None:
                crop[r_out, j] = abs(js.band[r, k]) ** 2
                mask[r_out, j] = js.filter_mask[r, k]
    out.write_matrix("jsa_intensity.csv", "signal_hz\\idler_hz", js.signal_grid[rows], js.idler_grid[cols], crop)
    out.write_json("jsa.json", {
        "signal_grid": {"start_hz": js.signal_grid[0], "step_hz": js.signal_grid[1] - js.signal_grid[0],
                        "points": len(js.signal_grid)},
        "idler_grid": {"start_hz": js.idler_grid[0], "step_hz": js.idler_grid[1] - js.idler_grid[0],
                       "points": len(js.idler_grid)},
        "export": {"signal_hz": js.signal_grid[rows], "idler_hz": js.idler_grid[cols],
                   "filter_mask": mask.astype(int)},
        "filter": {"center_hz": js.filter_center, "width_hz": js.filter_width},
        "pump": js.pump, "temperature_c": js.temperature, "purity": report})
    return f"P={report.total_purity:.4f} M={report.mode_excitation:.4f} K={report.schmidt_number:.4f}"


def cmd_purity(cfg, out):
    point = _setpoint(cfg)
    report = purity_report(_filtered_jsa(cfg, point))
    out.write_csv("purity.csv", ["mode_excitation", "schmidt_number", "spectral_purity", "total_purity"],
                  [(report.mode_excitation, report.schmidt_number, report.spectral_purity,
                    report.total_purity)])
    out.write_json("purity.json", report)
    return f"P={report.total_purity:.4f} M={report.mode_excitation:.4f} K={report.schmidt_number:.4f}"


def _map_axes(cfg):
    m = cfg.section("map")
    lengths = np.array(m.get("lengths_mm", [2.5, 5, 7.5, 10, 12.3, 15, 20, 30, 50, 70])) * 1e-3
    refl = np.array(m.get("reflectivities", [0.7, 0.8, 0.9, 0.95, 0.98, 0.99]))
    return lengths, refl


def cmd_bandwidth_map(cfg, out):
    point = _setpoint(cfg)
    lengths, refl = _map_axes(cfg)
    bmap = bandwidth_map(cfg.source, lengths, refl, point.temperature, point.signal_frequency)
    out.write_matrix("bandwidth_map.csv", "length_mm\\reflectivity", lengths * 1e3, refl, bmap.values / 1e6)
    out.write_json("bandwidth_map.json", {"lengths_m": lengths, "reflectivities": refl,
                                          "linewidth_hz": bmap.values})
    return f"linewidth_mhz_min={bmap.values.min() / 1e6:.2f} max={bmap.values.max() / 1e6:.2f}"


def cmd_purity_map(cfg, out):
    point = _setpoint(cfg)
    lengths, refl = _map_axes(cfg)
    pump = _pump(cfg, point)
    pmap = purity_map(cfg.source, lengths, refl, pump, point.temperature, point.signal_frequency,
                      workers=cfg.threads)
    out.write_matrix("purity_map.csv", "length_mm\\reflectivity", lengths * 1e3, refl, pmap.values)
    out.write_json("purity_map.json", {"lengths_m": lengths, "reflectivities": refl,
                                       "mode_excitation": pmap.values, "linewidth_hz": pmap.linewidths})
    lw = high_purity_linewidth(pmap)
    return f"max_M={pmap.values.max():.4f} linewidth_mhz_at_M>0.95={lw / 1e6:.1f}"


def cmd_purity_vs_pump(cfg, out):
    point = _setpoint(cfg)
    opts = cfg.section("purity_vs_pump")
    sigmas = np.array(opts.get("sigmas_mhz", [10, 20, 50, 100, 200, 400, 800])) * 1e6
    cases = {}
    geometries = opts.get("cases") or [{"name": "source"}]
    base = source_to_dict(cfg.source)
    for g in geometries:
        table = {**base, **{k: v for k, v in g.items() if k != "name"}}
        spec = source_from_dict(table, cfg.operating_point)
        p = doubly_resonant_point(spec, point.pump_frequency, point.signal_frequency, point.temperature)
        cases[str(g.get("name", "case"))] = (spec, p.pump_frequency)
    curves = purity_vs_pump_bandwidth(cases, point.temperature, sigmas)
    out.write_csv("purity_vs_pump.csv", ["case", "sigma_hz", "schmidt_number", "spectral_purity"],
                  ((cv.name, s, k, 1 / k) for cv in curves for s, k in zip(cv.sigmas, cv.schmidt)))
    out.write_json("purity_vs_pump.json", [
        {"name": cv.name, "linewidth_hz": cv.linewidth, "sigma_hz": cv.sigmas, "schmidt_number": cv.schmidt,
         "mode_excitation": cv.mode_excitation, "crossover_sigma_hz": cv.crossover(),
         "crossover_interpolated_hz": cv.crossover_interpolated()} for cv in curves])
    return " ".join(f"{cv.name}:crossover_mhz={cv.crossover() / 1e6:.0f}" for cv in curves)


def cmd_brightness(cfg, out):
    point = _setpoint(cfg)
    report = enhancement_factor(cfg.source, point, point.temperature)
    ref = float(cfg.section("brightness").get("reference_per_s_mw_mhz", 15.0))
    absolute = ref * report.relative_spectral_brightness
    out.write_json("brightness.json", {"report": report, "reference_per_s_mw_mhz": ref,
                                       "spectral_brightness_per_s_mw_mhz": absolute,
                                       "rate_in_linewidth_per_s_mw": absolute * report.linewidth_signal / 1e6})
    out.write_csv("brightness.csv", ["quantity", "value"], [
        ("clustering_factor", report.clustering_factor), ("finesse_signal", report.finesse_signal),
        ("finesse_idler", report.finesse_idler), ("escape_probability", report.escape_probability),
        ("enhancement_proportional", report.enhancement_proportional),
        ("relative_spectral_brightness", report.relative_spectral_brightness),
        ("spectral_brightness_per_s_mw_mhz", absolute)])
    return f"relative_spectral_brightness={report.relative_spectral_brightness:.1f} brightness={absolute:.3g}"


def cmd_stability(cfg, out):
    point = _setpoint(cfg)
    window, points = _window(cfg, point, 0.5)
    pump_w, temp_w = stability_windows(cfg.source, point.pump_frequency, point.temperature, window, points)
    out.write_json("stability.json", {"pump": pump_w, "temperature": temp_w})
    out.write_csv("stability.csv", ["parameter", "halfwidth", "hop_up", "hop_down", "unit"], [
        ("pump_frequency", pump_w.halfwidth, pump_w.hop_up, pump_w.hop_down, "Hz"),
        ("temperature", temp_w.halfwidth, temp_w.hop_up, temp_w.hop_down, "K")])
    return (f"pump_halfwidth_mhz={pump_w.halfwidth / 1e6:.1f} "
            f"temperature_halfwidth_mk={temp_w.halfwidth * 1e3:.2f}")


def cmd_fine_tune(cfg, out):
    point = _setpoint(cfg)
    opts = cfg.section("tune")
    lo, hi = float(opts.get("offset_min_ghz", -2.3)), float(opts.get("offset_max_ghz", 2.3))
    offsets = np.linspace(lo, hi, int(opts.get("points", 47))) * 1e9
    sched = fine_tune_schedule(cfg.source, point, None, offsets)
    out.write_csv("fine_tune.csv", ["offset_GHz", "temperature_C", "pump_offset_GHz"],
                  ((e.signal_offset / 1e9, e.temperature, (e.pump_frequency - point.pump_frequency) / 1e9)
                   for e in sched.entries))
    out.write_json("fine_tune.json", sched)
    k = sched.coefficients
    return f"dT_dnu_s_C_per_GHz={k.dT_dnu_s_per_ghz:.4f} dnu_p_dnu_s={k.dnu_p_dnu_s:.4f}"


def cmd_design(cfg, out):
    t = cfg.section("target")
    try:
        target = MemoryTarget(float(t["wavelength_nm"]) * 1e-9, float(t["bandwidth_mhz"]) * 1e6,
                              float(t.get("minimum_purity", 0.9)), float(t.get("pump_wavelength_nm", 532.0)) * 1e-9,
                              str(t.get("name", "")))
    except KeyError as exc:
        raise ConfigError(f"[target] is missing required key {exc.args[0]!r}") from None
    temperature = float(cfg.operating_point["temperature_c"])
    if "length_mm" in t:
        result = evaluate_configuration(target, float(t["length_mm"]) * 1e-3, float(t["reflectivity"]),
                                        float(t["sigma_mhz"]) * 1e6, temperature,
                                        cfg.source.dispersion)
    else:
        result = design_for_memory(target, temperature, dispersion=cfg.source.dispersion,
                                   workers=cfg.threads)
    out.write_json("design.json", result)
    pr = result.predicted.purity
    out.write_csv("design.csv", ["quantity", "value"], [
        ("length_m", result.source.length), ("reflectivity_2", result.metadata["reflectivity"]),
        ("pump_bandwidth_hz", result.pump.bandwidth_fwhm), ("poling_period_m", result.poling_period),
        ("partner_wavelength_m", result.idler_wavelength), ("linewidth_hz", result.predicted.linewidth),
        ("mode_excitation", pr.mode_excitation), ("schmidt_number", pr.schmidt_number),
        ("total_purity", pr.total_purity), ("feasible", result.feasible)])
    return (f"P={pr.total_purity:.4f} partner_nm={result.idler_wavelength * 1e9:.2f} "
            f"feasible={result.feasible}")


COMMANDS = {
    "spectrum": cmd_spectrum, "clusters": cmd_clusters, "jsa": cmd_jsa, "purity": cmd_purity,
    "bandwidth-map": cmd_bandwidth_map, "purity-map": cmd_purity_map,
    "purity-vs-pump": cmd_purity_vs_pump, "brightness": cmd_brightness,
    "stability": cmd_stability, "fine-tune": cmd_fine_tune, "design": cmd_design,
}


# ------------------------------------------------------------------ driver

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="respdc", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", type=Path, help="TOML run configuration (default: demonstrator)")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--format", choices=("csv", "json", "both"), help="artifact format")
    parser.add_argument("--threads", type=int, help="worker processes for maps and design search")
    parser.add_argument("--emit-config", action="store_true",
                        help="also write the fully resolved configuration")
    parser.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one configuration value (TOML syntax for VALUE)")
    return parser


def _apply_overrides(path: Path | None, overrides: list[str]) -> RunConfig:
    if not overrides:
        if path is None:
            return _config_from_text(DEMONSTRATOR_CONFIG, "<demonstrator>")
        return load_run_config(path)
    data = read_toml(path) if path is not None else tomli.loads(DEMONSTRATOR_CONFIG)
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, name = key.partition(".")
        if not (sep and dot and section and name):
            raise UsageError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        try:
            parsed = tomli.loads(f"v = {value}")["v"]
        except tomli.TOMLDecodeError:
            parsed = value
        data.setdefault(section, {})[name] = parsed
    base = path.parent if path is not None else Path(".")
    with tempfile.NamedTemporaryFile("wb", suffix=".toml", dir=base, delete=False) as fh:
        tomli_w.dump(data, fh)
        tmp = Path(fh.name)
    try:
        cfg = load_run_config(tmp)
    finally:
        tmp.unlink()
    cfg.origin = str(path) if path is not None else "<demonstrator>"
    return cfg


def _config_from_text(text: str, origin: str) -> RunConfig:
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "config.toml"
        p.write_text(text, encoding="utf-8")
        cfg = load_run_config(p)
    cfg.origin = origin
    return cfg


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _apply_overrides(args.config, args.set)
    except (ConfigError, UsageError) as exc:
        print(f"respdc: configuration error: {exc}", file=sys.stderr)
        return 2
    except RespdcError as exc:
        print(f"respdc: {exc}", file=sys.stderr)
        return 1
    if args.out is not None:
        cfg.output_directory = args.out
    if args.format is not None:
        cfg.output_format = args.format
    if args.threads is not None:
        cfg.threads = args.threads
    if cfg.output_format not in ("csv", "json", "both"):
        print(f"respdc: configuration error: unknown output format {cfg.output_format!r}", file=sys.stderr)
        return 2
    try:
        cfg.output_directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"respdc: cannot create output directory: {exc}", file=sys.stderr)
        return 2
    out = Emitter(cfg)
    try:
        summary = COMMANDS[args.subcommand](cfg, out)
    except ConfigError as exc:
        print(f"respdc: configuration error: {exc}", file=sys.stderr)
        return 2
    except (RespdcError, ValueError) as exc:
        print(f"respdc: {args.subcommand}: {exc}", file=sys.stderr)
        return 1
    if args.emit_config:
        path = cfg.output_directory / "resolved_config.toml"
        path.write_text(cfg.dumps(), encoding="utf-8")
        out.written.append(path)
    print(f"{args.subcommand}: {summary}")
    return 0


def main(argv: list[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
