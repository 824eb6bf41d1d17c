"""TOML configuration files with unit-suffixed keys.

A run configuration has up to four tables::

    [source]            geometry, mirrors, losses, dispersion data
    [operating_point]   temperature_c, pump_wavelength_nm, signal_wavelength_nm
    [pump]              bandwidth_mhz, lineshape
    [grid] / [scan] / [map] / [tune] / [target]   subcommand parameters

When ``poling_period_um`` is absent the grating is solved for the operating
point wavelengths at the reference temperature.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import tomli
import tomli_w

from .cavity import MirrorPair, SourceSpec
from .dispersion import ThermalModel, load_dispersion
from .errors import DomainError, RespdcError
from .phasematch import reference_poling_period, solve_poling_period

DEFAULT_OPERATING_POINT = {"temperature_c": 148.14, "pump_wavelength_nm": 532.0,
                           "signal_wavelength_nm": 890.0}


class ConfigError(RespdcError):
    """A configuration file is malformed or incomplete."""


def read_toml(path: str | os.PathLike) -> dict:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            return tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: file not found") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _get(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"[{where}] is missing required key {key!r}")
    return table[key]


def source_from_dict(table: dict, operating_point: dict | None = None,
                     base_dir: Path | None = None) -> SourceSpec:
    op = {**DEFAULT_OPERATING_POINT, **(operating_point or {})}
    sellmeier = table.get("sellmeier_file")
    if sellmeier is not None and base_dir is not None and not Path(sellmeier).is_absolute():
        sellmeier = base_dir / sellmeier
    try:
        model = load_dispersion(sellmeier)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    model = model.with_mode_offsets(
        float(table.get("mode_offset_ordinary", 0.0)), float(table.get("mode_offset_extraordinary", 0.0)))
    t_ref = float(table.get("reference_temperature_c", op["temperature_c"]))
    spec = SourceSpec(
        length=float(_get(table, "length_mm", "source")) * 1e-3,
        poling_period=float(table.get("poling_period_um", 1.0)) * 1e-6,
        mirrors_signal=MirrorPair(float(_get(table, "reflectivity_signal_1", "source")),
                                  float(_get(table, "reflectivity_signal_2", "source"))),
        mirrors_idler=MirrorPair(float(_get(table, "reflectivity_idler_1", "source")),
                                 float(_get(table, "reflectivity_idler_2", "source"))),
        dispersion=model,
        loss_signal=float(table.get("loss_signal_db_per_cm", 0.0)),
        loss_idler=float(table.get("loss_idler_db_per_cm", 0.0)),
        reference_temperature=t_ref,
        thermal=ThermalModel(float(table.get("expansion_coefficient_per_k", 1.5e-5)), t_ref),
    )
    if "poling_period_um" not in table:
        period = solve_poling_period(spec, op["pump_wavelength_nm"] * 1e-9,
                                     op["signal_wavelength_nm"] * 1e-9, t_ref)
        spec = spec.replace(poling_period=reference_poling_period(spec, period, t_ref))
    return spec


def source_to_dict(spec: SourceSpec) -> dict:
    out = {
        "length_mm": spec.length * 1e3,
        "poling_period_um": spec.poling_period * 1e6,
        "reflectivity_signal_1": spec.mirrors_signal.R1,
        "reflectivity_signal_2": spec.mirrors_signal.R2,
        "reflectivity_idler_1": spec.mirrors_idler.R1,
        "reflectivity_idler_2": spec.mirrors_idler.R2,
        "loss_signal_db_per_cm": spec.loss_signal,
        "loss_idler_db_per_cm": spec.loss_idler,
        "reference_temperature_c": spec.reference_temperature,
        "expansion_coefficient_per_k": spec.thermal.expansion_coefficient,
        "mode_offset_ordinary": spec.dispersion.mode_offset_ordinary,
        "mode_offset_extraordinary": spec.dispersion.mode_offset_extraordinary,
    }
    if spec.dispersion.source_file and not spec.dispersion.source_file.startswith("respdc/"):
        out["sellmeier_file"] = spec.dispersion.source_file
    return out


@dataclass
class RunConfig:
    """Resolved configuration of one CLI run."""

    source: SourceSpec
    operating_point: dict
    pump: dict = field(default_factory=dict)
    sections: dict = field(default_factory=dict)
    output_directory: Path = Path(".")
    output_format: str = "both"
    threads: int | None = None
    origin: str | None = None

    def section(self, name: str) -> dict:
        return dict(self.sections.get(name, {}))

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"source": source_to_dict(self.source),
                               "operating_point": dict(self.operating_point)}
        if self.pump:
            out["pump"] = dict(self.pump)
        for k in sorted(self.sections):
            out[k] = dict(self.sections[k])
        out["output"] = {"directory": str(self.output_directory), "format": self.output_format}
        if self.threads is not None:
            out["output"]["threads"] = self.threads
        return out

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())


_RESERVED = {"source", "operating_point", "pump", "output"}


def load_run_config(path: str | os.PathLike) -> RunConfig:
    path = Path(path)
    data = read_toml(path)
    op = {**DEFAULT_OPERATING_POINT, **data.get("operating_point", {})}
    source = source_from_dict(_get(data, "source", "top level"), op, path.parent)
    output = data.get("output", {})
    return RunConfig(
        source=source,
        operating_point=op,
        pump=dict(data.get("pump", {})),
        sections={k: v for k, v in data.items() if k not in _RESERVED and isinstance(v, dict)},
        output_directory=Path(output.get("directory", ".")),
        output_format=str(output.get("format", "both")),
        threads=output.get("threads"),
        origin=str(path),
    )
