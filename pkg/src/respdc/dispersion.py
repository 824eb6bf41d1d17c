"""Temperature-dependent effective indices of the waveguide modes.

Indices come from a bulk Sellmeier model (coefficients stored in a TOML data
file) plus a constant per-polarization mode offset that stands in for the
waveguide correction. Wavelengths are in metres, temperatures in degrees
Celsius and frequencies in Hz throughout.
"""
from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np
import tomli
from scipy.constants import c

from .errors import DomainError

DATA_DIR_ENV = "RESPDC_DATA_DIR"
DEFAULT_SELLMEIER_FILE = "cln_edwards_lawrence.toml"

_COEFFICIENT_NAMES = ("A1", "A2", "A3", "A4", "B1", "B2", "B3")


class Polarization(enum.Enum):
    """Mode polarization. Signal is ordinary, idler extraordinary."""

    ORDINARY = "ordinary"
    EXTRAORDINARY = "extraordinary"

    @property
    def short(self) -> str:
        return "o" if self is Polarization.ORDINARY else "e"


@dataclass(frozen=True)
class DispersionModel:
    """Sellmeier description of both polarizations.

    The index is evaluated as

        n^2 = A1 + (A2 + B1 F) / (lam^2 - (A3 + B2 F)^2) + B3 F - A4 lam^2

    with ``lam`` in micrometres and ``F = (T - T0)(T + T0 + 546)``. A constant
    ``mode_offset`` is added to ``n`` afterwards.
    """

    ordinary: Mapping[str, float]
    extraordinary: Mapping[str, float]
    temperature_reference: float = 24.5
    mode_offset_ordinary: float = 0.0
    mode_offset_extraordinary: float = 0.0
    wavelength_range: tuple[float, float] = (0.4e-6, 3.0e-6)
    temperature_range: tuple[float, float] = (0.0, 250.0)
    citation: str = ""
    source_file: str | None = field(default=None, compare=False)

    def __post_init__(self):
        for pol, coeffs in (("ordinary", self.ordinary), ("extraordinary", self.extraordinary)):
            missing = [k for k in _COEFFICIENT_NAMES if k not in coeffs]
            if missing:
                raise DomainError(f"{pol} Sellmeier table lacks coefficients {missing}")
            object.__setattr__(self, pol, {k: float(coeffs[k]) for k in _COEFFICIENT_NAMES})
        lo, hi = self.wavelength_range
        if not 0 < lo < hi:
            raise DomainError(f"invalid wavelength range {self.wavelength_range}")

    def coefficients(self, pol: Polarization) -> Mapping[str, float]:
        return self.ordinary if pol is Polarization.ORDINARY else self.extraordinary

    def mode_offset(self, pol: Polarization) -> float:
        if pol is Polarization.ORDINARY:
            return self.mode_offset_ordinary
        return self.mode_offset_extraordinary

    def with_mode_offsets(self, ordinary: float = 0.0, extraordinary: float = 0.0) -> "DispersionModel":
        return replace(self, mode_offset_ordinary=ordinary, mode_offset_extraordinary=extraordinary)

    @classmethod
    def constant(cls, n_ordinary: float, n_extraordinary: float | None = None) -> "DispersionModel":
        """Dispersion-free model with ``n = n0`` at every wavelength and temperature."""
        if n_extraordinary is None:
            n_extraordinary = n_ordinary

        def table(n0):
            return {"A1": n0 * n0, "A2": 0.0, "A3": 0.0, "A4": 0.0, "B1": 0.0, "B2": 0.0, "B3": 0.0}

        return cls(table(n_ordinary), table(n_extraordinary), wavelength_range=(1e-7, 1e-4),
                   citation="constant index")


@dataclass(frozen=True)
class ThermalModel:
    """Linear thermal expansion of the crystal along the waveguide."""

    expansion_coefficient: float = 1.5e-5
    reference_temperature: float = 24.5

    def __post_init__(self):
        if not self.expansion_coefficient > 0:
            raise DomainError("expansion coefficient must be positive")


def _sellmeier_path(path: str | os.PathLike | None) -> Path | None:
    if path is not None:
        return Path(path)
    data_dir = os.environ.get(DATA_DIR_ENV)
    if data_dir:
        return Path(data_dir) / DEFAULT_SELLMEIER_FILE
    return None


def load_dispersion(path: str | os.PathLike | None = None) -> DispersionModel:
    """Load a Sellmeier table from TOML.

    Without an explicit path the file is looked up in ``$RESPDC_DATA_DIR`` and
    then in the package data.
    """
    resolved = _sellmeier_path(path)
    if resolved is None:
        text = resources.files("respdc.data").joinpath(DEFAULT_SELLMEIER_FILE).read_text("utf-8")
        origin = f"respdc/data/{DEFAULT_SELLMEIER_FILE}"
    else:
        try:
            text = resolved.read_text(encoding="utf-8")
        except OSError as exc:
            raise DomainError(f"{resolved}: cannot read Sellmeier data ({exc.strerror})") from None
        origin = str(resolved)
    try:
        table = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise DomainError(f"{origin}: {exc}") from None
    missing = [k for k in ("ordinary", "extraordinary", "wavelength_min_um", "wavelength_max_um")
               if k not in table]
    if missing:
        raise DomainError(f"{origin}: missing keys {missing}")
    if table.get("form", "edwards-lawrence") != "edwards-lawrence":
        raise DomainError(f"{origin}: unsupported Sellmeier form {table['form']!r}")
    return DispersionModel(
        ordinary=table["ordinary"],
        extraordinary=table["extraordinary"],
        temperature_reference=float(table.get("temperature_reference_c", 24.5)),
        mode_offset_ordinary=float(table.get("mode_offset_ordinary", 0.0)),
        mode_offset_extraordinary=float(table.get("mode_offset_extraordinary", 0.0)),
        wavelength_range=(float(table["wavelength_min_um"]) * 1e-6, float(table["wavelength_max_um"]) * 1e-6),
        temperature_range=(float(table.get("temperature_min_c", 0.0)), float(table.get("temperature_max_c", 250.0))),
        citation=str(table.get("citation", "")),
        source_file=origin,
    )


def _check_domain(model: DispersionModel, wavelength, temperature):
    wl = np.asarray(wavelength, dtype=float)
    t = np.asarray(temperature, dtype=float)
    lo, hi = model.wavelength_range
    if np.any(~(wl >= lo)):
        raise DomainError(f"wavelength {np.min(wl):.6g} m below validity bound {lo:.6g} m")
    if np.any(~(wl <= hi)):
        raise DomainError(f"wavelength {np.max(wl):.6g} m above validity bound {hi:.6g} m")
    tlo, thi = model.temperature_range
    if np.any(~(t >= tlo)):
        raise DomainError(f"temperature {np.min(t):.6g} C below validity bound {tlo:g} C")
    if np.any(~(t <= thi)):
        raise DomainError(f"temperature {np.max(t):.6g} C above validity bound {thi:g} C")
    return wl, t


def _sellmeier(coeffs: Mapping[str, float], t0: float, wavelength, temperature):
    lam2 = (np.asarray(wavelength) * 1e6) ** 2
    f = (temperature - t0) * (temperature + t0 + 546.0)
    n2 = (coeffs["A1"]
          + (coeffs["A2"] + coeffs["B1"] * f) / (lam2 - (coeffs["A3"] + coeffs["B2"] * f) ** 2)
          + coeffs["B3"] * f
          - coeffs["A4"] * lam2)
    return np.sqrt(n2)


def refractive_index(model: DispersionModel, pol: Polarization, wavelength, temperature):
    """Effective index ``n_sellmeier + mode_offset`` (scalar or array)."""
    wl, t = _check_domain(model, wavelength, temperature)
    n = _sellmeier(model.coefficients(pol), model.temperature_reference, wl, t) + model.mode_offset(pol)
    return n if np.ndim(n) else float(n)


def group_index(model: DispersionModel, pol: Polarization, wavelength, temperature,
                rel_step: float = 1e-4):
    """Group index ``n - lam dn/dlam``.

    The derivative is a central difference with step ``rel_step * lam``,
    Richardson-extrapolated once against the half step.
    """
    wl, t = _check_domain(model, wavelength, temperature)
    lo, hi = model.wavelength_range
    if np.any(wl * (1 - rel_step) < lo) or np.any(wl * (1 + rel_step) > hi):
        raise DomainError("wavelength within one derivative step of the validity boundary")

    def n(x):
        return refractive_index(model, pol, x, t)

    def slope(h):
        return (n(wl * (1 + h)) - n(wl * (1 - h))) / (2 * wl * h)

    dn_dlam = (4 * slope(rel_step / 2) - slope(rel_step)) / 3
    ng = n(wl) - wl * dn_dlam
    return ng if np.ndim(ng) else float(ng)


def propagation_constant(model: DispersionModel, pol: Polarization, frequency, temperature):
    """Propagation constant ``2 pi nu n / c`` in rad/m."""
    nu = np.asarray(frequency, dtype=float)
    if np.any(~(nu > 0)):
        raise DomainError("frequency must be positive")
    beta = 2 * np.pi * nu * refractive_index(model, pol, c / nu, temperature) / c
    return beta if np.ndim(beta) else float(beta)


def sample_length(thermal: ThermalModel, length0: float, temperature):
    """Thermally expanded length ``L0 (1 + a (T - T_ref))``."""
    if not length0 > 0:
        raise DomainError("reference length must be positive")
    scale = 1.0 + thermal.expansion_coefficient * (np.asarray(temperature, dtype=float)
                                                   - thermal.reference_temperature)
    out = length0 * scale
    return out if np.ndim(out) else float(out)
