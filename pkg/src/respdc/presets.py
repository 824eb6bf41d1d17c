"""Reference configurations: the 890/1320 nm demonstrator and its variants."""
from __future__ import annotations

from scipy.constants import c

from .cavity import MirrorPair, SourceSpec
from .dispersion import DispersionModel, ThermalModel, load_dispersion
from .phasematch import (PhasematchPoint, doubly_resonant_point, reference_poling_period,
                         solve_poling_period)

DEMONSTRATOR_TEMPERATURE = 148.14
DEMONSTRATOR_PUMP_WAVELENGTH = 532e-9
DEMONSTRATOR_SIGNAL_WAVELENGTH = 890e-9
DEMONSTRATOR_LENGTH = 12.3e-3


def poled_source(length: float, mirrors_signal: MirrorPair, mirrors_idler: MirrorPair, *,
                 pump_wavelength: float, signal_wavelength: float,
                 temperature: float = DEMONSTRATOR_TEMPERATURE,
                 loss_signal: float = 0.016, loss_idler: float = 0.022,
                 dispersion: DispersionModel | None = None,
                 thermal: ThermalModel | None = None) -> SourceSpec:
    """Source whose grating phase-matches the two wavelengths at ``temperature``.

    ``temperature`` doubles as the reference temperature of length and period.
    """
    dispersion = load_dispersion() if dispersion is None else dispersion
    thermal = ThermalModel() if thermal is None else thermal
    draft = SourceSpec(length=length, poling_period=1.0, mirrors_signal=mirrors_signal,
                       mirrors_idler=mirrors_idler, dispersion=dispersion,
                       loss_signal=loss_signal, loss_idler=loss_idler,
                       reference_temperature=temperature, thermal=thermal)
    period = solve_poling_period(draft, pump_wavelength, signal_wavelength, temperature)
    return draft.replace(poling_period=reference_poling_period(draft, period, temperature))


def demonstrator(dispersion: DispersionModel | None = None, *, length: float = DEMONSTRATOR_LENGTH,
                 signal_r2: float = 0.98, idler_r2: float = 0.98) -> SourceSpec:
    """12.3 mm waveguide with R1 = 0.99 and R2 = 0.98 on both polarizations."""
    return poled_source(length, MirrorPair(0.99, signal_r2), MirrorPair(0.99, idler_r2),
                        pump_wavelength=DEMONSTRATOR_PUMP_WAVELENGTH,
                        signal_wavelength=DEMONSTRATOR_SIGNAL_WAVELENGTH,
                        dispersion=dispersion)


def demonstrator_setpoint(spec: SourceSpec | None = None,
                          temperature: float = DEMONSTRATOR_TEMPERATURE) -> PhasematchPoint:
    """Doubly resonant operating point next to 890 nm with a pump near 532 nm."""
    spec = demonstrator() if spec is None else spec
    return doubly_resonant_point(spec, c / DEMONSTRATOR_PUMP_WAVELENGTH,
                                 c / DEMONSTRATOR_SIGNAL_WAVELENGTH, temperature)


#: Geometries marked 1-3 on the mode-excitation map, as (length, signal R2).
FIG6_CASES = {
    "case1": (10e-3, 0.95),
    "case2": (70e-3, 0.95),
    "case3": (10e-3, 0.70),
}


def geometry_case(name: str, dispersion: DispersionModel | None = None) -> SourceSpec:
    length, r2 = FIG6_CASES[name]
    return demonstrator(dispersion, length=length, signal_r2=r2)
