"""First-order quasi-phase-matching of the type-II process o -> o + e.

The pump and the signal are ordinary polarized, the idler is extraordinary.
The signal is by convention the higher-frequency photon.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.constants import c
from scipy.optimize import brentq

from .cavity import IDLER, SIGNAL, SourceSpec, resonance_near
from .dispersion import Polarization, group_index, propagation_constant
from ._util import fwhm
from .errors import ConvergenceError, DomainError

PUMP = Polarization.ORDINARY

#: Numerator of the closed-form phase-matching bandwidth (FWHM of sinc^2).
SINC2_FWHM_CONSTANT = 5.56


@dataclass(frozen=True)
class PhasematchPoint:
    """Pump and signal frequencies at one temperature.

    The idler frequency is always derived from energy conservation and is never
    stored. ``poling_period`` overrides the source's grating when given (metres,
    at the reference temperature).
    """

    pump_frequency: float
    signal_frequency: float
    temperature: float
    poling_period: float | None = None

    def __post_init__(self):
        if not (self.pump_frequency > 0 and self.signal_frequency > 0):
            raise DomainError("frequencies must be positive")
        if not self.signal_frequency < self.pump_frequency:
            raise DomainError("signal frequency must be below the pump frequency")

    @property
    def idler_frequency(self) -> float:
        return self.pump_frequency - self.signal_frequency

    @classmethod
    def from_wavelengths(cls, pump_wavelength: float, signal_wavelength: float, temperature: float,
                         poling_period: float | None = None) -> "PhasematchPoint":
        return cls(c / pump_wavelength, c / signal_wavelength, temperature, poling_period)

    def with_(self, **changes) -> "PhasematchPoint":
        fields = dict(pump_frequency=self.pump_frequency, signal_frequency=self.signal_frequency,
                      temperature=self.temperature, poling_period=self.poling_period)
        fields.update(changes)
        return PhasematchPoint(**fields)


def grating_vector(spec: SourceSpec, temperature, poling_period: float | None = None):
    """``2 pi / Lambda(T)`` with the thermally expanded poling period."""
    period = spec.poling_period if poling_period is None else poling_period
    scale = spec.poling_period_at(temperature) / spec.poling_period
    return 2 * np.pi / (period * scale)


def delta_beta(spec: SourceSpec, pump_frequency, signal_frequency, temperature,
               poling_period: float | None = None):
    """Vectorized ``beta_p - beta_s - beta_i - 2 pi / Lambda`` in rad/m."""
    nu_p = np.asarray(pump_frequency, dtype=float)
    nu_s = np.asarray(signal_frequency, dtype=float)
    model = spec.dispersion
    db = (propagation_constant(model, PUMP, nu_p, temperature)
          - propagation_constant(model, SIGNAL, nu_s, temperature)
          - propagation_constant(model, IDLER, nu_p - nu_s, temperature)
          - grating_vector(spec, temperature, poling_period))
    return db if np.ndim(db) else float(db)


def phase_mismatch(spec: SourceSpec, point: PhasematchPoint) -> float:
    return delta_beta(spec, point.pump_frequency, point.signal_frequency, point.temperature,
                      point.poling_period)


def sinc_amplitude(delta_beta_value, length):
    """``sin(x)/x`` at ``x = delta_beta * length / 2``."""
    return np.sinc(np.asarray(delta_beta_value) * length / (2 * np.pi))


def pm_amplitude(spec: SourceSpec, point: PhasematchPoint) -> float:
    length = spec.length_at(point.temperature)
    return float(sinc_amplitude(phase_mismatch(spec, point), length))


def solve_poling_period(spec: SourceSpec, pump_wavelength: float, signal_wavelength: float,
                        temperature: float) -> float:
    """Poling period (at ``temperature``) that phase-matches the given wavelengths."""
    if not signal_wavelength > pump_wavelength:
        raise DomainError("signal wavelength must exceed the pump wavelength")
    nu_p, nu_s = c / pump_wavelength, c / signal_wavelength
    model = spec.dispersion
    mismatch = (propagation_constant(model, PUMP, nu_p, temperature)
                - propagation_constant(model, SIGNAL, nu_s, temperature)
                - propagation_constant(model, IDLER, nu_p - nu_s, temperature))
    if not mismatch > 0:
        raise DomainError("process not quasi-phasematchable with first-order grating")
    return 2 * np.pi / mismatch


def reference_poling_period(spec: SourceSpec, period_at_temperature: float, temperature: float) -> float:
    """Convert a period measured at ``temperature`` back to the source's reference temperature."""
    scale = spec.length_at(temperature) / spec.length
    return period_at_temperature / scale


def _mismatch_slope(spec, nu_p, nu_s, temperature, poling_period):
    h = 1e-7 * nu_s
    return (delta_beta(spec, nu_p, nu_s + h, temperature, poling_period)
            - delta_beta(spec, nu_p, nu_s - h, temperature, poling_period)) / (2 * h)


def phasematched_signal(spec: SourceSpec, pump_frequency: float, temperature: float,
                        hint: float | None = None, poling_period: float | None = None,
                        samples: int = 2001) -> float:
    """Signal frequency with ``delta_beta = 0`` on the branch ``nu_p/2 < nu_s < 3 nu_p/4``.

    Roots are bracketed on a uniform grid, isolated by Brent's method and
    polished with Newton steps until ``|delta_beta| < 1e-3 rad/m``.
    """
    lo, hi = 0.5 * pump_frequency, 0.75 * pump_frequency
    # stay clear of exact degeneracy and of the dispersion-model edges
    wl_lo, wl_hi = spec.dispersion.wavelength_range
    lo_ok = max(lo * (1 + 1e-6), c / wl_hi * (1 + 1e-4))
    hi_ok = min(hi, pump_frequency - c / wl_hi * (1 + 1e-4), c / wl_lo * (1 - 1e-4))
    grid = np.linspace(lo_ok, hi_ok, samples)
    values = delta_beta(spec, pump_frequency, grid, temperature, poling_period)
    sign_change = np.flatnonzero(np.signbit(values[:-1]) != np.signbit(values[1:]))
    if len(sign_change) == 0:
        raise DomainError("no phase-matched signal frequency in the search window")

    def f(x):
        return delta_beta(spec, pump_frequency, x, temperature, poling_period)

    roots = []
    for k in sign_change:
        x = brentq(f, grid[k], grid[k + 1], xtol=1e-3, rtol=1e-15)
        for _ in range(10):
            fx = f(x)
            if abs(fx) < 1e-3:
                break
            x -= fx / _mismatch_slope(spec, pump_frequency, x, temperature, poling_period)
        else:
            raise ConvergenceError(f"phase-matching refinement stalled near {x:.9e} Hz")
        roots.append(x)
    if len(roots) > 1:
        warnings.warn(f"{len(roots)} phase-matched signal frequencies found on the signal branch",
                      RuntimeWarning, stacklevel=2)
        if hint is not None:
            return min(roots, key=lambda r: abs(r - hint))
        # every root has unit amplitude; prefer the one closest to degeneracy
        return roots[0]
    return roots[0]


def _group_index_difference(spec: SourceSpec, point: PhasematchPoint):
    t = point.temperature
    ng_s = group_index(spec.dispersion, SIGNAL, c / point.signal_frequency, t)
    ng_i = group_index(spec.dispersion, IDLER, c / point.idler_frequency, t)
    if abs(ng_s - ng_i) < 1e-9:
        raise DomainError("estimate invalid at group-velocity matching")
    return ng_s, ng_i


def pm_bandwidth_estimate(spec: SourceSpec, point: PhasematchPoint) -> float:
    """Closed-form FWHM of ``sinc^2`` in signal frequency, ``5.56 c / (2 pi L |dn_g|)``."""
    ng_s, ng_i = _group_index_difference(spec, point)
    length = spec.length_at(point.temperature)
    return SINC2_FWHM_CONSTANT * c / (2 * np.pi * length) / abs(ng_s - ng_i)


def cluster_spacing_estimate(spec: SourceSpec, point: PhasematchPoint) -> float:
    """Closed-form cluster spacing ``c / (2 L |dn_g|)``."""
    ng_s, ng_i = _group_index_difference(spec, point)
    length = spec.length_at(point.temperature)
    return c / (2 * length) / abs(ng_s - ng_i)


def doubly_resonant_point(spec: SourceSpec, pump_frequency: float, signal_frequency: float,
                          temperature: float) -> PhasematchPoint:
    """Operating point where both photons sit exactly on a cavity resonance.

    The signal is moved to the resonance nearest ``signal_frequency``; the
    pump is then shifted so that the idler lands on its nearest resonance.
    """
    nu_s = resonance_near(spec, SIGNAL, signal_frequency, temperature)
    nu_i = resonance_near(spec, IDLER, pump_frequency - nu_s, temperature)
    return PhasematchPoint(nu_s + nu_i, nu_s, temperature)


def sinc2_fwhm_numeric(spec: SourceSpec, point: PhasematchPoint, span: float | None = None,
                       points: int = 200001) -> float:
    """FWHM of ``sinc^2(delta_beta L / 2)`` in signal frequency from a dense scan."""
    if span is None:
        span = 4 * pm_bandwidth_estimate(spec, point)
    nu = point.signal_frequency + np.linspace(-span / 2, span / 2, points)
    db = delta_beta(spec, point.pump_frequency, nu, point.temperature, point.poling_period)
    y = sinc_amplitude(db, spec.length_at(point.temperature)) ** 2
    return fwhm(nu, y)


__all__ = [
    "PhasematchPoint", "phase_mismatch", "pm_amplitude", "solve_poling_period",
    "phasematched_signal", "pm_bandwidth_estimate", "cluster_spacing_estimate",
    "doubly_resonant_point", "delta_beta", "grating_vector", "reference_poling_period",
    "sinc2_fwhm_numeric", "SINC2_FWHM_CONSTANT",
]
