"""Co-tuning of temperature and pump frequency along one double resonance.

Both photons stay resonant while the round-trip phases
``phi_j = 2 omega_j n_j(omega_j, T) L(T) / c`` keep their integer orders.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cavity import (IDLER, SIGNAL, SourceSpec, finesse, free_spectral_range, resonance_linewidth,
                     roundtrip_phase)
from .dispersion import Polarization
from .errors import ConvergenceError, DomainError
from .phasematch import PhasematchPoint
from .spectrum import signal_spectrum

TEMPERATURE_STEP = 1e-3
PHASE_TOLERANCE = 1e-4
_NEWTON_TOL = 1e-9


@dataclass(frozen=True)
class CotuningCoefficients:
    """First-order co-tuning slopes; ``dT_dnu_s`` is in K/Hz."""

    dT_dnu_s: float
    dnu_p_dnu_s: float

    @property
    def dT_dnu_s_per_ghz(self) -> float:
        return self.dT_dnu_s * 1e9


@dataclass(frozen=True)
class ScheduleEntry:
    signal_offset: float
    temperature: float
    pump_frequency: float
    residual_phase_s: float
    residual_phase_i: float
    first_order_temperature: float
    first_order_pump_frequency: float
    peak_frequency: float


@dataclass(frozen=True)
class TuningSchedule:
    entries: list[ScheduleEntry]
    setpoint: PhasematchPoint
    coefficients: CotuningCoefficients

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(e, name) for e in self.entries])


def phase_partials(spec: SourceSpec, pol: Polarization, frequency: float, temperature: float,
                   frequency_step: float | None = None,
                   temperature_step: float = TEMPERATURE_STEP) -> tuple[float, float]:
    """``(dphi/domega [s], dphi/dT [rad/K])`` by central differences.

    The frequency step defaults to a tenth of the linewidth (a thousandth of
    the FSR for a cavity without mirrors).
    """
    if frequency_step is None:
        if finesse(spec, pol, temperature) > 0:
            frequency_step = resonance_linewidth(spec, pol, frequency, temperature) / 10
        else:
            frequency_step = free_spectral_range(spec, pol, frequency, temperature) / 1000
    dnu = frequency_step
    d_omega = (roundtrip_phase(spec, pol, frequency + dnu, temperature)
               - roundtrip_phase(spec, pol, frequency - dnu, temperature)) / (2 * 2 * np.pi * dnu)
    d_temp = (roundtrip_phase(spec, pol, frequency, temperature + temperature_step)
              - roundtrip_phase(spec, pol, frequency, temperature - temperature_step)) / (2 * temperature_step)
    return float(d_omega), float(d_temp)


def cotuning_coefficients(spec: SourceSpec, point: PhasematchPoint,
                          temperature: float | None = None) -> CotuningCoefficients:
    """Temperature and pump slopes that keep both photons on resonance."""
    t = point.temperature if temperature is None else temperature
    dw_s, dt_s = phase_partials(spec, SIGNAL, point.signal_frequency, t)
    dw_i, dt_i = phase_partials(spec, IDLER, point.idler_frequency, t)
    if dt_s == 0 or dt_i == 0 or dw_i == 0:
        raise DomainError("singular tuning: a round-trip phase does not depend on temperature")
    return CotuningCoefficients(dT_dnu_s=-(dw_s / dt_s) * 2 * np.pi,
                                dnu_p_dnu_s=1 + (dt_i * dw_s) / (dw_i * dt_s))


def _orders(spec, point, t):
    m_s = round(roundtrip_phase(spec, SIGNAL, point.signal_frequency, t) / (2 * np.pi))
    m_i = round(roundtrip_phase(spec, IDLER, point.idler_frequency, t) / (2 * np.pi))
    return m_s, m_i


def _solve_entry(spec, nu_s, m_s, m_i, t, nu_p, max_iter=50):
    """Newton on temperature (signal phase) then pump frequency (idler phase).

    The Jacobian is triangular, so alternating the two scalar updates is a full
    Newton step.
    """
    target_s, target_i = 2 * np.pi * m_s, 2 * np.pi * m_i
    for _ in range(max_iter):
        r_s = roundtrip_phase(spec, SIGNAL, nu_s, t) - target_s
        _, dt_s = phase_partials(spec, SIGNAL, nu_s, t)
        t -= r_s / dt_s
        r_i = roundtrip_phase(spec, IDLER, nu_p - nu_s, t) - target_i
        dw_i, _ = phase_partials(spec, IDLER, nu_p - nu_s, t)
        nu_p -= r_i / (2 * np.pi * dw_i)
        r_s = roundtrip_phase(spec, SIGNAL, nu_s, t) - target_s
        r_i = roundtrip_phase(spec, IDLER, nu_p - nu_s, t) - target_i
        if abs(r_s) < _NEWTON_TOL and abs(r_i) < _NEWTON_TOL:
            return t, nu_p, r_s, r_i
    if abs(r_s) < PHASE_TOLERANCE and abs(r_i) < PHASE_TOLERANCE:
        return t, nu_p, r_s, r_i
    raise ConvergenceError("co-tuning Newton iteration did not converge")


def fine_tune_schedule(spec: SourceSpec, point: PhasematchPoint, temperature: float | None,
                       signal_offsets, verify: bool = True, window_halfwidth: float | None = None
                       ) -> TuningSchedule:
    """Co-tuned ``(T, nu_p)`` for each signal offset around a doubly resonant point.

    Offsets are solved by path continuation outwards from zero; each entry is
    seeded by its neighbour closer to the setpoint. With ``verify`` the cw
    spectrum is evaluated at every entry and its dominant peak must sit on the
    tuned resonance.
    """
    t0 = point.temperature if temperature is None else temperature
    offsets = np.asarray(signal_offsets, dtype=float)
    fsr = free_spectral_range(spec, SIGNAL, point.signal_frequency, t0)
    if np.any(np.abs(offsets) > fsr * (1 + 1e-9)):
        raise DomainError(f"offsets must stay within one signal FSR ({fsr / 1e9:.4g} GHz)")
    coeffs = cotuning_coefficients(spec, point, t0)
    m_s, m_i = _orders(spec, point, t0)
    lw = resonance_linewidth(spec, SIGNAL, point.signal_frequency, t0)
    half = 4 * fsr if window_halfwidth is None else window_halfwidth

    solved: dict[int, tuple[float, float, float, float]] = {}
    order = sorted(range(len(offsets)), key=lambda k: (abs(offsets[k]), offsets[k]))
    for k in order:
        d = offsets[k]
        # seed from the nearest already-solved offset on the same side
        seeds = [j for j in solved if np.sign(offsets[j]) in (0, np.sign(d))]
        if seeds:
            j = min(seeds, key=lambda j: abs(offsets[j] - d))
            t_seed, p_seed = solved[j][:2]
            step = d - offsets[j]
        else:
            t_seed, p_seed, step = t0, point.pump_frequency, d
        t_guess = t_seed + coeffs.dT_dnu_s * step
        p_guess = p_seed + coeffs.dnu_p_dnu_s * step
        try:
            solved[k] = _solve_entry(spec, point.signal_frequency + d, m_s, m_i, t_guess, p_guess)
        except ConvergenceError as exc:
            raise ConvergenceError(f"co-tuning failed at signal offset {d / 1e9:+.4f} GHz") from exc

    entries = []
    for k, d in enumerate(offsets):
        t, nu_p, r_s, r_i = solved[k]
        nu_s = point.signal_frequency + d
        peak = math.nan
        if verify:
            s = signal_spectrum(spec, nu_p, t, (nu_s - half, nu_s + half))
            peak = s.peak_frequency()
            if abs(peak - nu_s) > lw:
                raise DomainError(f"mode hop at signal offset {d / 1e9:+.4f} GHz: dominant peak "
                                  f"{(peak - nu_s) / 1e6:+.1f} MHz away from the tuned resonance")
        entries.append(ScheduleEntry(
            signal_offset=float(d), temperature=float(t), pump_frequency=float(nu_p),
            residual_phase_s=float(r_s), residual_phase_i=float(r_i),
            first_order_temperature=float(t0 + coeffs.dT_dnu_s * d),
            first_order_pump_frequency=float(point.pump_frequency + coeffs.dnu_p_dnu_s * d),
            peak_frequency=float(peak)))
    return TuningSchedule(entries, point, coeffs)


__all__ = ["roundtrip_phase", "phase_partials", "cotuning_coefficients", "fine_tune_schedule",
           "CotuningCoefficients", "TuningSchedule", "ScheduleEntry"]
