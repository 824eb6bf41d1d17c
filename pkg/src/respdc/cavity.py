"""Fabry-Perot response of the mirror-coated waveguide.

Each polarization sees its own pair of facet reflectivities and propagation
loss. Losses are given in dB/cm of power and converted to a power attenuation
coefficient in 1/m; ``exp(-alpha L / 2)`` is then the single-pass amplitude
factor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.constants import c

from .dispersion import (DispersionModel, Polarization, ThermalModel, group_index,
                         refractive_index, sample_length)
from .errors import ConvergenceError, DegenerateCavityError, DomainError

SIGNAL = Polarization.ORDINARY
IDLER = Polarization.EXTRAORDINARY

DB_PER_CM_TO_PER_M = math.log(10.0) / 10.0 * 100.0


@dataclass(frozen=True)
class MirrorPair:
    """Power reflectivities of the input (``R1``) and output (``R2``) facets."""

    R1: float
    R2: float

    def __post_init__(self):
        for name in ("R1", "R2"):
            r = getattr(self, name)
            if not 0.0 <= r < 1.0:
                raise DomainError(f"reflectivity {name}={r} outside [0, 1)")


@dataclass(frozen=True)
class SourceSpec:
    """Complete physical description of one resonant waveguide source.

    ``length`` and ``poling_period`` are the values at ``reference_temperature``;
    both expand with ``thermal.expansion_coefficient``.
    """

    length: float
    poling_period: float
    mirrors_signal: MirrorPair
    mirrors_idler: MirrorPair
    dispersion: DispersionModel
    loss_signal: float = 0.0
    loss_idler: float = 0.0
    reference_temperature: float = 24.5
    thermal: ThermalModel = field(default_factory=ThermalModel)

    def __post_init__(self):
        if not self.length > 0:
            raise DomainError("length must be positive")
        if not self.poling_period > 0:
            raise DomainError("poling period must be positive")
        if self.loss_signal < 0 or self.loss_idler < 0:
            raise DomainError("losses must be non-negative")
        if self.thermal.reference_temperature != self.reference_temperature:
            object.__setattr__(self, "thermal",
                               replace(self.thermal, reference_temperature=self.reference_temperature))

    def mirrors(self, pol: Polarization) -> MirrorPair:
        return self.mirrors_signal if pol is SIGNAL else self.mirrors_idler

    def loss_db_per_cm(self, pol: Polarization) -> float:
        return self.loss_signal if pol is SIGNAL else self.loss_idler

    def attenuation(self, pol: Polarization) -> float:
        """Power attenuation coefficient in 1/m."""
        return self.loss_db_per_cm(pol) * DB_PER_CM_TO_PER_M

    def length_at(self, temperature):
        return sample_length(self.thermal, self.length, temperature)

    def poling_period_at(self, temperature):
        return sample_length(self.thermal, self.poling_period, temperature)

    def replace(self, **changes) -> "SourceSpec":
        return replace(self, **changes)

    def swapped(self) -> "SourceSpec":
        """Exchange every signal parameter with its idler counterpart."""
        return replace(self, mirrors_signal=self.mirrors_idler, mirrors_idler=self.mirrors_signal,
                       loss_signal=self.loss_idler, loss_idler=self.loss_signal)


@dataclass(frozen=True)
class ResonanceComb:
    """Resonance frequencies of one polarization inside a frequency window."""

    polarization: Polarization
    centers: np.ndarray
    orders: np.ndarray
    fsr: float
    linewidth_fwhm: float
    finesse: float

    def __len__(self):
        return len(self.centers)

    def nearest(self, frequency) -> np.ndarray:
        """Index of the closest comb line for each frequency."""
        nu = np.asarray(frequency, dtype=float)
        if len(self.centers) == 1:
            return np.zeros(nu.shape, dtype=int)
        mids = 0.5 * (self.centers[1:] + self.centers[:-1])
        return np.searchsorted(mids, nu)


def round_trip_amplitude(spec: SourceSpec, pol: Polarization, temperature) -> float:
    """``rho = sqrt(R1 R2) exp(-alpha L)``, the amplitude surviving one round trip."""
    m = spec.mirrors(pol)
    return math.sqrt(m.R1 * m.R2) * math.exp(-spec.attenuation(pol) * spec.length_at(temperature))


def roundtrip_phase(spec: SourceSpec, pol: Polarization, frequency, temperature):
    """Round-trip phase ``2 omega n L / c`` with ``n`` and ``L`` taken at ``temperature``."""
    nu = np.asarray(frequency, dtype=float)
    if np.any(~(nu > 0)):
        raise DomainError("frequency must be positive")
    n = refractive_index(spec.dispersion, pol, c / nu, temperature)
    phi = 4 * np.pi * nu * n * spec.length_at(temperature) / c
    return phi if np.ndim(phi) else float(phi)


def airy_amplitude(spec: SourceSpec, pol: Polarization, frequency, temperature):
    """Complex cavity response ``A(nu)`` of one polarization."""
    m = spec.mirrors(pol)
    alpha_l = spec.attenuation(pol) * spec.length_at(temperature)
    phi = roundtrip_phase(spec, pol, frequency, temperature)
    numerator = math.sqrt((1 - m.R1) * (1 - m.R2)) * math.exp(-alpha_l / 2)
    return numerator / (1 - math.sqrt(m.R1 * m.R2) * math.exp(-alpha_l) * np.exp(1j * phi))


def free_spectral_range(spec: SourceSpec, pol: Polarization, frequency, temperature):
    ng = group_index(spec.dispersion, pol, c / np.asarray(frequency, dtype=float), temperature)
    fsr = c / (2 * ng * spec.length_at(temperature))
    return fsr if np.ndim(fsr) else float(fsr)


def finesse(spec: SourceSpec, pol: Polarization, temperature) -> float:
    rho = round_trip_amplitude(spec, pol, temperature)
    return math.pi * math.sqrt(rho) / (1 - rho)


def resonance_linewidth(spec: SourceSpec, pol: Polarization, frequency, temperature):
    """FWHM of the resonances, ``FSR / finesse``."""
    f = finesse(spec, pol, temperature)
    if f == 0:
        raise DegenerateCavityError(f"{pol.value} cavity has zero finesse (no mirrors)")
    return free_spectral_range(spec, pol, frequency, temperature) / f


def _phase_slope(spec, pol, frequency, temperature):
    ng = group_index(spec.dispersion, pol, c / frequency, temperature)
    return 4 * np.pi * ng * spec.length_at(temperature) / c


def _refine_roots(spec, pol, lo, hi, orders, temperature, tol=1e-8, max_iter=50):
    """Safeguarded Newton for ``phi(nu) = 2 pi m`` inside brackets ``[lo, hi]``."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    target = 2 * np.pi * np.asarray(orders, dtype=float)
    f_lo = roundtrip_phase(spec, pol, lo, temperature) - target
    f_hi = roundtrip_phase(spec, pol, hi, temperature) - target
    x = lo - f_lo * (hi - lo) / (f_hi - f_lo)
    done = np.zeros(x.shape, dtype=bool)
    for _ in range(max_iter):
        f = np.atleast_1d(roundtrip_phase(spec, pol, x, temperature)) - target
        done |= np.abs(f) < tol
        if done.all():
            return x
        neg = f < 0
        lo = np.where(neg, x, lo)
        hi = np.where(neg, hi, x)
        step = x - f / np.atleast_1d(_phase_slope(spec, pol, x, temperature))
        outside = ~((step > lo) & (step < hi))
        x = np.where(done, x, np.where(outside, 0.5 * (lo + hi), step))
    bad = np.flatnonzero(~done)[0]
    raise ConvergenceError(
        f"resonance search did not converge for order {int(orders[bad])} "
        f"in bracket [{lo[bad]:.9e}, {hi[bad]:.9e}] Hz")


def resonance_near(spec: SourceSpec, pol: Polarization, frequency: float, temperature: float) -> float:
    """Frequency of the resonance closest to ``frequency``."""
    fsr = free_spectral_range(spec, pol, frequency, temperature)
    phi = roundtrip_phase(spec, pol, frequency, temperature)
    order = round(phi / (2 * np.pi))
    guess = frequency - (phi - 2 * np.pi * order) / (2 * np.pi) * fsr
    lo, hi = guess - fsr / 4, guess + fsr / 4
    return float(_refine_roots(spec, pol, [lo], [hi], [order], temperature)[0])


def find_resonances(spec: SourceSpec, pol: Polarization, frequency_window, temperature) -> ResonanceComb:
    """All resonances with ``phi = 0 (mod 2 pi)`` inside ``frequency_window``.

    Seeds come from a uniform grid at FSR/8 spacing; every bracketed root is
    then refined by safeguarded Newton iteration.
    """
    lo, hi = (float(v) for v in frequency_window)
    if not 0 < lo < hi:
        raise DomainError("frequency window must be positive and increasing")
    center = 0.5 * (lo + hi)
    fsr = free_spectral_range(spec, pol, center, temperature)
    if hi - lo < fsr:
        raise DomainError(f"window {(hi - lo) / 1e9:.4g} GHz narrower than one FSR ({fsr / 1e9:.4g} GHz)")
    grid = np.linspace(lo, hi, int(math.ceil((hi - lo) / (fsr / 8))) + 1)
    cycles = roundtrip_phase(spec, pol, grid, temperature) / (2 * np.pi)
    order = np.floor(cycles)
    step = np.flatnonzero(np.diff(order) > 0)
    orders = order[step + 1]
    centers = _refine_roots(spec, pol, grid[step], grid[step + 1], orders, temperature)
    f = finesse(spec, pol, temperature)
    return ResonanceComb(
        polarization=pol,
        centers=centers,
        orders=orders.astype(np.int64),
        fsr=fsr,
        linewidth_fwhm=fsr / f if f > 0 else math.inf,
        finesse=f,
    )
