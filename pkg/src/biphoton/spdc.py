"""SPDC source model: crystal parameters, spectral amplitude and pump model.

Frequencies are detunings Omega (rad/s) about the central signal/idler
frequencies; absolute optical frequencies only enter carrier phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigError, QuadratureFailure
from .fresnel import C_LIGHT


@dataclass(frozen=True)
class CrystalParams:
    """Crystal length ``L`` (m), ``D = 1/u_s - 1/u_i`` (s/m) and ``Dprime`` (s^2/m)."""

    L: float
    D: float = 0.0
    Dprime: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.L) and self.L > 0):
            raise ConfigError("L", "crystal length must be positive")
        if not (np.isfinite(self.D) and np.isfinite(self.Dprime)):
            raise ConfigError("D", "dispersion parameters must be finite")
        if self.D == 0 and self.Dprime == 0:
            raise ConfigError("D", "either D (type II) or Dprime (type I) must be nonzero")

    @classmethod
    def from_DL(cls, DL: float, L: float = 1e-3) -> "CrystalParams":
        """Type-II crystal with the given product D*L (seconds)."""
        return cls(L=L, D=DL / L)

    @property
    def DL(self) -> float:
        return self.D * self.L


def mismatch_type2(omega, crystal: CrystalParams):
    """Longitudinal mismatch ``Delta_z L = Omega D L``."""
    return np.multiply(omega, crystal.D * crystal.L)


def mismatch_type1(omega, crystal: CrystalParams):
    """Longitudinal mismatch ``Delta_z L = -Omega^2 D' L``."""
    return -np.square(omega) * (crystal.Dprime * crystal.L)


def longitudinal_amplitude(dzl):
    """``exp(-i x/2) sinc(x/2)`` with unnormalized sinc(u) = sin(u)/u."""
    half = 0.5 * np.asarray(dzl, dtype=float)
    return np.exp(-1j * half) * np.sinc(half / np.pi)


@dataclass(frozen=True)
class Flat:
    cutoff: float

    def __post_init__(self):
        if not (np.isfinite(self.cutoff) and self.cutoff > 0):
            raise ConfigError("cutoff", "flat spectrum needs a positive finite cutoff")


@dataclass(frozen=True)
class Gaussian:
    sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ConfigError("sigma", "Gaussian spectral width must be positive")


@dataclass(frozen=True)
class SincTypeII:
    """Type-II sinc spectrum; ``cutoff`` bounds the quadrature support (rad/s)."""

    crystal: CrystalParams
    cutoff: float | None = None

    def __post_init__(self):
        if self.crystal.D == 0:
            raise ConfigError("D", "type-II spectrum requires D != 0")


@dataclass(frozen=True)
class SincTypeI:
    crystal: CrystalParams
    cutoff: float | None = None

    def __post_init__(self):
        if self.crystal.Dprime == 0:
            raise ConfigError("Dprime", "type-I spectrum requires Dprime != 0")


SpectralAmplitude = Union[Flat, Gaussian, SincTypeII, SincTypeI]


def spectral_weight(spectrum: SpectralAmplitude, omega):
    """Complex spectral amplitude f(Omega), equal to 1 at Omega = 0."""
    omega = np.asarray(omega, dtype=float)
    if isinstance(spectrum, Flat):
        return np.where(np.abs(omega) <= spectrum.cutoff, 1.0 + 0j, 0j)
    if isinstance(spectrum, Gaussian):
        return np.exp(-(omega**2) / (2 * spectrum.sigma**2)) + 0j
    if isinstance(spectrum, SincTypeII):
        return longitudinal_amplitude(mismatch_type2(omega, spectrum.crystal))
    if isinstance(spectrum, SincTypeI):
        return longitudinal_amplitude(mismatch_type1(omega, spectrum.crystal))
    raise TypeError(f"unknown spectrum {spectrum!r}")


def mixed_state_weight(spectrum: SpectralAmplitude, omega):
    """Probability weight |f(Omega)|^2 of the rival mixed-state ensemble."""
    return np.abs(spectral_weight(spectrum, omega)) ** 2


def effective_support(spectrum: SpectralAmplitude, cutoff: float | None = None) -> float:
    """Half-width of the frequency interval used for quadrature (rad/s)."""
    if isinstance(spectrum, Flat):
        return spectrum.cutoff if cutoff is None else min(cutoff, spectrum.cutoff)
    if isinstance(spectrum, Gaussian):
        return 10.0 * spectrum.sigma if cutoff is None else cutoff
    limit = cutoff if cutoff is not None else spectrum.cutoff
    if limit is None:
        raise QuadratureFailure(
            f"{type(spectrum).__name__} has unbounded support; configure a cutoff")
    return float(limit)


def feature_scale(spectrum: SpectralAmplitude) -> float:
    """Smallest frequency scale of the spectrum, used to size quadrature panels."""
    if isinstance(spectrum, Flat):
        return spectrum.cutoff
    if isinstance(spectrum, Gaussian):
        return spectrum.sigma
    if isinstance(spectrum, SincTypeII):
        return 2 * np.pi / abs(spectrum.crystal.DL)
    support = effective_support(spectrum)
    # type I: zeros of sin(Omega^2 D'L / 2) crowd together at the support edge
    return 2 * np.pi / (abs(spectrum.crystal.Dprime * spectrum.crystal.L) * support)


@dataclass(frozen=True)
class DeltaCorrelated:
    """Infinitely wide pump: signal and idler leave the same source point."""


@dataclass(frozen=True)
class GaussianPump:
    """Gaussian pump of 1/e amplitude radius ``waist`` (m) across the source plane."""

    waist: float

    def __post_init__(self):
        if not (np.isfinite(self.waist) and self.waist > 0):
            raise ConfigError("waist", "pump waist must be positive")

    def profile(self, r_sq):
        return np.exp(-np.asarray(r_sq) / self.waist**2)


PumpTransverseModel = Union[DeltaCorrelated, GaussianPump]


@dataclass(frozen=True)
class SpdcConfig:
    pump_wavelength: float
    signal_wavelength: float
    idler_wavelength: float
    crystal: CrystalParams | None = None
    spectrum: SpectralAmplitude | None = None
    pump_model: PumpTransverseModel = DeltaCorrelated()

    def __post_init__(self):
        for name in ("pump_wavelength", "signal_wavelength", "idler_wavelength"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ConfigError(name, "wavelength must be positive")
        lhs = 1 / self.signal_wavelength + 1 / self.idler_wavelength
        if abs(lhs - 1 / self.pump_wavelength) > 1e-9 / self.pump_wavelength:
            raise ConfigError(
                "idler_wavelength",
                "signal and idler wavelengths violate 1/ls + 1/li = 1/lp")

    @classmethod
    def degenerate(cls, signal_wavelength: float, **kwargs) -> "SpdcConfig":
        return cls(signal_wavelength / 2, signal_wavelength, signal_wavelength, **kwargs)

    @property
    def omega_signal(self) -> float:
        return 2 * math.pi * C_LIGHT / self.signal_wavelength

    @property
    def omega_idler(self) -> float:
        return 2 * math.pi * C_LIGHT / self.idler_wavelength

    @property
    def omega_pump(self) -> float:
        return 2 * math.pi * C_LIGHT / self.pump_wavelength
