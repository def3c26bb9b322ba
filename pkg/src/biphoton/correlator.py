"""Two-photon wavefunctions and second-order correlation maps.

The spatial part is the shared-source-point sum

    Psi(r1, r2) = sum_j K_s(j -> r1) K_i(j -> r2) w_j

over source cells j, where ``w_j`` is the cell area times the pump amplitude
(and the squared source-plane aperture, when one is configured).  The temporal
part is the Fourier transform of the spectral amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .errors import DimensionMismatch, GridMismatch, QuadratureFailure
from .fresnel import (
    C_LIGHT,
    Aperture,
    ArmOperator,
    FreeSpace,
    OpticalArm,
    TransverseGrid,
    aperture_on,
)
from .spdc import (
    GaussianPump,
    SpdcConfig,
    SpectralAmplitude,
    effective_support,
    feature_scale,
    spectral_weight,
)

_GL_ORDER = 16
_MAX_PANELS = 200_000
_MAX_JOINT_SIZE = 2**25
_CHUNK = 64


@dataclass(frozen=True, eq=False)
class CorrelationMap:
    """Nonnegative G2 values over the detector scan grid(s).

    ``grids`` holds TransverseGrid objects for spatial maps or the tau array
    (seconds) for temporal maps.
    """

    values: NDArray
    grids: tuple
    mode: str
    metadata: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("correlation values must be finite and nonnegative")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def peak(self) -> float:
        return float(self.values.max(initial=0.0))


def _peak_normalize(values: NDArray) -> NDArray:
    peak = values.max(initial=0.0)
    return values / peak if peak > 0 else values


def contrast(values: NDArray) -> float:
    """Michelson contrast (max - min) / (max + min)."""
    hi, lo = float(np.max(values)), float(np.min(values))
    return 0.0 if hi + lo == 0 else (hi - lo) / (hi + lo)


# ---------------------------------------------------------------------------
# Temporal part


@dataclass(frozen=True, eq=False)
class TwoPhotonWavepacket:
    """Envelope over tau = tau1 - tau2; carriers are metadata, not sampled."""

    tau: NDArray
    envelope: NDArray
    omega_signal: float = 0.0
    omega_idler: float = 0.0

    def carrier(self, tau1, tau2):
        return np.exp(-1j * (self.omega_signal * np.asarray(tau1)
                             + self.omega_idler * np.asarray(tau2)))


def _check_uniform(tau: NDArray) -> NDArray:
    tau = np.asarray(tau, dtype=float)
    if tau.ndim != 1 or tau.size < 1 or not np.all(np.isfinite(tau)):
        raise ValueError("tau grid must be a finite 1D array")
    if tau.size > 2:
        steps = np.diff(tau)
        if np.ptp(steps) > 1e-6 * abs(steps.mean()):
            raise ValueError("tau grid must be uniform")
    return tau


def frequency_nodes(spectrum: SpectralAmplitude, tau_max: float = 0.0,
                    cutoff: float | None = None):
    """Composite Gauss-Legendre nodes and weights over the effective support."""
    half = effective_support(spectrum, cutoff)
    h = feature_scale(spectrum) / 4.0
    if tau_max > 0:
        h = min(h, np.pi / (2.0 * tau_max))
    panels = int(math.ceil(2 * half / h))
    if panels > _MAX_PANELS:
        raise QuadratureFailure(f"quadrature needs {panels} panels; reduce the tau range or cutoff")
    x, w = np.polynomial.legendre.leggauss(_GL_ORDER)
    edges = np.linspace(-half, half, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    rad = 0.5 * np.diff(edges)[:, None]
    return (mid + rad * x).ravel(), (rad * w).ravel()


def temporal_wavefunction(spectrum: SpectralAmplitude, tau, cutoff: float | None = None,
                          spdc: SpdcConfig | None = None) -> TwoPhotonWavepacket:
    """Envelope(tau) = integral of f(Omega) exp(-i Omega tau) dOmega."""
    tau = _check_uniform(tau)
    nodes, weights = frequency_nodes(spectrum, float(np.max(np.abs(tau))), cutoff)
    fw = spectral_weight(spectrum, nodes) * weights
    env = np.empty(tau.size, dtype=complex)
    block = max(1, 2**22 // nodes.size)
    for start in range(0, tau.size, block):
        t = tau[start:start + block]
        env[start:start + block] = np.exp(-1j * np.outer(t, nodes)) @ fw
    ws, wi = (spdc.omega_signal, spdc.omega_idler) if spdc else (0.0, 0.0)
    return TwoPhotonWavepacket(tau, env, ws, wi)


def temporal_g2(spectrum: SpectralAmplitude, tau, cutoff: float | None = None) -> CorrelationMap:
    packet = temporal_wavefunction(spectrum, tau, cutoff)
    values = _peak_normalize(np.abs(packet.envelope) ** 2)
    return CorrelationMap(values, (packet.tau,), "temporal", {"state": "pure"})


def mixed_temporal_g2(spectrum: SpectralAmplitude, tau, cutoff: float | None = None) -> CorrelationMap:
    """Incoherent sum over Omega of per-frequency constants: a flat map at integral |f|^2."""
    tau = _check_uniform(tau)
    nodes, weights = frequency_nodes(spectrum, 0.0, cutoff)
    level = float(np.sum(np.abs(spectral_weight(spectrum, nodes)) ** 2 * weights))
    return CorrelationMap(np.full(tau.size, level), (tau,), "temporal",
                          {"state": "mixed", "normalization": "integral |f|^2 dOmega"})


# ---------------------------------------------------------------------------
# Spatial part


@dataclass(frozen=True, eq=False)
class BiphotonSetup:
    """Source plane plus two arms; ``source_aperture`` is a transmission both photons pass."""

    spdc: SpdcConfig
    source_grid: TransverseGrid
    arm_signal: OpticalArm
    arm_idler: OpticalArm
    signal_wavelength: float | None = None
    idler_wavelength: float | None = None
    source_aperture: NDArray | None = None

    def __post_init__(self):
        ls = self.signal_wavelength or self.spdc.signal_wavelength
        li = self.idler_wavelength or self.spdc.idler_wavelength
        if abs(1 / ls + 1 / li - 1 / self.spdc.pump_wavelength) > 1e-9 / self.spdc.pump_wavelength:
            raise ValueError("signal/idler wavelengths are inconsistent with the pump wavelength")
        object.__setattr__(self, "signal_wavelength", float(ls))
        object.__setattr__(self, "idler_wavelength", float(li))
        if self.source_aperture is not None:
            a = np.asarray(self.source_aperture)
            if a.shape != self.source_grid.shape:
                raise GridMismatch("source aperture does not match the source grid")
            if np.max(np.abs(a)) > 1 + 1e-12:
                raise ValueError("source aperture magnitude must be at most 1")
            object.__setattr__(self, "source_aperture", a)

    def _axis_pump(self, axis: int) -> NDArray:
        x = self.source_grid.axis_coords(axis)
        pump = self.spdc.pump_model
        return pump.profile(x**2) if isinstance(pump, GaussianPump) else np.ones_like(x)

    def source_weight(self) -> NDArray:
        """Per-cell weight of the source sum: cell area x pump amplitude x A^2."""
        g = self.source_grid
        w = self._axis_pump(0)
        if g.ndim == 2:
            w = self._axis_pump(1)[:, None] * w[None, :]
        w = w * g.cell_area
        if self.source_aperture is not None:
            w = w * self.source_aperture**2
        return w

    def metadata(self) -> dict:
        return {
            "signal_wavelength_m": self.signal_wavelength,
            "idler_wavelength_m": self.idler_wavelength,
            "signal_arm_length_m": self.arm_signal.total_axial_length,
            "idler_arm_length_m": self.arm_idler.total_axial_length,
            "source_samples": self.source_grid.n,
            "source_spacing_m": self.source_grid.spacing,
            "pump_model": type(self.spdc.pump_model).__name__,
        }


class _Pair:
    """Compiled signal/idler operators for one pair of wavelengths."""

    def __init__(self, setup: BiphotonSetup, scan1: TransverseGrid, scan2: TransverseGrid,
                 wl_s: float, wl_i: float):
        src = setup.source_grid
        for g in (scan1, scan2):
            if g.ndim != src.ndim:
                raise DimensionMismatch("scan grids must match the source grid dimensionality")
        self.setup = setup
        self.src = src
        self.op_s = ArmOperator(setup.arm_signal, wl_s, src, scan1)
        self.op_i = ArmOperator(setup.arm_idler, wl_i, src, scan2)
        # K-products carry cell_area^2 from the two operators; w/dA^2 restores one dA
        self.weight = setup.source_weight() / src.cell_area**2
        self.separable = (src.ndim == 1 or (self.op_s.separable and self.op_i.separable
                                             and setup.source_aperture is None))

    def axis_parts(self):
        """Per-axis (Ms, w, Mi) factors; a single entry for 1D setups."""
        if self.src.ndim == 1:
            return [(self.op_s.matrix(), self.weight, self.op_i.matrix())]
        parts = []
        dx = self.src.spacing
        ops = [(self.op_s.axis_operator(axis), self.op_i.axis_operator(axis)) for axis in (0, 1)]
        for axis, (ops_ax, opi_ax) in enumerate(ops):
            w = self.setup._axis_pump(axis) * dx / dx**2
            if axis == 1 and _same_axes(ops[0], ops[1]):
                # square symmetric setup: reuse axis-0 matrices without their carrier
                ms0, _, mi0 = parts[0]
                parts.append((ms0 / _carrier(ops_ax), w, mi0 / _carrier(opi_ax)))
                continue
            parts.append((ops_ax.matrix(), w, opi_ax.matrix()))
        return parts

    def psi_columns(self, flat_idx: NDArray, scan2: TransverseGrid) -> NDArray:
        """Psi(., r2) on scan1 for the flattened scan2 indices given (generic path)."""
        deltas = np.zeros((flat_idx.size, scan2.size), dtype=complex)
        deltas[np.arange(flat_idx.size), flat_idx] = 1.0
        rows = self.op_i.apply_transpose(deltas.reshape((flat_idx.size,) + scan2.shape))
        return self.op_s.apply(rows * self.weight)


def _carrier(op: ArmOperator) -> complex:
    return np.exp(2j * np.pi * op.arm.total_axial_length / op.wavelength)


def _same_axes(ops0, ops1) -> bool:
    def key(op):
        grids = [s[2] for s in op.steps if s[0] == "prop"]
        masks = [s[1] for s in op.steps if s[0] == "mask"]
        return op.source_grid, grids, op.steps and [s[0] for s in op.steps], masks

    for a, b in zip(ops0, ops1):
        ka, kb = key(a), key(b)
        if ka[:3] != kb[:3] or len(ka[3]) != len(kb[3]):
            return False
        if not all(np.array_equal(x, y) for x, y in zip(ka[3], kb[3])):
            return False
    return True


def spatial_wavefunction(setup: BiphotonSetup, scan1: TransverseGrid,
                         scan2: TransverseGrid) -> NDArray:
    """Complex Psi over scan1 x scan2, shape ``scan1.shape + scan2.shape``."""
    pair = _Pair(setup, scan1, scan2, setup.signal_wavelength, setup.idler_wavelength)
    if scan1.size * scan2.size > _MAX_JOINT_SIZE:
        raise ValueError("joint map too large; use bucket_rate or coincident_g2")
    if pair.separable:
        parts = [ms @ (w[:, None] * mi.T) for ms, w, mi in pair.axis_parts()]
        if len(parts) == 1:
            return parts[0]
        px, py = parts
        # Psi[y1, x1, y2, x2] = Psi_x[x1, x2] Psi_y[y1, y2]
        return np.einsum("ac,bd->badc", px, py)
    out = np.empty((scan2.size,) + scan1.shape, dtype=complex)
    for start in range(0, scan2.size, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, scan2.size))
        out[idx] = pair.psi_columns(idx, scan2)
    return np.moveaxis(out.reshape(scan2.shape + scan1.shape),
                       tuple(range(scan2.ndim)), tuple(range(scan1.ndim, scan1.ndim + scan2.ndim)))


def joint_g2(setup: BiphotonSetup, scan1: TransverseGrid, scan2: TransverseGrid) -> CorrelationMap:
    values = _peak_normalize(np.abs(spatial_wavefunction(setup, scan1, scan2)) ** 2)
    return CorrelationMap(values, (scan1, scan2), "joint-scan", setup.metadata())


def _coincident_amplitude(pair: _Pair, scan: TransverseGrid) -> NDArray:
    if pair.separable:
        diags = [np.einsum("ij,j,ij->i", ms, w, mi) for ms, w, mi in pair.axis_parts()]
        return diags[0] if len(diags) == 1 else diags[1][:, None] * diags[0][None, :]
    out = np.empty(scan.size, dtype=complex)
    for start in range(0, scan.size, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, scan.size))
        cols = pair.psi_columns(idx, scan).reshape(idx.size, -1)
        out[idx] = cols[np.arange(idx.size), idx]
    return out.reshape(scan.shape)


def detuned_wavelengths(setup: BiphotonSetup, omega) -> tuple[NDArray, NDArray]:
    """Signal/idler wavelengths at detuning Omega (signal up, idler down)."""
    ws = 2 * np.pi * C_LIGHT / setup.signal_wavelength + np.asarray(omega)
    wi = 2 * np.pi * C_LIGHT / setup.idler_wavelength - np.asarray(omega)
    if np.any(ws <= 0) or np.any(wi <= 0):
        raise QuadratureFailure("detuning exceeds the central optical frequency")
    return 2 * np.pi * C_LIGHT / ws, 2 * np.pi * C_LIGHT / wi


def coincident_amplitude(setup: BiphotonSetup, scan: TransverseGrid,
                         spectrum: SpectralAmplitude | None = None, n_freq: int | None = None,
                         cutoff: float | None = None) -> NDArray:
    """Psi(r, r) on ``scan``; with ``spectrum`` the pair amplitude is summed coherently over Omega."""
    if spectrum is None:
        pair = _Pair(setup, scan, scan, setup.signal_wavelength, setup.idler_wavelength)
        return _coincident_amplitude(pair, scan)
    if n_freq is None:
        nodes, weights = frequency_nodes(spectrum, 0.0, cutoff)
    else:
        half = effective_support(spectrum, cutoff)
        x, w = np.polynomial.legendre.leggauss(int(n_freq))
        nodes, weights = half * x, half * w
    lam_s, lam_i = detuned_wavelengths(setup, nodes)
    fw = spectral_weight(spectrum, nodes) * weights
    total = np.zeros(scan.shape, dtype=complex)
    for ls, li, c in zip(lam_s, lam_i, fw):
        pair = _Pair(setup, scan, scan, float(ls), float(li))
        total += c * _coincident_amplitude(pair, scan)
    return total


def coincident_g2(setup: BiphotonSetup, scan: TransverseGrid,
                  spectrum: SpectralAmplitude | None = None, n_freq: int | None = None,
                  cutoff: float | None = None) -> CorrelationMap:
    amp = coincident_amplitude(setup, scan, spectrum, n_freq, cutoff)
    meta = setup.metadata()
    if spectrum is not None:
        meta["spectrum"] = type(spectrum).__name__
    return CorrelationMap(_peak_normalize(np.abs(amp) ** 2), (scan,), "coincident", meta)


def _object_grid(arm: OpticalArm, obj: Aperture) -> TransverseGrid:
    fs = [el for el in arm.elements if isinstance(el, FreeSpace)]
    if fs and fs[-1].grid is not None and fs[-1].grid != obj.grid:
        raise GridMismatch("object mask grid differs from the signal arm's object-plane grid")
    return obj.grid


def bucket_rate(setup: BiphotonSetup, obj: Aperture, scan2: TransverseGrid,
                normalize: bool = True) -> CorrelationMap:
    """Coincidence rate with a bucket detector behind ``obj`` at the end of the signal arm."""
    grid_o = _object_grid(setup.arm_signal, obj)
    if grid_o.ndim != setup.source_grid.ndim or scan2.ndim != grid_o.ndim:
        raise DimensionMismatch("object, source and scan grids must share dimensionality")
    a2 = np.abs(aperture_on(obj, grid_o)) ** 2 * grid_o.cell_area
    pair = _Pair(setup, grid_o, scan2, setup.signal_wavelength, setup.idler_wavelength)
    if pair.separable:
        parts = [np.abs(ms @ (w[:, None] * mi.T)) ** 2 for ms, w, mi in pair.axis_parts()]
        if len(parts) == 1:
            rate = a2 @ parts[0]
        else:
            px, py = parts
            rate = py.T @ a2 @ px
    else:
        rate = np.empty(scan2.size)
        for start in range(0, scan2.size, _CHUNK):
            idx = np.arange(start, min(start + _CHUNK, scan2.size))
            cols = pair.psi_columns(idx, scan2)
            rate[idx] = np.sum((np.abs(cols) ** 2 * a2).reshape(idx.size, -1), axis=1)
        rate = rate.reshape(scan2.shape)
    rate = np.maximum(rate, 0.0)
    values = _peak_normalize(rate) if normalize else rate
    return CorrelationMap(values, (scan2,), "bucket", setup.metadata())
