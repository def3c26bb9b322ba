"""Scalar paraxial wave propagation on uniform transverse grids.

Propagation is direct quadrature of the Fresnel kernel.  In two dimensions the
quadratic kernel factorizes per axis, so a 2D step is ``Ky @ U @ Kx.T`` with
dense 1D kernel matrices.  Fields are zero outside their grid.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Sequence, Union

import numpy as np
from numpy.typing import NDArray

from .errors import (
    DimensionMismatch,
    GeometryError,
    GridMismatch,
    InvalidDistance,
    SamplingViolation,
)

C_LIGHT = 299_792_458.0
PARAXIAL_LIMIT = 0.2


class ParaxialWarning(UserWarning):
    """Grid extent is large compared with the propagation distance."""


# ---------------------------------------------------------------------------
# Special functions


def gaussian_phase(displacement_sq, curvature):
    """Fresnel phase factor ``exp(i * curvature/2 * displacement_sq)``."""
    return np.exp(0.5j * np.multiply(curvature, displacement_sq))


def gaussian_phase_ft(gamma_sq, curvature, ndim: int = 2):
    """Closed form of the integral of G(alpha, beta) exp(i gamma . alpha) over R^ndim.

    Equals (2 pi i / beta)^(ndim/2) G(gamma, -1/beta), principal square root in 1D.
    """
    beta = np.asarray(curvature, dtype=float)
    return (2j * np.pi / beta) ** (ndim / 2) * gaussian_phase(gamma_sq, -1.0 / beta)


_SERIES_LIMIT = 12.0


def _j1_over_x_series(x: NDArray) -> NDArray:
    # J1(x)/x = sum_m (-1)^m (x/2)^(2m) / (2 m! (m+1)!)
    q = -(x * 0.5) ** 2
    term = np.full_like(x, 0.5)
    total = term.copy()
    for m in range(60):
        term = term * q / ((m + 1) * (m + 2))
        total += term
        if np.all(np.abs(term) < 1e-18 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def _j1_asymptotic(x: NDArray) -> NDArray:
    # Hankel expansion for nu = 1, summed until terms stop shrinking.
    mu = 4.0
    chi = x - 0.75 * np.pi
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    prev = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for k in range(80):
        mag = np.abs(term)
        active &= mag < prev
        if not active.any():
            break
        # a_k / x^k with alternating sign pattern split into P (even k) and Q (odd k)
        sign = 1.0 if (k // 2) % 2 == 0 else -1.0
        if k % 2 == 0:
            p = np.where(active, p + sign * term, p)
        else:
            q = np.where(active, q + sign * term, q)
        prev = np.where(active, mag, prev)
        term = term * (mu - (2 * k + 1) ** 2) / ((k + 1) * 8.0 * x)
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j1(x):
    """Bessel function of the first kind, order one."""
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    ax = np.abs(xa)
    out = np.empty_like(xa)
    small = ax < _SERIES_LIMIT
    if small.any():
        out[small] = xa[small] * _j1_over_x_series(xa[small])
    if (~small).any():
        out[~small] = np.sign(xa[~small]) * _j1_asymptotic(ax[~small])
    return out.reshape(np.shape(x)) if np.ndim(x) else float(out[0])


def somb(x):
    """Sombrero function ``2 J1(x)/x`` with ``somb(0) = 1``."""
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    ax = np.abs(xa)
    out = np.empty_like(xa)
    small = ax < _SERIES_LIMIT
    if small.any():
        out[small] = 2.0 * _j1_over_x_series(ax[small])
    if (~small).any():
        out[~small] = 2.0 * _j1_asymptotic(ax[~small]) / ax[~small]
    return out.reshape(np.shape(x)) if np.ndim(x) else float(out[0])


# ---------------------------------------------------------------------------
# Grids and fields


@dataclass(frozen=True)
class TransverseGrid:
    """Uniform square grid; sample ``i`` sits at ``center + (i - n/2) * spacing``.

    2D arrays are indexed ``[iy, ix]``; ``center`` is ``(cx,)`` or ``(cx, cy)``.
    """

    n: int
    spacing: float
    ndim: int = 1
    center: tuple[float, ...] = ()

    def __post_init__(self):
        if self.ndim not in (1, 2):
            raise DimensionMismatch(f"grid dimensionality must be 1 or 2, got {self.ndim}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"samples per axis must be an integer >= 2, got {self.n}")
        if not (np.isfinite(self.spacing) and self.spacing > 0):
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        center = tuple(float(c) for c in self.center) or (0.0,) * self.ndim
        if len(center) != self.ndim:
            raise DimensionMismatch("center must have one entry per axis")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "center", center)

    @classmethod
    def centered(cls, n: int, spacing: float, ndim: int = 1) -> "TransverseGrid":
        """Grid whose samples are symmetric about zero (zero is a sample when n is odd)."""
        return cls(n, spacing, ndim, (0.5 * spacing,) * ndim)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.ndim

    @property
    def size(self) -> int:
        return self.n**self.ndim

    @property
    def extent(self) -> float:
        return self.n * self.spacing

    @property
    def cell_area(self) -> float:
        return self.spacing**self.ndim

    def axis_coords(self, axis: int = 0) -> NDArray:
        return self.center[axis] + (np.arange(self.n) - self.n / 2) * self.spacing

    def axis_grid(self, axis: int) -> "TransverseGrid":
        return TransverseGrid(self.n, self.spacing, 1, (self.center[axis],))

    def coords(self):
        """``x`` for 1D grids, ``(X, Y)`` meshgrids for 2D grids."""
        if self.ndim == 1:
            return self.axis_coords(0)
        return np.meshgrid(self.axis_coords(0), self.axis_coords(1), indexing="xy")

    def radius_sq(self) -> NDArray:
        if self.ndim == 1:
            return self.axis_coords(0) ** 2
        x, y = self.coords()
        return x**2 + y**2

    def nearest_index(self, point: Sequence[float]) -> tuple[int, ...]:
        """Array index of the sample nearest ``point``; GeometryError if off-grid."""
        point = _as_point(point, self.ndim)
        idx = []
        for axis, p in enumerate(point):
            i = int(np.rint((p - self.center[axis]) / self.spacing + self.n / 2))
            if not 0 <= i < self.n:
                raise GeometryError(f"point {tuple(point)} lies outside the grid extent")
            idx.append(i)
        return tuple(reversed(idx))  # [iy, ix]


def _as_point(point, ndim: int) -> tuple[float, ...]:
    pt = tuple(float(p) for p in np.atleast_1d(point))
    if len(pt) != ndim:
        raise DimensionMismatch(f"expected a {ndim}D point, got {pt}")
    return pt


@dataclass(frozen=True, eq=False)
class SampledField:
    """Complex transverse amplitude at axial position ``z``."""

    grid: TransverseGrid
    amplitude: NDArray
    wavelength: float
    z: float = 0.0

    def __post_init__(self):
        amp = np.asarray(self.amplitude, dtype=complex)
        if amp.shape != self.grid.shape:
            raise GridMismatch(f"amplitude shape {amp.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(amp)):
            raise ValueError("field amplitude must be finite")
        if not (np.isfinite(self.wavelength) and self.wavelength > 0):
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitude", amp)

    @property
    def wavenumber(self) -> float:
        return 2.0 * np.pi / self.wavelength

    def intensity(self) -> NDArray:
        return np.abs(self.amplitude) ** 2

    def power(self) -> float:
        return float(np.sum(self.intensity()) * self.grid.cell_area)


# ---------------------------------------------------------------------------
# Optical elements


@dataclass(frozen=True)
class FreeSpace:
    """Free propagation over ``distance``; ``grid`` is the output plane (None keeps the input grid)."""

    distance: float
    grid: TransverseGrid | None = None

    def __post_init__(self):
        if not (np.isfinite(self.distance) and self.distance > 0):
            raise InvalidDistance(f"free-space distance must be positive, got {self.distance}")


@dataclass(frozen=True)
class ThinLens:
    focal_length: float
    aperture_radius: float = math.inf

    def __post_init__(self):
        if not np.isfinite(self.focal_length) or self.focal_length == 0:
            raise ValueError("focal length must be finite and nonzero")
        if not self.aperture_radius > 0:
            raise ValueError("aperture radius must be positive")


@dataclass(frozen=True, eq=False)
class Aperture:
    transmission: NDArray
    grid: TransverseGrid

    def __post_init__(self):
        t = np.asarray(self.transmission)
        t = t.astype(complex) if np.iscomplexobj(t) else t.astype(float)
        if t.shape != self.grid.shape:
            raise GridMismatch(f"transmission shape {t.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(t)) or np.max(np.abs(t), initial=0.0) > 1.0 + 1e-12:
            raise ValueError("aperture transmission magnitude must be finite and at most 1")
        t.setflags(write=False)
        object.__setattr__(self, "transmission", t)


OpticalElement = Union[FreeSpace, ThinLens, Aperture]


@dataclass(frozen=True)
class OpticalArm:
    elements: tuple = dc_field(default_factory=tuple)

    def __post_init__(self):
        elements = tuple(self.elements)
        for el in elements:
            if not isinstance(el, (FreeSpace, ThinLens, Aperture)):
                raise TypeError(f"unsupported optical element {el!r}")
        object.__setattr__(self, "elements", elements)

    @property
    def total_axial_length(self) -> float:
        return float(sum(el.distance for el in self.elements if isinstance(el, FreeSpace)))


# ---------------------------------------------------------------------------
# Kernels


def _grid_span(grid_in: TransverseGrid, grid_out: TransverseGrid, axis: int) -> float:
    shift = abs(grid_in.center[axis] - grid_out.center[axis])
    return max(grid_in.extent, grid_out.extent) + shift


def check_sampling(grid_in: TransverseGrid, grid_out: TransverseGrid,
                   wavelength: float, distance: float) -> None:
    """Raise SamplingViolation if the kernel phase step between input samples exceeds pi."""
    k = 2.0 * np.pi / wavelength
    for axis in range(grid_in.ndim):
        span = _grid_span(grid_in, grid_out, axis)
        step = k / distance * span * grid_in.spacing / 2.0
        if step > np.pi:
            max_spacing = 2.0 * np.pi * distance / (k * span)
            min_samples = int(math.ceil(grid_in.extent / max_spacing))
            raise SamplingViolation(
                f"Fresnel phase step {step:.3g} rad exceeds pi over distance {distance:g} m; "
                f"input spacing must be <= {max_spacing * 1e6:.4g} um, i.e. at least "
                f"{min_samples} samples per axis for the same {grid_in.extent * 1e3:.4g} mm extent",
                max_spacing=max_spacing,
                min_samples=min_samples,
            )
        if span / distance > PARAXIAL_LIMIT:
            warnings.warn(
                f"grid extent/distance = {span / distance:.3g} exceeds {PARAXIAL_LIMIT}; "
                "paraxial approximation may be inaccurate",
                ParaxialWarning,
                stacklevel=3,
            )


@functools.lru_cache(maxsize=8)
def _kernel_1d(grid_out: TransverseGrid, grid_in: TransverseGrid, axis_out: int,
               axis_in: int, wavelength: float, distance: float) -> NDArray:
    k = 2.0 * np.pi / wavelength
    x_out = grid_out.axis_coords(axis_out)
    x_in = grid_in.axis_coords(axis_in)
    diff_sq = (x_out[:, None] - x_in[None, :]) ** 2
    # one axis of the (-i k / 2 pi z) prefactor; the 2D product restores it exactly
    pref = np.sqrt(-1j * k / (2.0 * np.pi * distance)) * grid_in.spacing
    kern = pref * gaussian_phase(diff_sq, k / distance)
    kern.setflags(write=False)
    return kern


def kernel_matrix(grid_in: TransverseGrid, grid_out: TransverseGrid, wavelength: float,
                  distance: float, axis: int = 0) -> NDArray:
    """Quadrature matrix of one axis of the free-space propagator, shape (n_out, n_in).

    Includes the per-axis prefactor and input spacing but not the carrier ``exp(ikz)``.
    """
    return _kernel_1d(grid_out, grid_in, axis, axis, float(wavelength), float(distance))


def _propagate_array(a: NDArray, grid_in: TransverseGrid, grid_out: TransverseGrid,
                     wavelength: float, distance: float, carrier: bool = True,
                     transpose: bool = False) -> NDArray:
    """Apply the free-space step to a batch ``(..., *grid.shape)``; ``transpose`` maps back."""
    kx = kernel_matrix(grid_in, grid_out, wavelength, distance, 0)
    phase = np.exp(2j * np.pi * distance / wavelength) if carrier else 1.0
    if grid_in.ndim == 1:
        out = a @ kx if transpose else a @ kx.T
    else:
        ky = kernel_matrix(grid_in, grid_out, wavelength, distance, 1)
        out = ky.T @ a @ kx if transpose else ky @ a @ kx.T
    return out * phase


def free_propagate(field: SampledField, distance: float,
                   output_grid: TransverseGrid | None = None) -> SampledField:
    """Propagate ``field`` over ``distance`` onto ``output_grid`` (defaults to the input grid)."""
    if not (np.isfinite(distance) and distance > 0):
        raise InvalidDistance(f"free-space distance must be positive, got {distance}")
    out_grid = field.grid if output_grid is None else output_grid
    if out_grid.ndim != field.grid.ndim:
        raise DimensionMismatch("output grid dimensionality differs from the field grid")
    check_sampling(field.grid, out_grid, field.wavelength, distance)
    amp = _propagate_array(field.amplitude, field.grid, out_grid, field.wavelength, distance)
    return SampledField(out_grid, amp, field.wavelength, field.z + distance)


def lens_factor(grid: TransverseGrid, lens: ThinLens, wavelength: float) -> NDArray:
    k = 2.0 * np.pi / wavelength
    r2 = grid.radius_sq()
    factor = gaussian_phase(r2, -k / lens.focal_length)
    if np.isfinite(lens.aperture_radius):
        factor = np.where(r2 <= lens.aperture_radius**2, factor, 0.0)
    return factor


def _nearest_map(src: TransverseGrid, dst: TransverseGrid, axis: int):
    """Indices of ``src`` samples nearest each ``dst`` sample and an in-range mask."""
    coords = dst.axis_coords(axis)
    idx = np.rint((coords - src.center[axis]) / src.spacing + src.n / 2).astype(int)
    inside = (idx >= 0) & (idx < src.n)
    return np.clip(idx, 0, src.n - 1), inside


def resample_nearest(values: NDArray, src: TransverseGrid, dst: TransverseGrid,
                     strict: bool = False) -> NDArray:
    """Nearest-neighbour resampling; samples outside ``src`` become 0 (or raise if strict)."""
    if src == dst:
        return values
    if src.ndim != dst.ndim:
        raise DimensionMismatch("grid dimensionality differs")
    maps = [_nearest_map(src, dst, ax) for ax in range(src.ndim)]
    if strict and not all(inside.all() for _, inside in maps):
        raise GridMismatch("mask grid does not cover the field grid")
    if src.ndim == 1:
        (ix, mx), = maps
        return np.where(mx, values[..., ix], 0)
    (ix, mx), (iy, my) = maps
    out = values[..., iy[:, None], ix[None, :]]
    return np.where(my[:, None] & mx[None, :], out, 0)


def aperture_on(aperture: Aperture, grid: TransverseGrid) -> NDArray:
    """Aperture transmission sampled on ``grid``."""
    if aperture.grid.ndim != grid.ndim:
        raise GridMismatch("aperture and field differ in dimensionality")
    return resample_nearest(aperture.transmission, aperture.grid, grid, strict=True)


def apply_element(field: SampledField, element: OpticalElement) -> SampledField:
    if isinstance(element, FreeSpace):
        return free_propagate(field, element.distance, element.grid)
    if isinstance(element, ThinLens):
        amp = field.amplitude * lens_factor(field.grid, element, field.wavelength)
    elif isinstance(element, Aperture):
        if element.grid == field.grid and np.all(element.transmission == 1):
            return field
        amp = field.amplitude * aperture_on(element, field.grid)
    else:
        raise TypeError(f"unsupported optical element {element!r}")
    return SampledField(field.grid, amp, field.wavelength, field.z)


def propagate_arm(field: SampledField, arm: OpticalArm,
                  output_grid: TransverseGrid | None = None) -> SampledField:
    """Apply every element in order; the last FreeSpace step lands on ``output_grid``."""
    last_fs = _last_free_space(arm)
    for i, el in enumerate(arm.elements):
        if i == last_fs and output_grid is not None:
            el = FreeSpace(el.distance, output_grid)
        field = apply_element(field, el)
    if last_fs is None and output_grid is not None and output_grid != field.grid:
        amp = resample_nearest(field.amplitude, field.grid, output_grid)
        field = SampledField(output_grid, amp, field.wavelength, field.z)
    return field


def _last_free_space(arm: OpticalArm) -> int | None:
    idx = [i for i, el in enumerate(arm.elements) if isinstance(el, FreeSpace)]
    return idx[-1] if idx else None


def point_source_response(arm: OpticalArm, source_point, wavelength: float,
                          observation_grid: TransverseGrid,
                          source_grid: TransverseGrid | None = None) -> SampledField:
    """Response of ``arm`` on ``observation_grid`` to a unit point emitter."""
    if not arm.elements or not isinstance(arm.elements[0], FreeSpace):
        raise GeometryError("a point-source response needs an arm that begins with free space")
    ndim = observation_grid.ndim
    point = _as_point(source_point, ndim)
    if source_grid is None:
        source_grid = TransverseGrid(2, observation_grid.spacing, ndim, point)
    if source_grid.ndim != ndim:
        raise DimensionMismatch("source and observation grids differ in dimensionality")
    amp = np.zeros(source_grid.shape, dtype=complex)
    amp[source_grid.nearest_index(point)] = 1.0 / source_grid.cell_area
    return propagate_arm(SampledField(source_grid, amp, wavelength), arm, observation_grid)


# ---------------------------------------------------------------------------
# Batched arm operator used by the correlator


class ArmOperator:
    """Linear map taking source-plane arrays to the arm's observation plane.

    ``apply`` acts on batches ``(..., *source_grid.shape)``; ``apply_transpose``
    is the plain (unconjugated) transpose, mapping observation-plane arrays back.
    Quadrature weights of every propagation step are included, so the matrix
    element for source cell j and observation cell i is ``K(j -> i) * cell_area``.
    """

    def __init__(self, arm: OpticalArm, wavelength: float, source_grid: TransverseGrid,
                 observation_grid: TransverseGrid, carrier: bool = True):
        if source_grid.ndim != observation_grid.ndim:
            raise DimensionMismatch("source and observation grids differ in dimensionality")
        self.arm = arm
        self.wavelength = float(wavelength)
        self.source_grid = source_grid
        self.observation_grid = observation_grid
        self.carrier = carrier
        self.steps: list[tuple] = []
        grid = source_grid
        last_fs = _last_free_space(arm)
        separable = True
        for i, el in enumerate(arm.elements):
            if isinstance(el, FreeSpace):
                out = observation_grid if i == last_fs else (el.grid or grid)
                if out.ndim != grid.ndim:
                    raise DimensionMismatch("free-space output grid has the wrong dimensionality")
                check_sampling(grid, out, self.wavelength, el.distance)
                self.steps.append(("prop", grid, out, el.distance))
                grid = out
            elif isinstance(el, ThinLens):
                self.steps.append(("mask", lens_factor(grid, el, self.wavelength)))
                separable &= not np.isfinite(el.aperture_radius)
            else:
                self.steps.append(("mask", aperture_on(el, grid)))
                separable = False
        if last_fs is None and grid != observation_grid:
            self.steps.append(("resample", grid, observation_grid))
        self.separable = separable or source_grid.ndim == 1

    def apply(self, a: NDArray) -> NDArray:
        for step in self.steps:
            if step[0] == "prop":
                a = _propagate_array(a, step[1], step[2], self.wavelength, step[3], self.carrier)
            elif step[0] == "mask":
                a = a * step[1]
            else:
                a = resample_nearest(a, step[1], step[2])
        return a

    def apply_transpose(self, b: NDArray) -> NDArray:
        for step in reversed(self.steps):
            if step[0] == "prop":
                b = _propagate_array(b, step[1], step[2], self.wavelength, step[3],
                                     self.carrier, transpose=True)
            elif step[0] == "mask":
                b = b * step[1]
            else:
                b = _resample_transpose(b, step[1], step[2])
        return b

    def matrix(self) -> NDArray:
        """Dense (n_obs, n_src) matrix for 1D arms."""
        if self.source_grid.ndim != 1:
            raise DimensionMismatch("dense arm matrices are only formed for 1D grids")
        m = None
        for step in self.steps:
            if step[0] == "prop":
                k = kernel_matrix(step[1], step[2], self.wavelength, step[3])
                if self.carrier:
                    k = k * np.exp(2j * np.pi * step[3] / self.wavelength)
                m = k if m is None else k @ m
            elif step[0] == "mask":
                m = np.diag(step[1]).astype(complex) if m is None else step[1][:, None] * m
            else:
                ident = np.eye(step[1].n, dtype=complex) if m is None else m
                m = resample_nearest(ident.T, step[1], step[2]).T
        return np.eye(self.source_grid.n, dtype=complex) if m is None else m

    def axis_operator(self, axis: int) -> "ArmOperator":
        """1D operator for one axis of a separable 2D arm (carrier kept on axis 0 only)."""
        if self.source_grid.ndim != 2 or not self.separable:
            raise DimensionMismatch("axis operators need a separable 2D arm")
        elements = []
        for el in self.arm.elements:
            if isinstance(el, FreeSpace) and el.grid is not None:
                el = FreeSpace(el.distance, el.grid.axis_grid(axis))
            elements.append(el)
        return ArmOperator(OpticalArm(tuple(elements)), self.wavelength,
                           self.source_grid.axis_grid(axis),
                           self.observation_grid.axis_grid(axis),
                           carrier=self.carrier and axis == 0)


def _resample_transpose(b: NDArray, src: TransverseGrid, dst: TransverseGrid) -> NDArray:
    # adjoint-pattern scatter of nearest-neighbour gathering (real 0/1 weights)
    maps = [_nearest_map(src, dst, ax) for ax in range(src.ndim)]
    out = np.zeros(b.shape[: b.ndim - src.ndim] + src.shape, dtype=np.result_type(b, complex))
    if src.ndim == 1:
        (ix, mx), = maps
        np.add.at(out, (..., ix[mx]), b[..., mx])
    else:
        (ix, mx), (iy, my) = maps
        sel = b[..., my, :][..., mx]
        np.add.at(out, (..., iy[my][:, None], ix[mx][None, :]), sel)
    return out
