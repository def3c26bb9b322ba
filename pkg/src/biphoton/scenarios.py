"""Canned reproductions of the imaging, lithography, Popper, spectroscopy and EPR experiments.

Every function returns a ScenarioResult whose summary is recomputed from its
table by the registered summarizer, so a table read back from disk yields the
same summary.  Lengths are SI (m) internally; tables report mm and fs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import quad
from scipy.special import sici

from .correlator import (
    BiphotonSetup,
    CorrelationMap,
    bucket_rate,
    coincident_g2,
    contrast,
    mixed_temporal_g2,
    temporal_g2,
)
from .epr import (
    EntangledGaussian,
    StateOne,
    StateThree,
    StateTwo,
    evaluate_inequalities,
    sample_pairs,
)
from .errors import AllZeroSpectrum, GeometryError
from .fresnel import (
    Aperture,
    FreeSpace,
    OpticalArm,
    SampledField,
    ThinLens,
    TransverseGrid,
    free_propagate,
    propagate_arm,
    somb,
)
from .metrics import (
    bounding_box,
    edge_sharpness,
    first_zero,
    fringe_period,
    fwhm,
)
from .spdc import CrystalParams, GaussianPump, SincTypeII, SpdcConfig
from .tables import OutputTable, bitmap_on_grid

MM = 1e3
FS = 1e15

SCENARIO_NAMES = (
    "classical-image",
    "lithography-fourier",
    "lithography-image",
    "ghost-image",
    "popper",
    "notch",
    "entropy",
    "temporal-g2",
    "mixed-g2",
    "epr-stats",
)


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    """Scenario output: parameter snapshot, primary table, derived summary.

    ``block`` is the row count of one scan line for 2D maps (gnuplot blocks).
    """

    name: str
    params: dict
    table: OutputTable
    summary: dict
    map: CorrelationMap | None = None
    block: int | None = None


SUMMARIZERS: dict[str, Callable[[OutputTable, dict], dict]] = {}


def summarizer(name: str):
    def register(fn):
        SUMMARIZERS[name] = fn
        return fn
    return register


def summarize(name: str, table: OutputTable, params: dict) -> dict:
    return SUMMARIZERS[name](table, params)


def _result(name, params, columns, cmap=None, block=None) -> ScenarioResult:
    table = OutputTable.from_columns(columns)
    return ScenarioResult(name, dict(params), table, summarize(name, table, params), cmap, block)


def check_thin_lens(s_o: float, s_i: float, f: float, rtol: float = 1e-9) -> None:
    """GeometryError unless 1/s_o + 1/s_i = 1/f to relative tolerance ``rtol``."""
    for label, v in (("s_o", s_o), ("s_i", s_i), ("f", f)):
        if not (np.isfinite(v) and v > 0):
            raise GeometryError(f"{label} must be positive, got {v}")
    miss = abs(1 / s_o + 1 / s_i - 1 / f)
    if miss > rtol * max(1 / s_o, 1 / s_i, 1 / f):
        raise GeometryError(
            f"thin-lens equation violated: 1/s_o + 1/s_i - 1/f = {miss:.3e} 1/m "
            f"(s_o={s_o:g} m, s_i={s_i:g} m, f={f:g} m)")


def _safe_min(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ValueError:
        return None


def _points(grid: TransverseGrid) -> NDArray:
    """(size, 2) array of (x, y) sample positions; y = 0 for 1D grids."""
    if grid.ndim == 1:
        x = grid.axis_coords(0)
        return np.column_stack([x, np.zeros_like(x)])
    x, y = grid.coords()
    return np.column_stack([x.ravel(), y.ravel()])


def _map_columns(grid: TransverseGrid, **values) -> dict:
    pts = _points(grid) * MM
    cols = {"x_mm": pts[:, 0]}
    if grid.ndim == 2:
        cols["y_mm"] = pts[:, 1]
    for name, v in values.items():
        cols[name] = np.asarray(v).ravel()
    return cols


def _unflatten(table: OutputTable, name: str):
    """Rebuild (x, y, values[iy, ix]) from a flattened map table."""
    x_all = table.column("x_mm")
    x = np.unique(x_all)
    if "y_mm" not in table.columns:
        return x_all, None, table.column(name)
    y = np.unique(table.column("y_mm"))
    return x, y, table.column(name).reshape(y.size, x.size)


# ---------------------------------------------------------------------------
# Classical imaging (closed-form somb point-spread sums)


def somb_image_sum(weights: NDArray, obj_pts: NDArray, img_pts: NDArray, k: float,
                   radius: float, s_o: float, m: float, power: int = 1,
                   chunk: int = 256) -> NDArray:
    """sum_j weights_j somb((R/s_o) k |rho_o_j + rho_i/m|)**power over object points j."""
    weights = np.asarray(weights)
    keep = np.abs(weights) > 0
    weights, obj_pts = weights[keep], obj_pts[keep]
    scale = radius / s_o * k
    out = np.zeros(img_pts.shape[0], dtype=np.result_type(weights, float))
    ref = img_pts / m
    for start in range(0, weights.size, chunk):
        sl = slice(start, start + chunk)
        d = np.hypot(obj_pts[sl, 0][:, None] + ref[None, :, 0],
                     obj_pts[sl, 1][:, None] + ref[None, :, 1])
        out += weights[sl] @ somb(scale * d) ** power
    return out


def _default_image_grid(obj_grid: TransverseGrid, m: float) -> TransverseGrid:
    return TransverseGrid.centered(obj_grid.n, obj_grid.spacing * m, obj_grid.ndim)


def classical_incoherent_image(mask: NDArray, obj_grid: TransverseGrid, s_o: float, s_i: float,
                               f: float, radius: float, wavelength: float,
                               image_grid: TransverseGrid | None = None) -> ScenarioResult:
    """Incoherent image: sum |A|^2 |somb|^2 cellArea over the object."""
    return _classical_image("incoherent", mask, obj_grid, s_o, s_i, f, radius, wavelength,
                            image_grid)


def classical_coherent_image(mask: NDArray, obj_grid: TransverseGrid, s_o: float, s_i: float,
                             f: float, radius: float, wavelength: float,
                             image_grid: TransverseGrid | None = None) -> ScenarioResult:
    """Coherent image: |sum A exp(i k rho_o^2 / 2 s_o) somb cellArea|^2."""
    return _classical_image("coherent", mask, obj_grid, s_o, s_i, f, radius, wavelength,
                            image_grid)


def _classical_image(mode, mask, obj_grid, s_o, s_i, f, radius, wavelength, image_grid):
    check_thin_lens(s_o, s_i, f)
    m = s_i / s_o
    k = 2 * np.pi / wavelength
    image_grid = image_grid or _default_image_grid(obj_grid, m)
    a = np.asarray(mask).ravel()
    obj_pts, img_pts = _points(obj_grid), _points(image_grid)
    if mode == "incoherent":
        intensity = somb_image_sum(np.abs(a) ** 2 * obj_grid.cell_area, obj_pts, img_pts, k,
                                   radius, s_o, m, power=2)
    else:
        phase = np.exp(1j * k * np.sum(obj_pts**2, axis=1) / (2 * s_o))
        amp = somb_image_sum(a * phase * obj_grid.cell_area, obj_pts, img_pts, k, radius, s_o, m)
        intensity = np.abs(amp) ** 2
    intensity = intensity.reshape(image_grid.shape)
    params = {"mode": mode, "object_distance_m": s_o, "image_distance_m": s_i,
              "focal_length_m": f, "lens_radius_m": radius, "wavelength_m": wavelength,
              "magnification": m}
    cmap = CorrelationMap(intensity, (image_grid,), "intensity", dict(params))
    block = image_grid.n if image_grid.ndim == 2 else None
    return _result("classical-image", params, _map_columns(image_grid, intensity=intensity),
                   cmap, block)


@summarizer("classical-image")
def _sum_classical(table: OutputTable, params: dict) -> dict:
    x, y, v = _unflatten(table, "intensity")
    if y is None:
        i = int(np.argmax(v))
        return {"peak_x_mm": float(x[i]), "fwhm_mm": _safe_min(fwhm, x, v),
                "first_zero_mm": _safe_min(first_zero, x, v),
                "magnification": params["magnification"]}
    iy, ix = np.unravel_index(int(np.argmax(v)), v.shape)
    (xlo, xhi), (ylo, yhi) = bounding_box(x, y, v)
    return {"peak_x_mm": float(x[ix]), "peak_y_mm": float(y[iy]),
            "image_width_mm": xhi - xlo, "image_height_mm": yhi - ylo,
            "magnification": params["magnification"]}


# ---------------------------------------------------------------------------
# Quantum lithography


def box_coverage(x: NDArray, spacing: float, center: float, width: float) -> NDArray:
    """Fraction of each cell ``[x - dx/2, x + dx/2]`` lying inside a box of ``width``.

    Sampled this way a slit keeps its physical width whatever the grid alignment.
    """
    lo = np.maximum(x - spacing / 2, center - width / 2)
    hi = np.minimum(x + spacing / 2, center + width / 2)
    return np.clip((hi - lo) / spacing, 0.0, 1.0)


def double_slit(grid: TransverseGrid, separation: float, width: float,
                height: float | None = None) -> NDArray:
    """Two slits along x centred at +-separation/2; ``height`` bounds y on 2D grids."""
    x = grid.axis_coords(0)
    tx = np.minimum(1.0, box_coverage(x, grid.spacing, -separation / 2, width)
                    + box_coverage(x, grid.spacing, separation / 2, width))
    if grid.ndim == 1:
        return tx
    y = grid.axis_coords(1)
    ty = np.ones_like(y) if height is None else box_coverage(y, grid.spacing, 0.0, height)
    return ty[:, None] * tx[None, :]


def _fourier_grids(separation, width, f, wavelength, s_o, scan):
    k = 2 * np.pi / wavelength
    xs_half = separation / 2 + width
    dx_src = min(width / 20, 0.5 * np.pi * s_o / (k * (3 * xs_half + 2 * scan.extent * s_o / f)))
    src = TransverseGrid.centered(int(math.ceil(2 * xs_half / dx_src)) + 2, dx_src)
    footprint = s_o * scan.extent / (2 * f) + xs_half
    half_lens = 1.5 * footprint + 0.5e-3
    freq = k * (half_lens / s_o + xs_half / s_o + scan.extent / (2 * f))
    dx_lens = 0.5 * np.pi / freq
    lens = TransverseGrid.centered(int(math.ceil(2 * half_lens / dx_lens)) + 2, dx_lens)
    # The lens grid is a numerical truncation, not a physical stop.  A hard cut
    # rings across the focal plane; a raised-cosine taper outside the ray
    # footprint removes the ringing without touching the imaged rays.
    r = np.abs(lens.coords())
    t = np.clip((r.max() - r) / (r.max() - 1.2 * footprint), 0.0, 1.0)
    return src, lens, Aperture(np.sin(0.5 * np.pi * t) ** 2, lens)


def lithography_fourier_map(separation: float, width: float, f: float, wavelength: float,
                            mode: str = "two-photon", object_distance: float = 0.05,
                            scan: TransverseGrid | None = None) -> CorrelationMap:
    """Focal-plane pattern of a double slit: classical intensity or two-photon coincidences.

    Classical: plane-wave illumination at ``wavelength``.  Two-photon: degenerate
    pairs at ``wavelength`` born inside the slits (pump at half the wavelength).
    """
    scan = scan or TransverseGrid.centered(1600, 10e-6)
    src, lens, taper = _fourier_grids(separation, width, f, wavelength, object_distance, scan)
    slits = double_slit(src, separation, width)
    arm = OpticalArm((FreeSpace(object_distance, lens), taper, ThinLens(f), FreeSpace(f)))
    meta = {"mode": mode, "source_samples": src.n, "lens_samples": lens.n}
    if mode == "classical":
        field = propagate_arm(SampledField(src, slits.astype(complex), wavelength), arm, scan)
        inten = field.intensity()
        return CorrelationMap(inten / inten.max(), (scan,), "intensity", meta)
    if mode != "two-photon":
        raise ValueError(f"mode must be 'classical' or 'two-photon', got {mode!r}")
    # Both photons cross the slits, so the source weight is the cell average of
    # |t|^2; for a binary slit that is the coverage itself.
    setup = BiphotonSetup(SpdcConfig.degenerate(wavelength), src, arm, arm,
                          source_aperture=np.sqrt(slits))
    g2 = coincident_g2(setup, scan)
    return CorrelationMap(g2.values, g2.grids, "coincident", {**g2.metadata, **meta})


def lithography_fourier(separation: float = 0.25e-3, width: float = 0.05e-3, f: float = 0.5,
                        wavelength: float = 916e-9, mode: str = "both",
                        object_distance: float = 0.05,
                        scan: TransverseGrid | None = None) -> ScenarioResult:
    scan = scan or TransverseGrid.centered(1600, 10e-6)
    modes = ("classical", "two-photon") if mode == "both" else (mode,)
    cols = {"x_mm": scan.axis_coords() * MM}
    for md in modes:
        cols[md.replace("-", "_")] = lithography_fourier_map(
            separation, width, f, wavelength, md, object_distance, scan).values
    params = {"separation_m": separation, "width_m": width, "focal_length_m": f,
              "wavelength_m": wavelength, "object_distance_m": object_distance, "mode": mode}
    return _result("lithography-fourier", params, cols)


@summarizer("lithography-fourier")
def _sum_litho_fourier(table: OutputTable, params: dict) -> dict:
    x = table.column("x_mm")
    lam, f = params["wavelength_m"], params["focal_length_m"]
    d, a = params["separation_m"], params["width_m"]
    out = {"classical_period_expected_mm": lam * f / d * MM,
           "two_photon_period_expected_mm": lam / 2 * f / d * MM,
           "classical_envelope_zero_expected_mm": lam * f / a * MM}
    periods = {}
    for col, lam_eff in (("classical", lam), ("two_photon", lam / 2)):
        if col in table.columns:
            # stay inside the first envelope zero so missing orders do not bias the fit
            window = 0.8 * lam_eff * f / a * MM
            periods[col] = fringe_period(x, table.column(col), window)
            out[f"{col}_period_mm"] = periods[col]
            out[f"{col}_contrast"] = contrast(table.column(col)[np.abs(x) <= window])
    if len(periods) == 2:
        out["period_ratio"] = periods["two_photon"] / periods["classical"]
    return out


def lithography_broadband_psf(wavelength: float, s_o: float, s_i: float, f: float,
                              radius: float, DL: float = 1e-12, n_freq: int = 33,
                              lobes: float = 4.0, scan: TransverseGrid | None = None):
    """Numerical 1D two-photon point response: monochromatic and SincTypeII-broadband.

    Returns (x, mono, broadband), both peak-normalized, on the image-plane scan.
    """
    check_thin_lens(s_o, s_i, f)
    scan = scan or TransverseGrid.centered(1201, 1e-6)
    k = 2 * np.pi / wavelength
    dx_lens = min(0.25 * 2 * np.pi * s_i / (k * (2 * radius + scan.extent)), radius / 100)
    lens = TransverseGrid.centered(int(math.ceil(2 * radius / dx_lens)) + 1, dx_lens)
    src = TransverseGrid.centered(3, 1e-7)
    point = np.array([0.0, 1.0, 0.0])
    arm = OpticalArm((FreeSpace(s_o, lens), ThinLens(f, radius), FreeSpace(s_i)))
    spdc = SpdcConfig.degenerate(wavelength)
    setup = BiphotonSetup(spdc, src, arm, arm, source_aperture=point)
    mono = coincident_g2(setup, scan).values
    spectrum = SincTypeII(CrystalParams.from_DL(DL), cutoff=lobes * 2 * np.pi / DL)
    broad = coincident_g2(setup, scan, spectrum=spectrum, n_freq=n_freq).values
    return scan.axis_coords(), mono, broad


def lithography_image(separation: float = 0.25e-3, width: float = 0.05e-3, s_o: float = 0.6,
                      s_i: float = 1.2, f: float = 0.4, radius: float = 5e-3,
                      wavelength: float = 916e-9, height: float = 1e-3,
                      scan: TransverseGrid | None = None, broadband: bool = True,
                      DL: float = 1e-12, n_freq: int = 33) -> ScenarioResult:
    """Image-plane double-slit images: classical coherent vs two-photon (pump wavelength)."""
    check_thin_lens(s_o, s_i, f)
    m = s_i / s_o
    scan = scan or TransverseGrid.centered(1201, 1e-6)
    k = 2 * np.pi / wavelength
    kp = 2 * k
    x = scan.axis_coords()
    img = np.column_stack([x, np.zeros_like(x)])
    dx_o = width / 10
    n_o = int(math.ceil(max(separation + 2 * width, height) / dx_o)) + 2
    obj_grid = TransverseGrid.centered(n_o, dx_o, 2)
    a = double_slit(obj_grid, separation, width, height).ravel()
    pts = _points(obj_grid)
    chirp = lambda kk: np.exp(1j * kk * np.sum(pts**2, axis=1) / (2 * s_o))  # noqa: E731
    classical = np.abs(somb_image_sum(a * chirp(k) * obj_grid.cell_area, pts, img, k,
                                      radius, s_o, m)) ** 2
    two = np.abs(somb_image_sum(a**2 * chirp(kp) * obj_grid.cell_area, pts, img, kp,
                                radius, s_o, m)) ** 2
    origin = np.zeros((1, 2))
    offset = np.array([[separation / 2, 0.0]])
    cols = {"x_mm": x * MM,
            "classical": classical / classical.max(),
            "two_photon": two / two.max(),
            "psf_classical": somb_image_sum(np.ones(1), origin, img, k, radius, s_o, m) ** 2,
            "psf_two_photon": somb_image_sum(np.ones(1), origin, img, kp, radius, s_o, m) ** 2,
            "psf_two_photon_offset": somb_image_sum(np.ones(1), offset, img, kp, radius, s_o, m) ** 2}
    if broadband:
        _, mono, broad = lithography_broadband_psf(wavelength, s_o, s_i, f, radius, DL, n_freq,
                                                   scan=scan)
        cols["numeric_mono"] = mono
        cols["numeric_broadband"] = broad
    params = {"separation_m": separation, "width_m": width, "object_distance_m": s_o,
              "image_distance_m": s_i, "focal_length_m": f, "lens_radius_m": radius,
              "wavelength_m": wavelength, "slit_height_m": height, "DL_s": DL,
              "n_freq": n_freq, "magnification": m}
    return _result("lithography-image", params, cols)


def _refined_peak(x, y) -> float:
    i = int(np.argmax(y))
    if 0 < i < y.size - 1:
        y0, y1, y2 = y[i - 1], y[i], y[i + 1]
        denom = y0 - 2 * y1 + y2
        if denom < 0:
            return float(x[i] + 0.5 * (y0 - y2) / denom * (x[1] - x[0]))
    return float(x[i])


@summarizer("lithography-image")
def _sum_litho_image(table: OutputTable, params: dict) -> dict:
    x = table.column("x_mm")
    zc = first_zero(x, table.column("psf_classical"), origin=0.0)
    zt = first_zero(x, table.column("psf_two_photon"), origin=0.0)
    m = params["magnification"]
    out = {"psf_first_zero_classical_mm": zc, "psf_first_zero_two_photon_mm": zt,
           "psf_zero_ratio": zt / zc,
           "magnification_measured": -_refined_peak(x, table.column("psf_two_photon_offset"))
           / (params["separation_m"] / 2 * MM),
           "magnification": m,
           "classical_fwhm_mm": _safe_min(fwhm, x, table.column("psf_classical")),
           "two_photon_fwhm_mm": _safe_min(fwhm, x, table.column("psf_two_photon"))}
    if "numeric_mono" in table.columns:
        wm = fwhm(x, table.column("numeric_mono"))
        wb = fwhm(x, table.column("numeric_broadband"))
        out.update(numeric_fwhm_mono_mm=wm, numeric_fwhm_broadband_mm=wb,
                   broadband_width_ratio=wb / wm)
    return out


# ---------------------------------------------------------------------------
# Ghost imaging


def _ghost_grids(n, dx_o, dx_2, d1, s_o, f, d2, wavelength, lens_half, safety=0.5):
    k = 2 * np.pi / wavelength
    s_i = d1 + d2
    obj_half, scan_half = n * dx_o / 2, n * dx_2 / 2
    src_half = scan_half * abs(1 - d2 / s_i) + lens_half * d2 / s_i + 1e-3
    # phase-rate bounds for the source and lens integrands plus the kernel sampling limits
    q_src = k * ((1 / d1 + 1 / d2) * src_half + lens_half / d1 + scan_half / d2)
    dx_src = safety * min(np.pi / q_src,
                          2 * np.pi * d1 / (k * 2 * max(src_half, lens_half)),
                          2 * np.pi * d2 / (k * 2 * max(src_half, scan_half)))
    q_lens = k * (abs(1 / d1 - 1 / f + 1 / s_o) * lens_half + src_half / d1 + obj_half / s_o)
    dx_lens = safety * min(np.pi / q_lens, 2 * np.pi * s_o / (k * 2 * max(lens_half, obj_half)))
    src = TransverseGrid.centered(int(math.ceil(2 * src_half / dx_src)), dx_src, 2)
    lens = TransverseGrid.centered(int(math.ceil(2 * lens_half / dx_lens)), dx_lens, 2)
    return src, lens


def bitmap_extent(bitmap: NDArray, width: float, height: float):
    """Physical ((x_lo, x_hi), (y_lo, y_hi)) of the lit pixels of a centred bitmap."""
    h, w = bitmap.shape
    rows, cols = np.nonzero(np.asarray(bitmap) > 0)
    px, py = width / w, height / h
    return ((cols.min() * px - width / 2, (cols.max() + 1) * px - width / 2),
            (height / 2 - (rows.max() + 1) * py, height / 2 - rows.min() * py))


def ghost_image(bitmap: NDArray, object_size: tuple[float, float] = (7e-3, 3.5e-3),
                d1: float = 0.4, s_o: float = 0.6, f: float = 0.4, d2: float = 0.8,
                wavelength: float = 702.2e-9, n: int = 128, object_spacing: float | None = None,
                scan_spacing: float | None = None, lens_half_width: float = 5e-3,
                require_focus: bool = True) -> ScenarioResult:
    """Bucket-detector coincidence map over the idler scan plane.

    The signal arm runs source -> lens (d1) -> object (s_o); the idler arm runs
    source -> scan plane (d2).  The unfolded image distance is s_i = d1 + d2.
    """
    width, height = object_size
    s_i = d1 + d2
    if require_focus:
        check_thin_lens(s_o, s_i, f)
    elif not all(v > 0 for v in (d1, s_o, f, d2)):
        raise GeometryError("distances must be positive")
    s_focus = 1 / (1 / f - 1 / s_o)
    m_focus = s_focus / s_o
    dx_o = object_spacing or 1.25 * max(width, height) / n
    dx_2 = scan_spacing or m_focus * dx_o
    obj_grid = TransverseGrid.centered(n, dx_o, 2)
    scan = TransverseGrid.centered(n, dx_2, 2)
    src, lens = _ghost_grids(n, dx_o, dx_2, d1, s_o, f, d2, wavelength, lens_half_width)
    xo, yo = obj_grid.coords()
    mask = bitmap_on_grid(bitmap, width, height, xo, yo)
    spdc = SpdcConfig.degenerate(wavelength)
    sig = OpticalArm((FreeSpace(d1, lens), ThinLens(f), FreeSpace(s_o, obj_grid)))
    idl = OpticalArm((FreeSpace(d2),))
    setup = BiphotonSetup(spdc, src, sig, idl)
    rate = bucket_rate(setup, Aperture(mask, obj_grid), scan)
    m_geom = s_i / s_o
    xs, ys = scan.coords()
    ref_inv = bitmap_on_grid(bitmap, width, height, -xs / m_geom, -ys / m_geom)
    ref_up = bitmap_on_grid(bitmap, width, height, xs / m_geom, ys / m_geom)
    (bx0, bx1), (by0, by1) = bitmap_extent(bitmap, width, height)
    params = {"d1_m": d1, "object_distance_m": s_o, "focal_length_m": f, "d2_m": d2,
              "image_distance_m": s_i, "wavelength_m": wavelength, "n": n,
              "object_spacing_m": dx_o, "scan_spacing_m": dx_2,
              "lens_half_width_m": lens_half_width, "object_width_m": width,
              "object_height_m": height, "object_bbox_width_m": bx1 - bx0,
              "object_bbox_height_m": by1 - by0, "source_samples": src.n,
              "lens_samples": lens.n, "in_focus": bool(abs(1 / s_o + 1 / s_i - 1 / f)
                                                       <= 1e-9 * (1 / f))}
    cols = _map_columns(scan, rate=rate.values, reference_inverted=ref_inv,
                        reference_upright=ref_up)
    return _result("ghost-image", params, cols, rate, block=n)


@summarizer("ghost-image")
def _sum_ghost(table: OutputTable, params: dict) -> dict:
    x, y, v = _unflatten(table, "rate")
    _, _, inv = _unflatten(table, "reference_inverted")
    _, _, up = _unflatten(table, "reference_upright")
    (xlo, xhi), (ylo, yhi) = bounding_box(x, y, v)
    mx = (xhi - xlo) / (params["object_bbox_width_m"] * MM)
    my = (yhi - ylo) / (params["object_bbox_height_m"] * MM)

    def corr(ref):
        return float(np.sum(v * ref) / np.sqrt(np.sum(v**2) * np.sum(ref**2) + 1e-300))

    c_inv, c_up = corr(inv), corr(up)
    return {"image_width_mm": xhi - xlo, "image_height_mm": yhi - ylo,
            "magnification_x": mx, "magnification_y": my, "magnification": 0.5 * (mx + my),
            "magnification_expected": params["image_distance_m"] / params["object_distance_m"],
            "inverted": bool(c_inv > c_up), "correlation_inverted": c_inv,
            "correlation_upright": c_up,
            "edge_sharpness_per_mm2": edge_sharpness(v, float(x[1] - x[0]))}


# ---------------------------------------------------------------------------
# Popper's experiment


def popper_run(slit_a: float = 0.16e-3, slit_b: float | None = 0.16e-3, f: float = 0.5,
               s_o: float = 1.0, b1: float = 0.255, b2: float = 0.745,
               detector_offset: float = 0.5, wavelength: float = 702.2e-9,
               pump_waist: float = 1.5e-3, lens_radius: float = 12.5e-3,
               scan: TransverseGrid | None = None, source_spacing: float = 6e-6,
               lens_spacing: float = 5e-6) -> ScenarioResult:
    """Coincidence profile at the D2 scan plane, ``detector_offset`` behind screen B.

    ``slit_b`` given (measurement 1): the slit-B-filtered ghost image of slit A
    (equal size, uniform amplitude) diffracts to the scan plane.  ``slit_b``
    None (measurement 2): full two-photon model with a Gaussian pump, the lens
    in the signal arm and a bucket detector behind slit A.
    """
    check_thin_lens(s_o, b1 + b2, f)
    scan = scan or TransverseGrid.centered(601, 20e-6)
    params = {"slit_a_m": slit_a, "slit_b_m": slit_b, "focal_length_m": f,
              "object_distance_m": s_o, "b1_m": b1, "b2_m": b2,
              "detector_offset_m": detector_offset, "wavelength_m": wavelength,
              "pump_waist_m": pump_waist, "lens_radius_m": lens_radius}
    if slit_b is not None:
        width = min(slit_a, slit_b)
        dx = 1e-6
        gin = TransverseGrid.centered(int(math.ceil(1.25 * width / dx)) + 2, dx)
        amp = box_coverage(gin.axis_coords(), dx, 0.0, width).astype(complex)
        out = free_propagate(SampledField(gin, amp, wavelength), detector_offset, scan)
        values = out.intensity()
        params["measurement"] = 1
    else:
        spdc = SpdcConfig.degenerate(wavelength, pump_model=GaussianPump(pump_waist))
        src = TransverseGrid.centered(int(round(8 * pump_waist / source_spacing)), source_spacing)
        lens = TransverseGrid.centered(int(round(2 * lens_radius / lens_spacing)) + 2,
                                       lens_spacing)
        obj = TransverseGrid.centered(64, slit_a / 32)
        sig = OpticalArm((FreeSpace(b1, lens), ThinLens(f, lens_radius), FreeSpace(s_o, obj)))
        idl = OpticalArm((FreeSpace(b2 + detector_offset),))
        setup = BiphotonSetup(spdc, src, sig, idl)
        mask = box_coverage(obj.axis_coords(), obj.spacing, 0.0, slit_a)
        values = bucket_rate(setup, Aperture(mask, obj), scan, normalize=False).values
        params["measurement"] = 2
    values = values / values.max()
    cmap = CorrelationMap(values, (scan,), "coincident", dict(params))
    return _result("popper", params, {"y_mm": scan.axis_coords() * MM, "coincidence": values},
                   cmap)


@summarizer("popper")
def _sum_popper(table: OutputTable, params: dict) -> dict:
    y, v = table.column("y_mm"), table.column("coincidence")
    out = {"measurement": params["measurement"], "fwhm_mm": fwhm(y, v),
           "first_zero_mm": _safe_min(first_zero, y, v, origin=0.0)}
    if params["measurement"] == 1:
        width = min(params["slit_a_m"], params["slit_b_m"])
        out["first_zero_expected_mm"] = params["wavelength_m"] * params["detector_offset_m"] \
            / width * MM
    return out


# ---------------------------------------------------------------------------
# Fourier spectroscopy notch


def _cos_tail(c: float) -> float:
    """Integral from 1 to infinity of cos(c u) / u^2, by parts: cos c - |c| (pi/2 - Si|c|)."""
    c = abs(c)
    return float(np.cos(c) - c * (0.5 * np.pi - sici(c)[0]))


def sinc2_transform(s: float) -> float:
    """G(s) = integral of sinc^2(u/2) cos(u s) du over the real line; G(0) = 2 pi.

    The finite head [0, 1] uses adaptive quadrature; on [1, inf) the integrand
    is split into three pure cosines over u^2, each integrated in closed form.
    """
    s = abs(float(s))
    head = quad(lambda u: np.sinc(u / (2 * np.pi)) ** 2 * np.cos(u * s), 0.0, 1.0,
                epsabs=1e-14, epsrel=1e-13)[0]
    return 2.0 * (head + 2 * _cos_tail(s) - _cos_tail(1 + s) - _cos_tail(1 - s))


def notch_envelope(tau: NDArray, DL: float) -> NDArray:
    """|FT of sinc^2(DL Omega / 2)| at tau, normalized to 1 at tau = 0."""
    return np.abs(np.array([sinc2_transform(t / DL) for t in np.asarray(tau, dtype=float)])) \
        / (2 * np.pi)


def fourier_spectroscopy_notch(crystal: CrystalParams, tau: NDArray,
                               wavelength: float = 702.2e-9) -> ScenarioResult:
    """Interference rate R_d(tau) = 1 + cos(omega0 tau) * envelope(tau)."""
    DL = crystal.DL
    if not DL > 0:
        raise GeometryError("DL must be positive")
    tau = np.asarray(tau, dtype=float)
    env = notch_envelope(tau, DL)
    omega0 = 2 * np.pi * 299_792_458.0 / wavelength
    rate = 1.0 + np.cos(omega0 * tau) * env
    params = {"DL_s": DL, "wavelength_m": wavelength}
    return _result("notch", params, {"tau_fs": tau * FS, "rate": rate, "envelope": env})


@summarizer("notch")
def _sum_notch(table: OutputTable, params: dict) -> dict:
    tau, env, rate = table.column("tau_fs"), table.column("envelope"), table.column("rate")
    peak = env.max()
    pos = tau >= 0
    below = tau[pos][env[pos] <= 1e-6 * peak]
    dl = params["DL_s"] * FS
    return {"envelope_base_half_width_fs": float(below.min()) if below.size else None,
            "envelope_at_half_DL": float(np.interp(dl / 2, tau, env)) / peak,
            "max_envelope_beyond_DL": float(env[np.abs(tau) >= dl].max(initial=0.0)) / peak,
            "rate_peak_tau_fs": float(tau[int(np.argmax(rate))]),
            "DL_fs": dl}


# ---------------------------------------------------------------------------
# Entropy


def subsystem_entropy(weights) -> float:
    """Shannon/von Neumann entropy (nats) of the diagonal state with these weights."""
    w = np.asarray(weights, dtype=float).ravel()
    if w.size == 0 or np.any(~np.isfinite(w)) or np.any(w < 0):
        raise ValueError("weights must be finite and nonnegative")
    total = w.sum()
    if total <= 0:
        raise AllZeroSpectrum("at least one weight must be positive")
    p = w[w > 0] / total
    return float(max(0.0, -np.sum(p * np.log(p))))


def von_neumann_entropy(rho: NDArray, tol: float = 1e-12) -> float:
    """-tr(rho ln rho) of a Hermitian density matrix; eigenvalues below ``tol`` count as zero."""
    ev = np.linalg.eigvalsh(np.asarray(rho))
    ev = ev[ev > tol]
    if ev.size == 0:
        raise AllZeroSpectrum("density matrix has no positive eigenvalue")
    return subsystem_entropy(ev)


def spectrum_bin_weights(DL: float, n_bins: int = 512, half_span: float | None = None,
                         order: int = 8):
    """Bin centres and bin-averaged sinc^2(DL Omega / 2) over |Omega| <= half_span."""
    half_span = 4 * np.pi / DL if half_span is None else half_span
    edges = np.linspace(-half_span, half_span, n_bins + 1)
    x, w = np.polynomial.legendre.leggauss(order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    rad = 0.5 * np.diff(edges)
    nodes = mid[:, None] + rad[:, None] * x
    vals = np.sinc(DL * nodes / (2 * np.pi)) ** 2
    return mid, (vals @ w) / 2


def joint_state_entropies(amplitudes: NDArray) -> tuple[float, float]:
    """(whole-state, signal-subsystem) entropies of the pure joint state sum_j a_j |j>_s |j'>_i."""
    a = np.asarray(amplitudes, dtype=complex)
    psi = np.diag(a)[:, ::-1]  # anti-correlated frequency pairs
    psi = psi / np.linalg.norm(psi)
    vec = psi.ravel()
    whole = von_neumann_entropy(np.outer(vec, vec.conj()) if vec.size <= 4096
                                else _rank_one(vec))
    schmidt = np.linalg.svd(psi, compute_uv=False) ** 2
    return whole, subsystem_entropy(schmidt)


def _rank_one(vec: NDArray) -> NDArray:
    # the pure-state density matrix has one eigenvalue; avoid forming huge outer products
    return np.array([[np.vdot(vec, vec).real]])


def entropy_scenario(DL: float = 1e-12, n_bins: int = 512) -> ScenarioResult:
    omega, weights = spectrum_bin_weights(DL, n_bins)
    amps = np.sqrt(weights)
    whole, marginal = joint_state_entropies(amps)
    params = {"DL_s": DL, "n_bins": n_bins, "joint_entropy_nats": whole,
              "schmidt_entropy_nats": marginal}
    return _result("entropy", params, {"omega_rad_per_fs": omega / FS, "weight": weights})


@summarizer("entropy")
def _sum_entropy(table: OutputTable, params: dict) -> dict:
    s = subsystem_entropy(table.column("weight"))
    return {"entropy_nats": s, "max_entropy_nats": math.log(table.data.shape[0]),
            "joint_entropy_nats": params["joint_entropy_nats"],
            "schmidt_entropy_nats": params["schmidt_entropy_nats"]}


# ---------------------------------------------------------------------------
# Temporal correlations


def temporal_scenario(spectrum, tau: NDArray, cutoff: float | None = None,
                      mixed: bool = False) -> ScenarioResult:
    tau = np.asarray(tau, dtype=float)
    pure = temporal_g2(spectrum, tau, cutoff)
    cols = {"tau_fs": tau * FS, "pure": pure.values}
    name = "temporal-g2"
    cmap = pure
    if mixed:
        cmap = mixed_temporal_g2(spectrum, tau, cutoff)
        cols = {"tau_fs": tau * FS, "mixed": cmap.values, "pure": pure.values}
        name = "mixed-g2"
    params = {"spectrum": type(spectrum).__name__, "cutoff_rad_per_s": cutoff}
    return _result(name, params, cols, cmap)


@summarizer("temporal-g2")
def _sum_temporal(table: OutputTable, params: dict) -> dict:
    t, g = table.column("tau_fs"), table.column("pure")
    return {"contrast": contrast(g), "fwhm_fs": _safe_min(fwhm, t, g),
            "peak_tau_fs": float(t[int(np.argmax(g))])}


@summarizer("mixed-g2")
def _sum_mixed(table: OutputTable, params: dict) -> dict:
    mixed, pure = table.column("mixed"), table.column("pure")
    return {"mixed_level": float(mixed.max()),
            "mixed_flatness": float(mixed.max() / mixed.min() - 1.0),
            "mixed_contrast": contrast(mixed), "pure_contrast": contrast(pure)}


# ---------------------------------------------------------------------------
# EPR statistics

EPR_MODELS = ("state-one", "state-two", "state-three", "entangled-gaussian")


def epr_statistics(n: int = 100_000, seed: int = 0, sigma: float = 1.0,
                   large_factor: float = 1e3, sigma_sum: float = 0.01,
                   sigma_diff: float = 0.01, sigma_single: float = 1.0,
                   x0: float = 0.0) -> ScenarioResult:
    one = StateOne(sigma, large_factor * sigma)
    two = StateTwo(x0, sigma, large_factor * sigma)
    models = [one, two, StateThree(one, two), EntangledGaussian(sigma_sum, sigma_diff,
                                                                sigma_single, x0)]
    rows = {k: [] for k in ("model", "dp1", "dp2", "dx1", "dx2", "d_psum", "d_xdiff",
                            "classical_p", "classical_x", "epr_p", "epr_x", "epr")}
    for i, model in enumerate(models):
        rep = evaluate_inequalities(sample_pairs(model, n, seed), seed)
        rows["model"].append(i)
        for key in ("dp1", "dp2", "dx1", "dx2", "d_psum", "d_xdiff"):
            rows[key].append(getattr(rep, key))
        for key in ("classical_p", "classical_x", "epr_p", "epr_x", "epr"):
            rows[key].append(float(getattr(rep, key)))
    params = {"n": n, "seed": seed, "sigma": sigma, "large_factor": large_factor,
              "sigma_sum": sigma_sum, "sigma_diff": sigma_diff, "sigma_single": sigma_single,
              "x0": x0, "entangled_respects_complementarity": models[3].respects_complementarity()}
    return _result("epr-stats", params, rows)


@summarizer("epr-stats")
def _sum_epr(table: OutputTable, params: dict) -> dict:
    out = {}
    for row in table.data:
        rec = dict(zip(table.columns, row))
        name = EPR_MODELS[int(rec.pop("model"))]
        out[name] = {k: (bool(v) if k in ("classical_p", "classical_x", "epr_p", "epr_x", "epr")
                         else float(v)) for k, v in rec.items()}
    out["entangled_respects_complementarity"] = params["entangled_respects_complementarity"]
    return out


__all__ = [
    "SCENARIO_NAMES", "ScenarioResult", "SUMMARIZERS", "summarize", "check_thin_lens",
    "classical_incoherent_image", "classical_coherent_image", "somb_image_sum",
    "double_slit", "lithography_fourier_map", "lithography_fourier", "lithography_image",
    "lithography_broadband_psf", "ghost_image", "bitmap_extent", "popper_run",
    "sinc2_transform", "notch_envelope", "fourier_spectroscopy_notch", "subsystem_entropy",
    "von_neumann_entropy", "spectrum_bin_weights", "joint_state_entropies",
    "entropy_scenario", "temporal_scenario", "epr_statistics", "EPR_MODELS",
]
