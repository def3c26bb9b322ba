"""Scenario configuration: unit-suffixed defaults, validation, hashing and dispatch.

A config file is JSON::

    {"scenario": "popper", "seed": 0, "grid": "standard",
     "params": {"slit_a_mm": 0.16, "slit_b_mm": "open"}}

Every parameter name ends in its unit (``_mm``, ``_nm``, ``_fs`` ...); unknown
names are rejected so a misspelt or mis-unitted field never passes silently.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import scenarios as sc
from .errors import ConfigError
from .fresnel import TransverseGrid
from .spdc import CrystalParams, Flat, Gaussian, SincTypeI, SincTypeII
from .tables import fixture_path, read_pnm

FIXTURE_OBJECT = "fixture:umbc"
PRESETS = {"coarse": 0.5, "standard": 1.0, "fine": 2.0}
MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class GridSpec:
    """A named preset (sample-count scale) or an explicit scan grid."""

    preset: str | None = "standard"
    n: int | None = None
    spacing: float | None = None  # m

    @property
    def scale(self) -> float:
        return PRESETS[self.preset] if self.preset else 1.0

    def scaled(self, n: int) -> int:
        return max(3, int(round(n * self.scale)))

    def as_text(self) -> str:
        return self.preset if self.preset else f"{self.n}:{self.spacing * 1e6:.15g}"


def parse_grid(text) -> GridSpec:
    text = str(text).strip()
    if text in PRESETS:
        return GridSpec(text)
    match = re.fullmatch(r"(\d+):([0-9.eE+-]+)", text)
    if not match:
        raise ConfigError("grid", f"expected coarse|standard|fine or N:spacing_um, got {text!r}")
    n, spacing = int(match.group(1)), float(match.group(2))
    if n < 3 or not (math.isfinite(spacing) and spacing > 0):
        raise ConfigError("grid", "explicit grids need N >= 3 and a positive spacing")
    return GridSpec(None, n, spacing * 1e-6)


def parse_duration_fs(text) -> float:
    """'1ps', '250 fs' or a bare number of femtoseconds."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)
    match = re.fullmatch(r"\s*([0-9.eE+-]+)\s*(fs|ps)?\s*", str(text))
    if not match:
        raise ConfigError("DL_fs", f"expected a duration like 1ps or 500fs, got {text!r}")
    value = float(match.group(1))
    return value * 1e3 if match.group(2) == "ps" else value


# ---------------------------------------------------------------------------
# Defaults per scenario (user units)

_IMAGE = {"wavelength_nm": 702.2, "object_distance_mm": 600.0, "image_distance_mm": 1200.0,
          "focal_length_mm": 400.0}
_OBJECT = {"object": FIXTURE_OBJECT, "object_width_mm": 7.0, "object_height_mm": 3.5}
_TEMPORAL = {"spectrum": "sinc-type2", "DL_fs": 1000.0, "cutoff_lobes": 20.0,
             "cutoff_rad_per_fs": 0.05, "sigma_rad_per_fs": 0.01, "dprime_l_fs2": 1e4,
             "tau_range_fs": 1500.0, "n_tau": 601}

DEFAULTS: dict[str, dict] = {
    "classical-image": {**_IMAGE, **_OBJECT, "lens_radius_mm": 5.0, "mode": "incoherent",
                        "n": 64},
    "lithography-fourier": {"wavelength_nm": 916.0, "separation_mm": 0.25,
                            "slit_width_mm": 0.05, "focal_length_mm": 500.0,
                            "object_distance_mm": 50.0, "mode": "both",
                            "scan_half_width_mm": 8.0, "n": 1600},
    "lithography-image": {**_IMAGE, "wavelength_nm": 916.0, "separation_mm": 0.25,
                          "slit_width_mm": 0.05, "slit_height_mm": 1.0, "lens_radius_mm": 5.0,
                          "DL_fs": 1000.0, "n_freq": 33, "broadband": True,
                          "scan_half_width_mm": 0.6, "n": 1201},
    "ghost-image": {**_IMAGE, **_OBJECT, "source_to_lens_mm": 400.0,
                    "lens_half_width_mm": 5.0, "allow_defocus": False, "n": 128},
    "popper": {"wavelength_nm": 702.2, "slit_a_mm": 0.16, "slit_b_mm": 0.16,
               "focal_length_mm": 500.0, "object_distance_mm": 1000.0, "b1_mm": 255.0,
               "b2_mm": 745.0, "detector_offset_mm": 500.0, "pump_waist_mm": 1.5,
               "lens_radius_mm": 12.5, "scan_half_width_mm": 6.0, "n": 601},
    "notch": {"DL_fs": 1000.0, "wavelength_nm": 702.2, "tau_range_DL": 1.5, "n_tau": 3001},
    "entropy": {"DL_fs": 1000.0, "n_bins": 512},
    "temporal-g2": dict(_TEMPORAL),
    "mixed-g2": dict(_TEMPORAL),
    "epr-stats": {"n_pairs": 100_000, "sigma": 1.0, "large_factor": 1000.0,
                  "sigma_sum": 0.01, "sigma_diff": 0.01, "sigma_single": 1.0, "x0": 0.0},
}

DESCRIPTIONS = {
    "classical-image": "classical coherent/incoherent thin-lens image of a bitmap object",
    "lithography-fourier": "double-slit focal-plane fringes, classical vs two-photon",
    "lithography-image": "double-slit image-plane PSF, classical vs two-photon (+broadband)",
    "ghost-image": "2D ghost image of a bitmap via bucket-detector coincidences",
    "popper": "Popper experiment coincidence profile (slit B width or open)",
    "notch": "Fourier-spectroscopy notch: interference rate and triangular envelope",
    "entropy": "entropy of the sinc^2 marginal spectrum vs the pure joint state",
    "temporal-g2": "pure-state temporal G2 over tau",
    "mixed-g2": "mixed-state (flat) vs pure-state temporal G2",
    "epr-stats": "Monte Carlo spreads for classical and EPR inequalities",
}

_CHOICES = {"mode": {"classical-image": ("incoherent", "coherent"),
                     "lithography-fourier": ("both", "classical", "two-photon")},
            "spectrum": ("flat", "gaussian", "sinc-type2", "sinc-type1")}
_SIGNED = {"x0", "dprime_l_fs2"}
_INTEGER = {"n", "n_tau", "n_bins", "n_freq", "n_pairs"}


def _validate(scenario: str, params: dict) -> dict:
    defaults = DEFAULTS[scenario]
    out = dict(defaults)
    for key, value in params.items():
        if key not in defaults:
            raise ConfigError(key, f"unknown parameter for scenario {scenario!r}")
        out[key] = value
    for key, value in out.items():
        default = defaults[key]
        if key == "slit_b_mm" and value == "open":
            continue
        if key == "DL_fs":
            value = out[key] = parse_duration_fs(value)
        if key in ("mode", "spectrum"):
            choices = _CHOICES[key][scenario] if key == "mode" else _CHOICES[key]
            if value not in choices:
                raise ConfigError(key, f"must be one of {', '.join(choices)}")
            continue
        if key == "object":
            if not isinstance(value, str):
                raise ConfigError(key, "must be a PBM/PGM path")
            continue
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise ConfigError(key, "must be true or false")
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"must be a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(key, "must be finite")
        if key not in _SIGNED and value <= 0:
            raise ConfigError(key, f"must be positive, got {value}")
        if key in _INTEGER:
            if int(value) != value:
                raise ConfigError(key, "must be an integer")
            out[key] = int(value)
        else:
            out[key] = float(value)
    return out


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    params: dict
    grid: GridSpec = GridSpec()
    seed: int = 0

    @classmethod
    def build(cls, scenario: str, params: dict | None = None, grid="standard",
              seed=0) -> "ScenarioConfig":
        if scenario not in sc.SCENARIO_NAMES:
            raise ConfigError("scenario", f"unknown scenario {scenario!r}; "
                              f"choose from {', '.join(sc.SCENARIO_NAMES)}")
        grid = grid if isinstance(grid, GridSpec) else parse_grid(grid)
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= MAX_SEED:
            raise ConfigError("seed", "must be an integer in [0, 2^64)")
        return cls(scenario, _validate(scenario, dict(params or {})), grid, seed)

    def hash_payload(self) -> dict:
        params = dict(self.params)
        if "object" in params:
            params["object"] = hashlib.sha256(_object_bytes(params["object"])).hexdigest()
        return {"scenario": self.scenario, "params": params, "grid": self.grid.as_text()}

    @property
    def config_hash(self) -> str:
        text = json.dumps(self.hash_payload(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be an object")
    unknown = set(data) - {"scenario", "params", "grid", "seed", "out"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown top-level field")
    if not isinstance(data.get("params", {}), dict):
        raise ConfigError("params", "must be an object")
    return data


# ---------------------------------------------------------------------------
# Dispatch


def _object_path(spec: str) -> Path:
    return fixture_path("umbc.pbm") if spec == FIXTURE_OBJECT else Path(spec)


def _object_bytes(spec: str) -> bytes:
    try:
        return _object_path(spec).read_bytes()
    except OSError as exc:
        raise ConfigError("object", f"cannot read bitmap {spec!r}: {exc.strerror}") from None


def load_object(spec: str):
    _object_bytes(spec)
    try:
        bitmap = read_pnm(_object_path(spec))
    except ValueError as exc:
        raise ConfigError("object", str(exc)) from None
    if not np.any(bitmap > 0):
        raise ConfigError("object", "bitmap has no transmitting pixels")
    return bitmap


def _scan(p, grid: GridSpec) -> TransverseGrid:
    if grid.preset is None:
        return TransverseGrid.centered(grid.n, grid.spacing)
    n = grid.scaled(p["n"])
    return TransverseGrid.centered(n, 2 * p["scan_half_width_mm"] * 1e-3 / n)


def _no_explicit(grid: GridSpec, scenario: str):
    if grid.preset is None:
        raise ConfigError("grid", f"explicit N:spacing grids do not apply to {scenario}")


def _run_classical(p, grid, seed):
    bitmap = load_object(p["object"])
    w, h = p["object_width_mm"] * 1e-3, p["object_height_mm"] * 1e-3
    s_o, s_i = p["object_distance_mm"] * 1e-3, p["image_distance_mm"] * 1e-3
    m = s_i / s_o
    if grid.preset is None:
        n, dx_o = grid.n, grid.spacing / m
    else:
        n = grid.scaled(p["n"])
        dx_o = 1.25 * max(w, h) / n
    obj = TransverseGrid.centered(n, dx_o, 2)
    mask = sc.bitmap_on_grid(bitmap, w, h, *obj.coords())
    fn = sc.classical_incoherent_image if p["mode"] == "incoherent" else sc.classical_coherent_image
    return fn(mask, obj, s_o, s_i, p["focal_length_mm"] * 1e-3, p["lens_radius_mm"] * 1e-3,
              p["wavelength_nm"] * 1e-9)


def _run_litho_fourier(p, grid, seed):
    return sc.lithography_fourier(p["separation_mm"] * 1e-3, p["slit_width_mm"] * 1e-3,
                                  p["focal_length_mm"] * 1e-3, p["wavelength_nm"] * 1e-9,
                                  p["mode"], p["object_distance_mm"] * 1e-3, _scan(p, grid))


def _run_litho_image(p, grid, seed):
    return sc.lithography_image(p["separation_mm"] * 1e-3, p["slit_width_mm"] * 1e-3,
                                p["object_distance_mm"] * 1e-3, p["image_distance_mm"] * 1e-3,
                                p["focal_length_mm"] * 1e-3, p["lens_radius_mm"] * 1e-3,
                                p["wavelength_nm"] * 1e-9, p["slit_height_mm"] * 1e-3,
                                _scan(p, grid), p["broadband"], p["DL_fs"] * 1e-15,
                                p["n_freq"])


def _run_ghost(p, grid, seed):
    bitmap = load_object(p["object"])
    d1 = p["source_to_lens_mm"] * 1e-3
    s_i = p["image_distance_mm"] * 1e-3
    if s_i <= d1:
        raise ConfigError("image_distance_mm", "unfolded image distance must exceed "
                          "source_to_lens_mm")
    kwargs = {}
    if grid.preset is None:
        n = grid.n
        s_o, f = p["object_distance_mm"] * 1e-3, p["focal_length_mm"] * 1e-3
        m_focus = 1 / (1 / f - 1 / s_o) / s_o
        kwargs = {"scan_spacing": grid.spacing, "object_spacing": grid.spacing / m_focus}
    else:
        n = grid.scaled(p["n"])
    return sc.ghost_image(bitmap, (p["object_width_mm"] * 1e-3, p["object_height_mm"] * 1e-3),
                          d1, p["object_distance_mm"] * 1e-3, p["focal_length_mm"] * 1e-3,
                          s_i - d1, p["wavelength_nm"] * 1e-9, n,
                          lens_half_width=p["lens_half_width_mm"] * 1e-3,
                          require_focus=not p["allow_defocus"], **kwargs)


def _run_popper(p, grid, seed):
    slit_b = None if p["slit_b_mm"] == "open" else p["slit_b_mm"] * 1e-3
    return sc.popper_run(p["slit_a_mm"] * 1e-3, slit_b, p["focal_length_mm"] * 1e-3,
                         p["object_distance_mm"] * 1e-3, p["b1_mm"] * 1e-3, p["b2_mm"] * 1e-3,
                         p["detector_offset_mm"] * 1e-3, p["wavelength_nm"] * 1e-9,
                         p["pump_waist_mm"] * 1e-3, p["lens_radius_mm"] * 1e-3, _scan(p, grid))


def _tau(half: float, n: int):
    return np.linspace(-half, half, n)


def _run_notch(p, grid, seed):
    _no_explicit(grid, "notch")
    DL = p["DL_fs"] * 1e-15
    tau = _tau(p["tau_range_DL"] * DL, grid.scaled(p["n_tau"]))
    return sc.fourier_spectroscopy_notch(CrystalParams.from_DL(DL), tau, p["wavelength_nm"] * 1e-9)


def _run_entropy(p, grid, seed):
    _no_explicit(grid, "entropy")
    return sc.entropy_scenario(p["DL_fs"] * 1e-15, p["n_bins"])


def build_spectrum(p):
    kind = p["spectrum"]
    if kind == "flat":
        return Flat(p["cutoff_rad_per_fs"] * 1e15)
    if kind == "gaussian":
        return Gaussian(p["sigma_rad_per_fs"] * 1e15)
    if kind == "sinc-type2":
        DL = p["DL_fs"] * 1e-15
        return SincTypeII(CrystalParams.from_DL(DL), cutoff=p["cutoff_lobes"] * 2 * np.pi / DL)
    if p["dprime_l_fs2"] == 0:
        raise ConfigError("dprime_l_fs2", "must be nonzero for sinc-type1")
    crystal = CrystalParams(L=1e-3, Dprime=p["dprime_l_fs2"] * 1e-30 / 1e-3)
    return SincTypeI(crystal, cutoff=p["cutoff_rad_per_fs"] * 1e15)


def _run_temporal(mixed: bool):
    def run(p, grid, seed):
        _no_explicit(grid, "temporal scenarios")
        tau = _tau(p["tau_range_fs"] * 1e-15, grid.scaled(p["n_tau"]))
        return sc.temporal_scenario(build_spectrum(p), tau, mixed=mixed)
    return run


def _run_epr(p, grid, seed):
    _no_explicit(grid, "epr-stats")
    return sc.epr_statistics(p["n_pairs"], seed, p["sigma"], p["large_factor"], p["sigma_sum"],
                             p["sigma_diff"], p["sigma_single"], p["x0"])


RUNNERS: dict[str, Callable] = {
    "classical-image": _run_classical,
    "lithography-fourier": _run_litho_fourier,
    "lithography-image": _run_litho_image,
    "ghost-image": _run_ghost,
    "popper": _run_popper,
    "notch": _run_notch,
    "entropy": _run_entropy,
    "temporal-g2": _run_temporal(False),
    "mixed-g2": _run_temporal(True),
    "epr-stats": _run_epr,
}


def run_config(cfg: ScenarioConfig) -> "sc.ScenarioResult":
    return RUNNERS[cfg.scenario](cfg.params, cfg.grid, cfg.seed)
