"""Command-line front end: ``biphoton list`` and ``biphoton run``.

Exit codes: 0 success, 2 configuration error, 3 physics/geometry error,
4 sampling violation (the message gives the minimum grid).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    DESCRIPTIONS,
    ScenarioConfig,
    load_config_file,
    parse_duration_fs,
    run_config,
)
from .errors import BiphotonError, ConfigError, SamplingViolation
from .scenarios import SCENARIO_NAMES, ScenarioResult
from .tables import write_csv, write_gnuplot

EXIT_OK, EXIT_CONFIG, EXIT_PHYSICS, EXIT_SAMPLING = 0, 2, 3, 4

# flag -> config parameter
_OVERRIDES = {
    "slit_a_mm": "slit_a_mm",
    "slit_b_mm": "slit_b_mm",
    "DL": "DL_fs",
    "lambda_nm": "wavelength_nm",
    "f_mm": "focal_length_mm",
    "so_mm": "object_distance_mm",
    "si_mm": "image_distance_mm",
    "object": "object",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError("arguments", message)


def _slit_b(text: str):
    return "open" if text == "open" else _number("slit_b_mm")(text)


def _number(field):
    def parse(text):
        try:
            return float(text)
        except ValueError:
            raise ConfigError(field, f"expected a number, got {text!r}") from None
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="biphoton", description="Two-photon correlation scenarios.")
    parser.add_argument("--version", action="version", version=f"biphoton {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("list", help="list scenario identifiers")
    run = sub.add_parser("run", help="run a scenario and write CSV/JSON/gnuplot outputs")
    run.add_argument("scenario", nargs="?", help="scenario identifier (or set it in --config)")
    run.add_argument("--config", help="JSON config file")
    run.add_argument("--out", help="output directory (default: current directory)")
    run.add_argument("--seed", help="random seed (unsigned 64-bit)")
    run.add_argument("--grid", help="coarse|standard|fine or N:spacing_um")
    run.add_argument("--object", help="PBM/PGM object bitmap")
    run.add_argument("--slit-a-mm", dest="slit_a_mm", type=_number("slit_a_mm"))
    run.add_argument("--slit-b-mm", "--slit-b", dest="slit_b_mm", type=_slit_b,
                     help="slit B width in mm, or 'open'")
    run.add_argument("--DL", help="crystal D*L, e.g. 1ps or 800fs")
    run.add_argument("--lambda-nm", dest="lambda_nm", type=_number("wavelength_nm"))
    run.add_argument("--f-mm", dest="f_mm", type=_number("focal_length_mm"))
    run.add_argument("--so-mm", dest="so_mm", type=_number("object_distance_mm"))
    run.add_argument("--si-mm", dest="si_mm", type=_number("image_distance_mm"))
    return parser


def list_scenarios() -> str:
    return "\n".join(f"{name:<20s} {DESCRIPTIONS[name]}" for name in SCENARIO_NAMES) + "\n"


def _parse_seed(value) -> int:
    try:
        seed = int(str(value), 10)
    except ValueError:
        raise ConfigError("seed", f"expected an unsigned integer, got {value!r}") from None
    return seed


def config_from_args(args) -> tuple[ScenarioConfig, Path]:
    data = load_config_file(args.config) if args.config else {}
    scenario = args.scenario or data.get("scenario")
    if scenario is None:
        raise ConfigError("scenario", "give a scenario name or a config with 'scenario'")
    if args.scenario and data.get("scenario") not in (None, args.scenario):
        raise ConfigError("scenario", f"command line says {args.scenario!r} but the config "
                          f"says {data['scenario']!r}")
    params = dict(data.get("params", {}))
    for flag, key in _OVERRIDES.items():
        value = getattr(args, flag)
        if value is None:
            continue
        if key == "DL_fs":
            value = parse_duration_fs(value)
        params[key] = value
    seed = _parse_seed(args.seed) if args.seed is not None else data.get("seed", 0)
    grid = args.grid or data.get("grid", "standard")
    out = Path(args.out or data.get("out") or ".")
    return ScenarioConfig.build(scenario, params, grid, seed), out


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_outputs(result: ScenarioResult, cfg: ScenarioConfig, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    meta = {"tool": f"biphoton {__version__}", "config_hash": cfg.config_hash,
            "seed": cfg.seed, "scenario": cfg.scenario, "grid": cfg.grid.as_text()}
    table = type(result.table)(result.table.columns, result.table.data, meta)
    paths = [out / f"{cfg.scenario}.csv", out / f"{cfg.scenario}-summary.json",
             out / f"{cfg.scenario}.gp.dat"]
    write_csv(table, paths[0])
    doc = {**meta, "config": cfg.params, "params": result.params, "summary": result.summary}
    paths[1].write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
    write_gnuplot(table, paths[2], result.block)
    return paths


def _thread_limit():
    raw = os.environ.get("BIPHOTON_THREADS")
    if not raw:
        return nullcontext()
    try:
        n = int(raw)
        if n < 1:
            raise ValueError
    except ValueError:
        raise ConfigError("BIPHOTON_THREADS", f"expected a positive integer, got {raw!r}") from None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "list":
            sys.stdout.write(list_scenarios())
            return EXIT_OK
        cfg, out = config_from_args(args)
        with _thread_limit():
            result = run_config(cfg)
        for path in write_outputs(result, cfg, out):
            print(path)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SamplingViolation as exc:
        print(f"sampling violation: {exc}", file=sys.stderr)
        return EXIT_SAMPLING
    except (BiphotonError, ValueError) as exc:
        print(f"physics error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS


if __name__ == "__main__":
    sys.exit(main())
