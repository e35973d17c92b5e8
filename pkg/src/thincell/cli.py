"""Command-line interface: ``thincell <command> [options]``.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

from . import __version__
from .angular import transition_strength
from .atomic_model import TWO_PI_MHZ
from .confinement import (
    RB85_MASS, TAU_4D52, TAU_5P32, CellConfig, max_transit_velocity, resonance_velocity,
    wall_rate,
)
from .config import DEFAULT_PROFILE, REQUIRED, RunConfig, key_reference, load_config, to_document
from .errors import ConfigError, PointFailure, SolverError, ThinCellError
from .observables import reconstruct_populations, sweep, write_populations_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
REFERENCE_TOKENS = {"ref", "reference"}


def _overrides(args) -> dict:
    out = {}
    if getattr(args, "filter_mode", None):
        out.setdefault("sweep", {})["filter_mode"] = args.filter_mode
    if getattr(args, "trace_mode", None):
        out.setdefault("levels", {})["mode"] = args.trace_mode
    return out


def _load(args) -> RunConfig:
    return load_config(args.config, profile=args.profile, overrides=_overrides(args))


def _write_manifest(out: Path, run: RunConfig, command: str, outputs, diagnostics) -> Path:
    manifest = {
        "tool": "thincell",
        "version": __version__,
        "command": command,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": to_document(run),
        "outputs": [str(p) for p in outputs],
        "diagnostics": diagnostics,
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def cmd_validate(args) -> int:
    run = _load(args)
    mhz = TWO_PI_MHZ
    cell = run.cell
    rows = [
        ("profile", run.document.get("profile")),
        ("mode", run.sweep.mode.value),
        ("delta2_mhz", run.scheme.delta2 / mhz),
        ("delta3_mhz", run.scheme.delta3 / mhz),
        ("omega_p_mhz", run.fields.omega_p / mhz),
        ("omega_c_45_mhz", run.fields.omega_c_45 / mhz),
        ("omega_c_46_mhz", run.fields.omega_c_46 / mhz),
        ("omega_c_47_mhz", run.fields.omega_c_47 / mhz),
        ("thickness_um", cell.thickness * 1e6),
        ("temperature_k", cell.temperature),
        ("u_m_per_s", cell.u),
        ("gamma_L_at_u_per_s", wall_rate(cell, cell.u)),
        ("reference_thickness_um", run.reference_cell.thickness * 1e6),
        ("reference_u_m_per_s", run.reference_cell.u),
        ("delta_c_points", run.sweep.delta_c_range[2]),
        ("velocity_points", run.sweep.velocity_grid[0]),
        ("filter_mode", run.sweep.filter_mode.value),
    ]
    for key, value in rows:
        print(f"{key} = {value:.6g}" if isinstance(value, float) else f"{key} = {value}")
    print("config OK")
    return EXIT_OK


def cmd_keys(args) -> int:
    required = {f"{s}.{k}" for s, k in REQUIRED}
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["key", "default"])
    for key, value in key_reference(args.profile or DEFAULT_PROFILE):
        if key in required and value is None:
            w.writerow([key, "required"])
        elif value is None:
            w.writerow([key, "optional"])
        else:
            w.writerow([key, value if isinstance(value, str) else json.dumps(value)])
    return EXIT_OK


def cmd_sweep(args) -> int:
    run = _load(args)
    cell = run.reference_cell if args.reference else run.cell
    config = run.sweep_for(cell)
    spectrum = sweep(config, threads=args.threads).normalized(args.normalize)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "spectrum.csv"
    meta_path = out / "spectrum.json"
    spectrum.write_csv(csv_path)
    meta = dict(spectrum.metadata, resolved=to_document(run),
                cell="reference" if args.reference else "thin")
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    _write_manifest(out, run, "sweep", [csv_path, meta_path], {
        "delta_c_points": len(spectrum.delta_c),
        "velocity_points": spectrum.metadata["velocity_points"],
        "max_residual": spectrum.metadata["max_residual"],
    })
    print(csv_path)
    return EXIT_OK


def _parse_thickness(token: str, run: RunConfig):
    if token.lower() in REFERENCE_TOKENS:
        return run.reference_cell
    try:
        value = float(token)
    except ValueError:
        raise ConfigError(f"thickness {token!r} is neither a number (um) nor 'ref'") from None
    if not value > 0:
        raise ConfigError(f"thickness must be > 0 um, got {token}")
    return value * 1e-6


def cmd_populations(args) -> int:
    run = _load(args)
    cells = [_parse_thickness(t, run) for t in args.thicknesses]
    records = reconstruct_populations(run.sweep, cells)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "populations.csv"
    write_populations_csv(records, path)
    _write_manifest(out, run, "populations", [path], {
        "velocity_points": run.sweep.velocity_grid[0],
        "thicknesses_um": [r.thickness * 1e6 for r in records],
    })
    print(path)
    return EXIT_OK


def cmd_rates(args) -> int:
    cell = CellConfig(args.thickness_um * 1e-6, args.temp_c + 273.15, RB85_MASS,
                      two_pi_convention=args.two_pi)
    u = cell.u
    v_res = resonance_velocity(120.7 * TWO_PI_MHZ, 2 * math.pi / 780.24e-9)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["thickness_um", "temperature_c", "u_m_s", "gamma_L_s", "v_max_5p32_m_s",
                "v_max_4d52_m_s", "v_resonance_m_s"])
    w.writerow([repr(args.thickness_um), repr(args.temp_c), repr(u), repr(wall_rate(cell, u)),
                repr(max_transit_velocity(cell.thickness, TAU_5P32)),
                repr(max_transit_velocity(cell.thickness, TAU_4D52)), repr(v_res)])
    return EXIT_OK


def _half_int(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if value < 0 or (2 * value).denominator != 1:
        raise argparse.ArgumentTypeError(f"{text!r} is not a non-negative half-integer")
    return value


def cmd_strength(args) -> int:
    if args.Fprime is not None:
        targets = [args.Fprime]
    else:
        lo = abs(args.Jprime - args.I)
        targets = [lo + k for k in range(int(args.Jprime + args.I - lo) + 1)]
        targets = [f for f in targets if abs(f - args.F) <= 1]
    rows = [transition_strength(args.F, fp, args.J, args.Jprime, args.I) for fp in targets]
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["F", "Fprime", "S"])
    for fp, s in zip(targets, rows):
        w.writerow([_fmt_half(args.F), _fmt_half(fp), repr(s.value)])
    return EXIT_OK


def _fmt_half(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thincell", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"thincell {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("--config", required=True, help="JSON configuration file")
        sp.add_argument("--profile", default=None,
                        help=f"built-in defaults to start from (default {DEFAULT_PROFILE})")
        sp.add_argument("--trace-mode", choices=["conserving", "verbatim"], default=None)
        sp.add_argument("--filter-mode", choices=["rate", "cutoff"], default=None)

    def with_output(sp):
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: all cores)")

    sp = sub.add_parser("validate", help="check a config and print derived values")
    with_config(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("keys", help="list every config key with its profile default")
    sp.add_argument("--profile", default=None)
    sp.set_defaults(func=cmd_keys)

    sp = sub.add_parser("sweep", help="DROP/FDROP/fluorescence spectrum over the coupling detuning")
    with_config(sp)
    with_output(sp)
    sp.add_argument("--normalize", choices=["none", "peak"], default="none")
    sp.add_argument("--reference", action="store_true", help="use the reference cell")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("populations", help="velocity-averaged populations per thickness")
    with_config(sp)
    with_output(sp)
    sp.add_argument("thicknesses", nargs="+", help="thicknesses in um, or 'ref'")
    sp.set_defaults(func=cmd_populations)

    sp = sub.add_parser("rates", help="wall rate and velocity limits of a cell")
    sp.add_argument("--thickness-um", type=float, required=True)
    sp.add_argument("--temp-c", type=float, required=True)
    sp.add_argument("--two-pi", action="store_true", help="include 2 pi in the wall rate")
    sp.set_defaults(func=cmd_rates)

    sp = sub.add_parser("strength", help="hyperfine transition strength factors")
    sp.add_argument("--F", type=_half_int, required=True)
    sp.add_argument("--Fprime", type=_half_int, default=None)
    sp.add_argument("--J", type=_half_int, default=Fraction(3, 2))
    sp.add_argument("--Jprime", type=_half_int, default=Fraction(5, 2))
    sp.add_argument("--I", type=_half_int, default=Fraction(5, 2))
    sp.set_defaults(func=cmd_strength)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", None) is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except PointFailure as exc:
        where = ""
        if exc.delta_c is not None:
            where = f" (delta_c = {exc.delta_c / TWO_PI_MHZ:.6g} MHz, v = {exc.velocity:.6g} m/s)"
        print(f"numerical failure: {exc}{where}", file=sys.stderr)
        return EXIT_NUMERIC
    except SolverError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ThinCellError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
