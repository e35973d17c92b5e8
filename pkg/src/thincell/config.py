"""JSON configuration files and the built-in parameter profile.

A configuration is a JSON object with the sections ``levels``, ``fields``,
``cell``, ``sweep`` and ``reference``. Frequencies are given in MHz under
``*_mhz`` keys and converted to rad/s with a factor 2 pi 1e6. Every key of the
selected profile can be overridden; ``levels.delta2_mhz`` and
``levels.delta3_mhz`` have no default and must be supplied.
"""

from __future__ import annotations

import copy
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from scipy import constants

from .atomic_model import TWO_PI_MHZ, FieldConfig, LevelScheme, RelaxationMode
from .confinement import CellConfig
from .errors import ConfigError, ThinCellError
from .observables import FilterMode, SweepConfig

DEFAULT_PROFILE = "paper-2024-rb85"
REQUIRED = (("levels", "delta2_mhz"), ("levels", "delta3_mhz"))
ZERO_C = 273.15

_KEYS = {
    "levels": {"omega_hfs_mhz", "delta1_mhz", "delta2_mhz", "delta3_mhz", "gamma_mhz",
               "gamma12_mhz", "gamma_self_mhz", "a", "b", "c", "mode"},
    "fields": {"omega_p_mhz", "omega_c_mhz", "omega_c_lines_mhz", "delta_p_mhz", "delta_c_mhz",
               "probe_wavelength_nm", "coupling_wavelength_nm", "counter_propagating"},
    "cell": {"thickness_um", "temperature_c", "atomic_mass_u", "two_pi_convention",
             "wall_floor"},
    "sweep": {"delta_c_min_mhz", "delta_c_max_mhz", "delta_c_points", "velocity_points",
              "velocity_span", "quadrature", "filter_mode", "fdrop_levels",
              "fluorescence_levels"},
    "reference": {"thickness_um", "temperature_c"},
}


def available_profiles():
    root = resources.files("thincell") / "profiles"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_profile(name: str = DEFAULT_PROFILE) -> dict:
    if name not in available_profiles():
        raise ConfigError(f"unknown profile {name!r}; available: {', '.join(available_profiles())}",
                          key="profile")
    text = (resources.files("thincell") / "profiles" / f"{name}.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration. ``document`` is the merged JSON it came from."""

    scheme: LevelScheme
    fields: FieldConfig
    cell: CellConfig
    reference_cell: CellConfig
    sweep: SweepConfig
    document: dict = field(compare=False, repr=False)

    def sweep_for(self, cell: CellConfig) -> SweepConfig:
        return self.sweep.replace(cell=cell)


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for section, values in override.items():
        if section == "profile":
            continue
        if section not in _KEYS:
            raise ConfigError(f"unknown section {section!r}", key=section)
        if not isinstance(values, dict):
            raise ConfigError(f"section {section!r} must be an object", key=section)
        out.setdefault(section, {}).update(copy.deepcopy(values))
    return out


class _Reader:
    """Typed access to one section with key-precise error messages."""

    def __init__(self, doc, section, locate):
        self.values = doc.get(section, {})
        self.section = section
        self.locate = locate
        unknown = sorted(set(self.values) - _KEYS[section])
        if unknown:
            self.fail(unknown[0], "unknown key")

    def fail(self, key, why):
        path = f"{self.section}.{key}"
        raise ConfigError(f"{path}: {why}", key=path, line=self.locate(key))

    def get(self, key):
        if key not in self.values:
            if (self.section, key) in REQUIRED:
                self.fail(key, "required input with no default (4D5/2 hyperfine spacing)")
            self.fail(key, "missing (not set by the profile either)")
        return self.values[key]

    def number(self, key, low=None, high=None, positive=False):
        v = self.get(key)
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.fail(key, f"expected a finite number, got {v!r}")
        if positive and not v > 0:
            self.fail(key, f"must be > 0, got {v!r}")
        if low is not None and v < low or high is not None and v > high:
            self.fail(key, f"out of range [{low}, {high}], got {v!r}")
        return float(v)

    def integer(self, key, low):
        v = self.get(key)
        if isinstance(v, bool) or not isinstance(v, int) or v < low:
            self.fail(key, f"expected an integer >= {low}, got {v!r}")
        return v

    def flag(self, key):
        v = self.get(key)
        if not isinstance(v, bool):
            self.fail(key, f"expected true or false, got {v!r}")
        return v

    def choice(self, key, options):
        v = self.get(key)
        if v not in options:
            self.fail(key, f"expected one of {sorted(options)}, got {v!r}")
        return v

    def numbers(self, key, length=None, low=None, integer=False):
        v = self.get(key)
        ok = isinstance(v, list) and all(
            isinstance(x, int if integer else (int, float)) and not isinstance(x, bool) for x in v)
        if not ok or (length is not None and len(v) != length) or not v:
            self.fail(key, f"expected a list of {length or 'one or more'} "
                           f"{'integers' if integer else 'numbers'}, got {v!r}")
        if low is not None and min(v) < low:
            self.fail(key, f"entries must be >= {low}, got {v!r}")
        return v


def _locator(text):
    if text is None:
        return lambda key: None
    lines = text.splitlines()

    def find(key):
        pat = re.compile(r'"%s"\s*:' % re.escape(key))
        for n, line in enumerate(lines, 1):
            if pat.search(line):
                return n
        return None

    return find


def parse_document(doc: dict, text: str | None = None) -> RunConfig:
    """Resolve a merged document into model objects."""
    locate = _locator(text)
    mhz = TWO_PI_MHZ

    lv = _Reader(doc, "levels", locate)
    try:
        mode = RelaxationMode(lv.choice("mode", {m.value for m in RelaxationMode}))
        scheme = LevelScheme(
            delta2=lv.number("delta2_mhz", positive=True) * mhz,
            delta3=lv.number("delta3_mhz", positive=True) * mhz,
            omega_hfs=lv.number("omega_hfs_mhz", positive=True) * mhz,
            delta1=lv.number("delta1_mhz", positive=True) * mhz,
            gamma=tuple(g * mhz for g in lv.numbers("gamma_mhz", 5, low=0)),
            gamma12=lv.number("gamma12_mhz", low=0) * mhz,
            gamma_self=lv.number("gamma_self_mhz", low=0) * mhz,
            a=lv.number("a", 0, 1), b=lv.number("b", 0, 1), c=lv.number("c", 0, 1),
        )
    except ThinCellError:
        raise
    except ValueError as exc:
        raise ConfigError(f"levels: {exc}", key="levels") from exc

    fd = _Reader(doc, "fields", locate)
    lines = None
    if "omega_c_lines_mhz" in fd.values and fd.values["omega_c_lines_mhz"] is not None:
        lines = tuple(o * mhz for o in fd.numbers("omega_c_lines_mhz", 3, low=0))
    fields = FieldConfig(
        omega_p=fd.number("omega_p_mhz", low=0) * mhz,
        omega_c_base=fd.number("omega_c_mhz", low=0) * mhz,
        delta_p=fd.number("delta_p_mhz") * mhz,
        delta_c=fd.number("delta_c_mhz") * mhz,
        k_p=2 * math.pi / (fd.number("probe_wavelength_nm", positive=True) * 1e-9),
        k_c=2 * math.pi / (fd.number("coupling_wavelength_nm", positive=True) * 1e-9),
        counter_propagating=fd.flag("counter_propagating"),
        omega_c=lines,
    )

    cl = _Reader(doc, "cell", locate)
    mass = cl.number("atomic_mass_u", positive=True) * constants.atomic_mass
    cell = CellConfig(
        thickness=cl.number("thickness_um", positive=True) * 1e-6,
        temperature=cl.number("temperature_c", low=-ZERO_C) + ZERO_C,
        atomic_mass=mass,
        two_pi_convention=cl.flag("two_pi_convention"),
        wall_floor=cl.number("wall_floor", low=0),
    )
    if not cell.temperature > 0:
        cl.fail("temperature_c", "must lie above absolute zero")

    rf = _Reader(doc, "reference", locate)
    reference = cell.replace(
        thickness=rf.number("thickness_um", positive=True) * 1e-6,
        temperature=rf.number("temperature_c", low=-ZERO_C) + ZERO_C,
    )
    if not reference.temperature > 0:
        rf.fail("temperature_c", "must lie above absolute zero")

    sw = _Reader(doc, "sweep", locate)
    lo = sw.number("delta_c_min_mhz")
    hi = sw.number("delta_c_max_mhz")
    if not lo < hi:
        sw.fail("delta_c_max_mhz", f"must exceed delta_c_min_mhz ({lo})")
    span = sw.number("velocity_span", low=3)
    levels_ok = set(range(1, 8))
    fdrop = sw.numbers("fdrop_levels", integer=True)
    fluo = sw.numbers("fluorescence_levels", integer=True)
    for key, vals in (("fdrop_levels", fdrop), ("fluorescence_levels", fluo)):
        if not set(vals) <= levels_ok:
            sw.fail(key, f"levels must lie in 1..7, got {vals!r}")
    sweep = SweepConfig(
        scheme=scheme, fields=fields, cell=cell,
        delta_c_range=(lo * mhz, hi * mhz, sw.integer("delta_c_points", 2)),
        velocity_grid=(sw.integer("velocity_points", 3), span),
        quadrature=sw.choice("quadrature", {"gauss", "trapezoid"}),
        filter_mode=FilterMode(sw.choice("filter_mode", {m.value for m in FilterMode})),
        mode=mode,
        fdrop_levels=tuple(fdrop),
        fluorescence_levels=tuple(fluo),
    )
    return RunConfig(scheme, fields, cell, reference, sweep, copy.deepcopy(doc))


def resolve(user: dict | None = None, profile: str | None = None, text: str | None = None) -> RunConfig:
    """Merge ``user`` over a profile and resolve it.

    The profile is taken from the argument, then from the document's own
    ``profile`` key, then the default.
    """
    user = user or {}
    if not isinstance(user, dict):
        raise ConfigError("configuration must be a JSON object")
    name = profile or user.get("profile") or DEFAULT_PROFILE
    doc = _merge(load_profile(name), user)
    doc["profile"] = name
    return parse_document(doc, text)


def load_config(path, profile: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Read, merge and validate a configuration file.

    ``overrides`` is a document fragment applied after the file (used by the
    command-line flags).
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        user = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})",
                          line=exc.lineno) from exc
    if not isinstance(user, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    if overrides:
        user = _merge(user, overrides)
    try:
        return resolve(user, profile, text)
    except ConfigError as exc:
        if exc.line is not None:
            raise ConfigError(f"{path}:{exc.line}: {exc}", key=exc.key, line=exc.line) from None
        raise ConfigError(f"{path}: {exc}", key=exc.key) from None


def key_reference(profile: str = DEFAULT_PROFILE):
    """``(section.key, default)`` for every accepted key; ``None`` marks a required key."""
    doc = load_profile(profile)
    rows = []
    for section in _KEYS:
        for key in sorted(_KEYS[section]):
            rows.append((f"{section}.{key}", doc.get(section, {}).get(key)))
    return rows


def to_document(run: RunConfig) -> dict:
    """Fully resolved document; ``resolve(to_document(run))`` reproduces ``run``."""
    return copy.deepcopy(run.document)
