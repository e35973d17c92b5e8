import json
import math

import pytest

from conftest import MHZ
from thincell.config import (
    DEFAULT_PROFILE, available_profiles, load_config, load_profile, resolve, to_document,
)
from thincell.errors import ConfigError
from thincell.observables import FilterMode

SPLITTINGS = {"levels": {"delta2_mhz": 67.5, "delta3_mhz": 81.5}}


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc, indent=2))
    return p


def test_builtin_profile_present():
    assert DEFAULT_PROFILE in available_profiles()
    prof = load_profile()
    assert "delta2_mhz" not in prof["levels"]


def test_mhz_keys_convert_to_rad_per_s():
    run = resolve(SPLITTINGS)
    assert run.scheme.delta2 == 67.5 * MHZ
    assert run.fields.omega_c_47 == 20 * MHZ
    assert run.scheme.gamma[0] == 6.06 * MHZ
    assert run.cell.temperature == pytest.approx(393.15)
    assert run.cell.u == pytest.approx(277, abs=1)
    assert run.reference_cell.thickness == pytest.approx(0.075)
    assert run.sweep.delta_c_range == (-300 * MHZ, 150 * MHZ, 801)


def test_user_keys_override_profile():
    run = resolve({"levels": dict(SPLITTINGS["levels"], a=0.2),
                   "sweep": {"filter_mode": "cutoff"}, "cell": {"thickness_um": 5}})
    assert run.scheme.a == 0.2 and run.scheme.b == 0.5
    assert run.sweep.filter_mode is FilterMode.CUTOFF
    assert run.cell.thickness == pytest.approx(5e-6)


def test_round_trip():
    run = resolve({"levels": dict(SPLITTINGS["levels"], gamma12_mhz=0.1234567),
                   "fields": {"omega_c_lines_mhz": [1.0, 2.0, 3.0]}})
    again = resolve(json.loads(json.dumps(to_document(run))))
    assert again == run
    assert to_document(again) == to_document(run)


@pytest.mark.parametrize("key", ["delta2_mhz", "delta3_mhz"])
def test_required_splittings(key):
    levels = dict(SPLITTINGS["levels"])
    del levels[key]
    with pytest.raises(ConfigError) as info:
        resolve({"levels": levels})
    assert info.value.key == f"levels.{key}"
    assert "required" in str(info.value)


@pytest.mark.parametrize("section,key,value,fragment", [
    ("levels", "a", 1.5, "out of range"),
    ("levels", "gamma_mhz", [1, 2], "list of 5"),
    ("levels", "mode", "lossy", "expected one of"),
    ("fields", "omega_p_mhz", "four", "finite number"),
    ("cell", "thickness_um", 0, "> 0"),
    ("cell", "two_pi_convention", 1, "true or false"),
    ("sweep", "delta_c_points", 1, "integer >= 2"),
    ("sweep", "fdrop_levels", [3, 9], "1..7"),
    ("sweep", "velocity_span", 2.0, "out of range"),
    ("reference", "temperature_c", -300, "out of range"),
    ("cell", "thikness_um", 1, "unknown key"),
])
def test_key_precise_errors(tmp_path, section, key, value, fragment):
    doc = json.loads(json.dumps(SPLITTINGS))
    doc.setdefault(section, {})[key] = value
    path = write(tmp_path, doc)
    with pytest.raises(ConfigError) as info:
        load_config(path)
    msg = str(info.value)
    assert f"{section}.{key}" in msg and fragment in msg
    assert info.value.line is not None and f":{info.value.line}:" in msg


def test_invalid_json_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "levels": {\n    "delta2_mhz": 67.5,,\n  }\n}')
    with pytest.raises(ConfigError) as info:
        load_config(p)
    assert info.value.line == 3


def test_unknown_section_and_profile(tmp_path):
    with pytest.raises(ConfigError):
        resolve(dict(SPLITTINGS, lasers={}))
    with pytest.raises(ConfigError):
        resolve(SPLITTINGS, profile="nope")


def test_overrides_apply_after_file(tmp_path):
    path = write(tmp_path, SPLITTINGS)
    run = load_config(path, overrides={"levels": {"mode": "verbatim"}})
    assert run.sweep.mode.value == "verbatim"
    assert run.scheme.delta2 == 67.5 * MHZ


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")
