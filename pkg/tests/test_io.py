import configparser

import numpy as np
import pytest

from ablattice.config import load_config, parse_config, parse_region
from ablattice.errors import ConfigError, FormatError
from ablattice.fields import extract_invariants, random_config
from ablattice.holonomy import solenoid_config
from ablattice.lattice import build_lattice
from ablattice.serialization import (
    MAGIC,
    config_from_bytes,
    config_from_json,
    config_to_bytes,
    config_to_json,
    from_bytes,
    invariants_from_json,
    invariants_to_bytes,
    invariants_to_json,
)


def sample_config():
    lat = build_lattice(9, 7, 0.5, "open")
    c = random_config(lat, seed=99)
    c.mask[3, 4] = False
    c.psi[3, 4] = 0.0
    return c


def test_json_round_trip_field():
    c = sample_config()
    back = config_from_json(config_to_json(c))
    assert back.lattice == c.lattice
    assert np.array_equal(back.psi, c.psi)
    assert np.array_equal(back.ah, c.ah)
    assert np.array_equal(back.av, c.av)
    assert np.array_equal(back.mask, c.mask)


def test_binary_round_trip_bit_identical():
    c = sample_config()
    raw = config_to_bytes(c)
    assert raw[:8] == MAGIC
    back = config_from_bytes(raw)
    assert config_to_bytes(back) == raw
    assert np.array_equal(back.psi, c.psi)


def test_cross_format_identical():
    c = sample_config()
    via_binary = config_from_bytes(config_to_bytes(c))
    assert config_to_json(via_binary) == config_to_json(c)


def test_invariants_round_trips():
    lat = build_lattice(8, 8, 1.0, "open")
    inv = extract_invariants(random_config(lat, seed=5))
    back = invariants_from_json(invariants_to_json(inv))
    assert np.array_equal(back.rho, inv.rho)
    assert np.array_equal(back.dh, inv.dh)
    back2 = from_bytes(invariants_to_bytes(inv))
    assert np.array_equal(back2.dv, inv.dv)


def test_truncated_binary_reports_offset():
    raw = config_to_bytes(sample_config())
    with pytest.raises(FormatError) as excinfo:
        config_from_bytes(raw[: len(raw) // 2])
    assert excinfo.value.offset is not None


def test_bad_magic_rejected():
    raw = b"NOTMAGIC" + config_to_bytes(sample_config())[8:]
    with pytest.raises(FormatError):
        config_from_bytes(raw)


def test_bad_version_rejected():
    raw = bytearray(config_to_bytes(sample_config()))
    raw[8] = 99
    with pytest.raises(FormatError):
        config_from_bytes(bytes(raw))


def test_malformed_json_rejected():
    with pytest.raises(FormatError):
        config_from_json("{not json")
    with pytest.raises(FormatError):
        config_from_json('{"format": "something-else"}')


CONFIG_TEXT = """
[lattice]
nx = 24
ny = 24
spacing = 1.0
boundary = open

[flux]
center = 11.5, 11.5
radius = 2.5
total_flux = 1.3

[regions]
left = rect(0, 0, 13, 23)
holey = full - rect(10, 10, 13, 13)

[dynamics]
mass = 1.0
dt = 0.1
steps = 50

[output]
directory = out
formats = json, csv
seed = 42
"""


def write_config(tmp_path, text):
    p = tmp_path / "exp.ini"
    p.write_text(text)
    return str(p)


def test_config_parses_blocks(tmp_path):
    cfg = load_config(write_config(tmp_path, CONFIG_TEXT))
    assert cfg.lattice.nx == 24
    assert cfg.flux.total_flux == pytest.approx(1.3)
    assert len(cfg.regions["left"]) == 14 * 24
    assert len(cfg.regions["holey"]) == 24 * 24 - 16
    assert cfg.dynamics.steps == 50
    assert cfg.seed == 42
    # the parsed flux spec actually builds
    solenoid_config(cfg.lattice, cfg.flux)


def test_unknown_key_rejected(tmp_path):
    bad = CONFIG_TEXT.replace("spacing = 1.0", "spacin = 1.0")
    with pytest.raises(ConfigError, match="spacin"):
        load_config(write_config(tmp_path, bad))


def test_unknown_section_rejected(tmp_path):
    with pytest.raises(ConfigError, match="sweeps"):
        load_config(write_config(tmp_path, CONFIG_TEXT + "\n[sweeps]\nx = 1\n"))


def test_flux_quanta_converts(tmp_path):
    text = CONFIG_TEXT.replace("total_flux = 1.3", "flux_quanta = 0.5")
    cfg = load_config(write_config(tmp_path, text))
    assert cfg.flux.total_flux == pytest.approx(np.pi)


def test_both_flux_keys_rejected(tmp_path):
    text = CONFIG_TEXT.replace("total_flux = 1.3", "total_flux = 1.3\nflux_quanta = 1")
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path, text))


def test_region_expression_errors():
    lat = build_lattice(8, 8, 1.0, "open")
    with pytest.raises(ConfigError):
        parse_region(lat, "rect(0, 0, 20, 20)", "oob")
    with pytest.raises(ConfigError):
        parse_region(lat, "rect(0,0,2,2) +", "dangling")
    with pytest.raises(ConfigError):
        parse_region(lat, "circle(1,1,2)", "unknown")


def test_sweep_flux_list(tmp_path):
    text = CONFIG_TEXT + "\n[sweep]\nflux_quanta = 0, 0.25, 0.5\n"
    cfg = load_config(write_config(tmp_path, text))
    assert cfg.sweep_fluxes == pytest.approx([0.0, np.pi / 2, np.pi])


def test_missing_file_is_config_error():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/exp.ini")


def test_parse_config_accepts_empty():
    cfg = parse_config(configparser.ConfigParser(interpolation=None))
    assert cfg.lattice is None and cfg.flux is None
