import json

import pytest

import stringflow as sf
from stringflow.errors import ConfigError


def test_default_config_complete():
    cfg = sf.default_config()
    assert cfg["grid"]["nx"] == 64
    assert cfg["target"]["kind"] == "sphere"
    assert cfg["flow"]["cfl"] == 0.2


def test_unknown_section_and_key_rejected():
    with pytest.raises(ConfigError, match="unknown config section"):
        sf.validate_config({"gird": {}})
    with pytest.raises(ConfigError, match="unknown key grid.nz"):
        sf.validate_config({"grid": {"nz": 3}})


def test_type_errors_report_path():
    with pytest.raises(ConfigError, match="grid.nx"):
        sf.validate_config({"grid": {"nx": "64"}})
    with pytest.raises(ConfigError, match="flow.monitor"):
        sf.validate_config({"flow": {"monitor": 3}})
    # bool is not accepted where int is expected
    with pytest.raises(ConfigError, match="grid.nx"):
        sf.validate_config({"grid": {"nx": True}})


def test_int_promoted_to_float():
    cfg = sf.validate_config({"flow": {"t_end": 2}})
    assert isinstance(cfg["flow"]["t_end"], float)


def test_bad_initial_kind():
    with pytest.raises(ConfigError, match="initial.kind"):
        sf.validate_config({"initial": {"kind": "vortex"}})


def test_all_presets_validate_and_build():
    for name in sf.PRESETS:
        cfg = sf.preset_config(name)
        grid, target, fields, u0, fcfg = sf.build_objects(cfg)
        assert u0.values.shape == (grid.nx, grid.ny, target.q)
        fcfg.validate(grid)


def test_unknown_preset():
    with pytest.raises(ConfigError):
        sf.preset_config("nope")


def test_config_file_roundtrip(tmp_path):
    cfg = sf.preset_config("gap_smallness")
    p = tmp_path / "c.json"
    sf.save_config(cfg, str(p))
    back = sf.load_config(str(p))
    assert back == cfg


def test_invalid_json_rejected(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{nope")
    with pytest.raises(ConfigError, match="invalid JSON"):
        sf.load_config(str(p))


def test_build_objects_respects_fields():
    cfg = sf.preset_config("bfield_s3")
    _, _, fields, _, _ = sf.build_objects(cfg)
    assert not fields.b.is_zero
    assert not fields.V.is_zero
    assert json.dumps(cfg)  # serializable
