import json
from pathlib import Path

import pytest

from lifinv.config import RunConfig, build_manifest, dump_config, load_config, parse_config_text, write_manifest
from lifinv.errors import ConfigError


def test_defaults_validate():
    cfg = load_config(None, env={})
    assert cfg.threshold == 0.025
    assert cfg.n_lower == 31
    assert cfg.bands == ((0, 4), (1, 5), (2, 8))
    assert cfg.reduced_mass_amu == pytest.approx(6.48, abs=0.01)
    assert all(v == "default" for v in cfg.sources.values())


def test_parse_values():
    d = parse_config_text("""
        grid = 3.0, 18.0, 1501   # trailing comment
        bands = 0:1 3:2
        regions = 1, 4
        align = no
        noise_levels = 0.01 0.2
        mass_amu = 7.5
    """)
    assert d["grid"] == (3.0, 18.0, 1501)
    assert d["bands"] == ((0, 1), (3, 2))
    assert d["regions"] == (1, 4)
    assert d["align"] is False
    assert d["noise_levels"] == (0.01, 0.2)
    assert d["mass_amu"] == 7.5


@pytest.mark.parametrize("text", ["nonsense = 1", "threshold = abc", "bands = 0-4", "align = maybe"])
def test_parse_errors(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_precedence(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("threshold = 0.05\nseed = 3\nout = from_config\nground = g.txt\n")
    cfg = load_config(p, env={})
    assert cfg.threshold == 0.05 and cfg.sources["threshold"] == "config"
    assert cfg.ground == tmp_path / "g.txt"
    assert cfg.out == tmp_path / "from_config"
    cfg = load_config(p, env={"LIFINV_OUT": "from_env"})
    assert cfg.out == Path("from_env") and cfg.sources["out"] == "env"
    cfg = load_config(p, {"out": Path("from_flag"), "seed": 9, "threshold": None}, env={"LIFINV_OUT": "from_env"})
    assert cfg.out == Path("from_flag") and cfg.sources["out"] == "flag"
    assert cfg.seed == 9 and cfg.threshold == 0.05


def test_missing_config_file(tmp_path):
    with pytest.raises(FileNotFoundError, match="nope.cfg"):
        load_config(tmp_path / "nope.cfg", env={})


@pytest.mark.parametrize("override", [
    {"threshold": 1.5}, {"extrapolation": "cubic"}, {"scale": "x"}, {"n_trials": 0},
    {"density_cutoff": 0.0}, {"atoms": ("7Li", "Xx")}, {"grid": (4.0, 2.0, 11)}, {"r_unit": "nm"},
])
def test_validation(override):
    with pytest.raises((ConfigError, ValueError)):
        load_config(None, override, env={})


def test_require_files(tmp_path):
    cfg = load_config(None, {"ground": tmp_path / "missing.txt"}, env={})
    with pytest.raises(FileNotFoundError, match="missing.txt"):
        cfg.require_files("ground")
    with pytest.raises(ConfigError, match="excited"):
        cfg.require_files("excited")


def test_dump_round_trip(tmp_path):
    cfg = load_config(None, {"threshold": 0.04, "bands": ((1, 2),), "seed": 77}, env={})
    p = tmp_path / "again.cfg"
    p.write_text(dump_config(cfg))
    back = load_config(p, env={})
    assert back.threshold == 0.04 and back.bands == ((1, 2),) and back.seed == 77
    assert back.grid == cfg.grid


def test_digest_tracks_values():
    a = load_config(None, env={})
    b = load_config(None, {"seed": 1}, env={})
    assert a.digest() == load_config(None, env={}).digest()
    assert a.digest() != b.digest()


def test_manifest_echoes_defaults(tmp_path):
    cfg = load_config(None, env={})
    m = build_manifest(cfg, "invert", ["invert"], ["a.txt"])
    for f in RunConfig.__dataclass_fields__:
        if f != "sources":
            assert f in m["config"]
            assert f in m["config_sources"]
    assert m["seed"] == cfg.seed
    assert m["config_sha256"] == cfg.digest()
    assert {"python", "numpy", "scipy"} <= set(m["versions"])
    write_manifest(tmp_path / "manifest.json", m)
    assert json.loads((tmp_path / "manifest.json").read_text())["command"] == "invert"
