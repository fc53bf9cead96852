import textwrap

import pytest

from facade2d.config import ConfigError, load_config, load_manifest
from facade2d.environment import ShadingGeometry
from facade2d.synthetic import synthetic_environment, write_environment

BASE_TOML = """
[wall]
height_m = 3.0
length_m = 0.37

[[wall.layer]]
name = "concrete"
thickness_m = 0.2
conductivity_W_mK = 1.4
volumetric_capacity_J_m3K = 2.0e6

[[wall.layer]]
name = "wood fiber"
thickness_m = 0.15
conductivity_W_mK = 0.05
volumetric_capacity_J_m3K = 0.85e6

[[wall.layer]]
name = "gypsum"
thickness_m = 0.02
conductivity_W_mK = 0.25
volumetric_capacity_J_m3K = 0.85e6

[grid]
nx = 31
ny = 11

[scheme]
name = "df"
dt_s = 120.0
horizon_days = 1.0

[environment]
file = "weather.csv"

[shading]
front_height_m = 3.0
front_distance_m = 5.0

[convection]
h10 = 5.82
h11 = 3.96
beta = 0.32
h_inside = 10.0
absorptivity = 0.6

[outputs]
directory = "out"
cadence_s = 3600.0
"""


def write_fixture(tmp_path, toml_text=BASE_TOML, days=1.0):
    env = synthetic_environment(days=days, shading=ShadingGeometry(3.0, 5.0, 3.0))
    write_environment(env, tmp_path / "weather.csv")
    path = tmp_path / "run.toml"
    path.write_text(textwrap.dedent(toml_text))
    return path


def test_load_config_roundtrip(tmp_path):
    cfg = load_config(write_fixture(tmp_path))
    assert cfg.wall.length == 0.37
    assert len(cfg.wall.layers) == 3
    assert cfg.nx == 31 and cfg.ny == 11
    assert cfg.scheme == "df" and cfg.dt_s == 120.0
    assert cfg.environment_file.name == "weather.csv"
    assert cfg.shading.front_distance == 5.0
    assert cfg.convection.beta == 0.32
    assert cfg.mode == "2d" and cfg.shadow is True
    assert cfg.sensitivity.dh11 == pytest.approx(0.198)


def test_missing_environment_file_is_config_error(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(BASE_TOML)  # weather.csv not written
    with pytest.raises(ConfigError, match="does not exist"):
        load_config(path)


def test_bad_scheme_rejected(tmp_path):
    bad = BASE_TOML.replace('name = "df"', 'name = "leapfrog"')
    with pytest.raises(ConfigError, match="unknown scheme"):
        load_config(write_fixture(tmp_path, bad))


def test_layerless_wall_rejected(tmp_path):
    bad = "\n".join(line for line in BASE_TOML.splitlines()
                    if "wall.layer" not in line)
    # strip the layer bodies too: keep everything after [grid]
    head, _, tail = BASE_TOML.partition("[grid]")
    bad = "[wall]\nheight_m = 3.0\nlength_m = 0.37\n\n[grid]" + tail
    with pytest.raises(ConfigError, match="layer"):
        load_config(write_fixture(tmp_path, bad))


def test_inconsistent_length_rejected(tmp_path):
    bad = BASE_TOML.replace("length_m = 0.37", "length_m = 0.36")
    with pytest.raises(ConfigError, match="length"):
        load_config(write_fixture(tmp_path, bad))


def test_invalid_toml_rejected(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("[wall\nheight_m = 3.0")
    with pytest.raises(ConfigError):
        load_config(path)


def test_missing_file_rejected(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        load_config(tmp_path / "nope.toml")


MANIFEST_EXTRA = """
[batch]
jobs = 1

[[batch.site]]
label = "alpha"
file = "weather.csv"

[[batch.site]]
label = "bravo"
file = "weather_b.csv"
"""


def test_load_manifest(tmp_path):
    write_fixture(tmp_path)
    env = synthetic_environment(days=1.0, wind_mean=6.0,
                                shading=ShadingGeometry(3.0, 5.0, 3.0))
    write_environment(env, tmp_path / "weather_b.csv")
    path = tmp_path / "batch.toml"
    path.write_text(BASE_TOML + MANIFEST_EXTRA)
    manifest = load_manifest(path)
    assert [s[0] for s in manifest.sites] == ["alpha", "bravo"]
    assert manifest.template.nx == 31


def test_manifest_duplicate_labels_rejected(tmp_path):
    write_fixture(tmp_path)
    dup = MANIFEST_EXTRA.replace('label = "bravo"', 'label = "alpha"').replace(
        "weather_b.csv", "weather.csv")
    path = tmp_path / "batch.toml"
    path.write_text(BASE_TOML + dup)
    with pytest.raises(ConfigError, match="duplicate"):
        load_manifest(path)
