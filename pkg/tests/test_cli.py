import csv
import textwrap

import pytest

from facade2d.cli import main
from facade2d.environment import ShadingGeometry
from facade2d.synthetic import synthetic_environment, write_environment

from test_config import BASE_TOML, MANIFEST_EXTRA, write_fixture


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_validate_command(tmp_path):
    out = tmp_path / "val"
    code = main(["validate", "--out", str(out), "--nx", "41", "--ny", "41",
                 "--dt", "4e-4", "--dt-explicit", "5e-5", "--no-sweep"])
    assert code == 0
    rows = read_csv(out / "validation_table.csv")
    assert rows[0] == ["scheme", "dt_star", "dx_star", "eps2", "Rcpu", "status"]
    assert {r[0] for r in rows[1:]} == {"df", "explicit", "implicit", "adi"}


def test_validate_sweep_emits_pinned_columns(tmp_path):
    out = tmp_path / "val"
    code = main(["validate", "--out", str(out), "--nx", "21", "--ny", "21",
                 "--dt", "1e-3", "--dt-explicit", "2e-4"])
    assert code == 0
    rows = read_csv(out / "validation_sweep.csv")
    assert rows[0] == ["dt_star", "eps2", "Rcpu", "scheme"]
    assert len(rows) > 4


def test_simulate_command_and_determinism(tmp_path):
    cfg_path = write_fixture(tmp_path)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", str(cfg_path), "--out", str(out1)]) == 0
    assert main(["simulate", "--config", str(cfg_path), "--out", str(out2)]) == 0
    for name in ("flux.csv", "probes.csv", "loads.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    header = read_csv(out1 / "flux.csv")[0]
    assert header == ["t_seconds", "J_Wm2"]
    loads = read_csv(out1 / "loads.csv")
    assert loads[0] == ["month", "E_MJ"]
    assert loads[1][0] == "2001-01"


def test_simulate_scheme_and_grid_overrides(tmp_path):
    cfg_path = write_fixture(tmp_path)
    out = tmp_path / "adi_run"
    code = main(["simulate", "--config", str(cfg_path), "--out", str(out),
                 "--scheme", "adi", "--nx", "21", "--ny", "7", "--dt", "300"])
    assert code == 0
    timing = read_csv(out / "timing.csv")
    assert timing[1][0] == "adi"


def test_missing_config_gives_exit_2(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.toml")]) == 2


def test_horizon_beyond_weather_span_gives_exit_2(tmp_path):
    bad = BASE_TOML.replace("horizon_days = 1.0", "horizon_days = 30.0")
    cfg_path = write_fixture(tmp_path, bad)  # fixture spans one day only
    assert main(["simulate", "--config", str(cfg_path),
                 "--out", str(tmp_path / "x")]) == 2


def test_cfl_violation_gives_exit_3(tmp_path):
    bad = BASE_TOML.replace('name = "df"', 'name = "explicit"')
    cfg_path = write_fixture(tmp_path, bad)  # dt 120 s >> explicit limit
    assert main(["simulate", "--config", str(cfg_path),
                 "--out", str(tmp_path / "x")]) == 3


def test_malformed_weather_gives_exit_4(tmp_path):
    cfg_path = write_fixture(tmp_path)
    (tmp_path / "weather.csv").write_text("t_seconds,T_out_K\n0,283.15\n")
    assert main(["simulate", "--config", str(cfg_path),
                 "--out", str(tmp_path / "x")]) == 4


def test_hypotheses_command(tmp_path):
    cfg_path = write_fixture(tmp_path)
    out = tmp_path / "hyp"
    assert main(["hypotheses", "--config", str(cfg_path), "--out", str(out),
                 "--nx", "21", "--ny", "9", "--dt", "300"]) == 0
    rows = read_csv(out / "hypotheses.csv")
    assert rows[0] == ["model", "shadow", "convection", "month", "E_MJ",
                       "eps_r_percent"]
    variants = {(r[0], r[1], r[2]) for r in rows[1:]}
    assert len(variants) == 7
    reference_rows = [r for r in rows[1:]
                      if (r[0], r[1], r[2]) == ("2d", "yes", "variable")]
    assert all(float(r[5]) == 0.0 for r in reference_rows)


def test_batch_command_continues_after_site_failure(tmp_path):
    write_fixture(tmp_path)
    env = synthetic_environment(days=1.0, wind_mean=6.0,
                                shading=ShadingGeometry(3.0, 5.0, 3.0))
    write_environment(env, tmp_path / "weather_b.csv")
    # corrupt the second site after manifest validation has seen it exist
    manifest = tmp_path / "batch.toml"
    manifest.write_text(textwrap.dedent(BASE_TOML + MANIFEST_EXTRA)
                        .replace("nx = 31", "nx = 21"))
    (tmp_path / "weather_b.csv").write_text("garbage\n")
    out = tmp_path / "batch_out"
    assert main(["batch", "--config", str(manifest), "--out", str(out)]) == 0
    rows = read_csv(out / "batch.csv")
    assert rows[0] == ["site", "eps2n_J", "eps2n_E", "status"]
    by_site = {r[0]: r for r in rows[1:]}
    assert by_site["alpha"][3] == "ok"
    assert by_site["bravo"][3].startswith("error")


def test_sensitivity_command(tmp_path):
    cfg_path = write_fixture(tmp_path)
    out = tmp_path / "sens"
    assert main(["sensitivity", "--config", str(cfg_path), "--out", str(out),
                 "--nx", "21", "--ny", "9", "--dt", "300"]) == 0
    rows = read_csv(out / "sensitivity_loads.csv")
    assert rows[0] == ["month", "dE_h11", "dE_beta", "dE_F", "dE_D",
                       "dE_total_plus", "dE_total_minus"]
    assert float(rows[1][5]) == pytest.approx(-float(rows[1][6]), rel=1e-12)
    probe = read_csv(out / "sensitivity_probe.csv")
    assert probe[0][0] == "t_seconds"
    assert "T_plus_K" in probe[0]
