import datetime as dt

import numpy as np
import pytest

from facade2d.environment import ShadingGeometry
from facade2d.pipelines import (
    month_bounds,
    run_batch,
    run_facade,
    run_hypothesis_matrix,
    steady_profile,
)
from facade2d.config import BatchManifest
from facade2d.solver import DivergenceError
from facade2d.synthetic import (
    constant_environment,
    synthetic_environment,
    write_environment,
)

GEOM = ShadingGeometry(3.0, 5.0, 3.0)
DAY = 86400.0


def test_month_bounds_calendar_split():
    bounds, labels = month_bounds(dt.date(2001, 1, 1), 0.0, 62 * DAY)
    assert labels == ("2001-01", "2001-02", "2001-03")
    assert bounds[0] == 0.0
    assert bounds[1] == 31 * DAY
    assert bounds[2] == 59 * DAY
    assert bounds[-1] == 62 * DAY


def test_month_bounds_partial_start():
    bounds, labels = month_bounds(dt.date(2001, 1, 20), 0.0, 20 * DAY)
    assert labels == ("2001-01", "2001-02")
    assert bounds[1] == pytest.approx(12 * DAY)


def test_steady_profile_interface_continuity(table2_wall):
    x = np.array([0.0, 0.2, 0.35, 0.37])
    prof = steady_profile(table2_wall, 25.0, 10.0, 303.15, 293.15, x)
    r_total = 1 / 25.0 + 0.2 / 1.4 + 0.15 / 0.05 + 0.02 / 0.25 + 1 / 10.0
    flux = 10.0 / r_total
    assert prof[0] == pytest.approx(303.15 - flux / 25.0, rel=1e-12)
    assert prof[3] == pytest.approx(293.15 + flux / 10.0, rel=1e-12)
    assert np.all(np.diff(prof) < 0.0)


def test_explicit_facade_run_rejected_above_cfl(config_factory):
    env = constant_environment(days=1.0)
    cfg = config_factory(scheme="explicit", dt_s=300.0, nx=31, ny=9)
    with pytest.raises(DivergenceError):
        run_facade(cfg, env=env)


def test_no_shadow_toggle_is_noop_for_fully_sunlit_input(config_factory):
    env = synthetic_environment(days=1.0, shading=None)  # S = 1 throughout
    assert np.all(env.sunlit == 1.0)
    cfg = config_factory(nx=31, ny=11, dt_s=120.0)
    with_shadow = run_facade(cfg.with_overrides(shadow=True), env=env)
    without = run_facade(cfg.with_overrides(shadow=False), env=env)
    np.testing.assert_array_equal(with_shadow.flux.values, without.flux.values)
    np.testing.assert_array_equal(with_shadow.loads.energy_mj,
                                  without.loads.energy_mj)


def test_hypothesis_matrix_reference_row_and_shape(config_factory, tmp_path):
    env = synthetic_environment(days=1.0, shading=GEOM, elevation_max_deg=15.0)
    cfg = config_factory(nx=25, ny=9, dt_s=300.0)
    results = run_hypothesis_matrix(cfg, env=env, out_dir=tmp_path)
    assert len(results) == 7
    ref = results[("2d", True, "variable")]
    assert ref.mode == "2d"
    ones = results[("1d", True, "constant")]
    assert ones.mode == "1d"
    assert (tmp_path / "hypotheses.csv").exists()


def test_batch_identical_sites_give_identical_rows(config_factory, tmp_path):
    env = synthetic_environment(days=1.0, shading=GEOM)
    path_a = write_environment(env, tmp_path / "a.csv")
    path_b = write_environment(env, tmp_path / "b.csv")
    cfg = config_factory(nx=25, ny=9, dt_s=300.0)
    manifest = BatchManifest(sites=(("s1", path_a), ("s2", path_b)), template=cfg)
    rows = run_batch(manifest)
    assert rows[0][3] == rows[1][3] == "ok"
    assert rows[0][1] == rows[1][1]
    assert rows[0][2] == rows[1][2]


def test_batch_models_coincide_without_wind_or_shadow(config_factory, tmp_path):
    # No wind and full sun: the 1D standard model equals the 2D one.  Run with
    # the split scheme, whose y-terms cancel exactly on uniform columns; the
    # three-level scheme would add its own O(Fo_y dt^2/dy^2) consistency term,
    # which differs between the two grids.
    env = constant_environment(days=1.0, wind=0.0, sunlit=1.0,
                               q_direct=100.0, q_diffuse=30.0, q_reflected=10.0)
    path = write_environment(env, tmp_path / "flat.csv")
    cfg = config_factory(nx=25, ny=9, dt_s=300.0, scheme="adi")
    manifest = BatchManifest(sites=(("flat", path),), template=cfg)
    rows = run_batch(manifest)
    assert rows[0][3] == "ok"
    assert rows[0][1] <= 1e-10
    assert rows[0][2] <= 1e-10


def test_validation_sweep_df_slope_on_rising_branch():
    # at a fixed grid the DF error grows ~dt^2 once the tau term dominates the
    # spatial floor (the time-step sweep behaviour of the validation study)
    from facade2d.analysis import error_metric
    from facade2d.reference import analytical_solution, validation_problem
    from facade2d.solver import DuFortFrankelStepper

    errs, dts = [], (2e-4, 5e-4, 1e-3)
    for dt in dts:
        problem = validation_problem(101, 101, dt)
        stepper = DuFortFrankelStepper(problem)
        state = stepper.initial_state(problem.u0)
        while state.step < round(0.04 / dt):
            state = stepper.step(state)
        ref = analytical_solution(problem.grid.x, problem.grid.y, 0.04)
        errs.append(error_metric("l2", state.u_curr, ref, grid=problem.grid))
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.3)


def test_paper_resolution_smoke(config_factory):
    # one day at the production resolution (3.7 mm cells, 36 s steps)
    env = synthetic_environment(days=1.0, shading=GEOM)
    cfg = config_factory(nx=101, ny=811, dt_s=36.0)
    report = run_facade(cfg, env=env)
    assert report.n_steps == 2400
    assert np.all(np.isfinite(report.flux.values))


def test_batch_runs_in_parallel(config_factory, tmp_path):
    env = synthetic_environment(days=1.0, shading=GEOM)
    paths = [write_environment(env, tmp_path / f"s{i}.csv") for i in range(2)]
    cfg = config_factory(nx=21, ny=7, dt_s=600.0)
    manifest = BatchManifest(sites=(("a", paths[0]), ("b", paths[1])),
                             template=cfg, jobs=2)
    rows = run_batch(manifest)
    assert [r[3] for r in rows] == ["ok", "ok"]
    assert rows[0][1] == rows[1][1]


@pytest.mark.filterwarnings("ignore::facade2d.solver.TauAccuracyWarning")
@pytest.mark.parametrize("scheme", ["df", "adi", "explicit"])
def test_layered_steady_state_all_schemes(config_factory, scheme):
    # every scheme's steady limit reproduces the series-resistance flux
    # through the three-layer wall, exercising the harmonic-mean faces of
    # each code path (interfaces sit exactly on nodes at nx = 75)
    env = constant_environment(days=50.0, t_out=303.15, t_in=293.15, wind=0.0)
    dt = 15.0 if scheme == "explicit" else 120.0  # forward Euler: CFL ~ 18 s here
    cfg = config_factory(nx=75, ny=5, scheme=scheme, dt_s=dt, initial=293.15)
    result = run_facade(cfg, env=env)
    resistance = 1.0 / 5.82 + 0.2 / 1.4 + 0.15 / 0.05 + 0.02 / 0.25 + 1.0 / 10.0
    oracle = 10.0 / resistance
    assert result.flux.values[-1] == pytest.approx(oracle, rel=5e-3)


def test_df_consistency_warning_on_coarse_steps(config_factory):
    from facade2d.solver import TauAccuracyWarning

    env = constant_environment(days=1.0, step_s=3600.0)
    cfg = config_factory(nx=101, ny=9, scheme="df", dt_s=1800.0)
    with pytest.warns(TauAccuracyWarning):
        run_facade(cfg, env=env)


def test_sensitivity_zero_perturbation_returns_nominal(config_factory, tmp_path):
    from facade2d.pipelines import run_sensitivity
    from facade2d.sensitivity import PerturbationVector, taylor_expand

    env = synthetic_environment(days=0.5, shading=GEOM)
    cfg = config_factory(nx=21, ny=9, dt_s=300.0)
    zero = PerturbationVector(0.0, 0.0, 0.0, 0.0)
    report = run_sensitivity(cfg, env=env, perturbation=zero, time_plain=False)
    for values in report.delta_loads().values():
        assert np.all(values == 0.0)
    probe = taylor_expand(report.probe_nominal, report.probe_sensitivity, zero)
    np.testing.assert_array_equal(probe, report.probe_nominal)


@pytest.mark.filterwarnings("ignore::facade2d.solver.TauAccuracyWarning")
def test_facade_probe_layout(config_factory):
    env = constant_environment(days=0.5)
    cfg = config_factory(nx=21, ny=9, dt_s=600.0, probe_heights=(0.3, 1.5, 2.7))
    report = run_facade(cfg, env=env)
    assert set(report.probes) == {
        "x0_y0.3", "xL_y0.3", "x0_y1.5", "xL_y1.5", "x0_y2.7", "xL_y2.7",
    }
    n_expected = report.t_s.size
    assert all(v.size == n_expected for v in report.probes.values())
