import datetime as dt
from pathlib import Path

import pytest

from facade2d.config import RunConfig
from facade2d.domain import MaterialLayer, WallAssembly
from facade2d.environment import ConvectionModel, ShadingGeometry
from facade2d.pipelines import run_validation
from facade2d.reference import validation_problem


@pytest.fixture
def table2_wall():
    """Concrete / wood fiber / gypsum facade used throughout the tests."""
    return WallAssembly(
        layers=(
            MaterialLayer("concrete", 0.2, 1.4, 2.0e6),
            MaterialLayer("wood fiber", 0.15, 0.05, 0.85e6),
            MaterialLayer("gypsum", 0.02, 0.25, 0.85e6),
        ),
        height=3.0,
        length=0.37,
    )


def make_config(wall, *, out_dir=Path("out"), **overrides) -> RunConfig:
    defaults = dict(
        wall=wall, nx=75, ny=31, scheme="df", dt_s=36.0, horizon_days=None,
        environment_file=None, interpolation="hold", inside_temperature="file",
        inside_mean=293.15, inside_amplitude=2.0, inside_peak_day=200.0,
        start_date=dt.date(2001, 1, 1),
        shading=ShadingGeometry(3.0, 5.0, wall.height),
        convection=ConvectionModel(5.82, 3.96, 0.32),
        h_inside=10.0, absorptivity=0.6, output_dir=out_dir, cadence_s=3600.0,
        probe_heights=(0.3, 1.5, 2.7), shadow=True,
        convection_variant="variable", mode="2d", initial="steady",
    )
    defaults.update(overrides)
    return RunConfig(**defaults)


@pytest.fixture
def config_factory(table2_wall, tmp_path):
    def factory(**overrides):
        overrides.setdefault("out_dir", tmp_path / "out")
        out = overrides.pop("out_dir")
        return make_config(table2_wall, out_dir=out, **overrides)

    return factory


@pytest.fixture(scope="session")
def validation_suite():
    """All four schemes at the reference validation settings (shared run)."""
    return run_validation(out_dir=None, sweep=None)


@pytest.fixture(scope="session")
def validation_fields():
    """Final fields of the four schemes at the reference settings."""
    from facade2d.solver import SolverConfig, make_stepper

    nx = ny = 101
    fields = {}
    for scheme, dt_star in (("df", 1e-4), ("implicit", 1e-4), ("adi", 1e-4),
                            ("explicit", 1e-5)):
        problem = validation_problem(nx, ny, dt_star)
        stepper = make_stepper(problem, SolverConfig(scheme, dt_star))
        state = stepper.initial_state(problem.u0)
        n_steps = round(problem.t_final_star / dt_star)
        while state.step < n_steps:
            state = stepper.step(state)
        fields[scheme] = (state.u_curr, problem)
    return fields
