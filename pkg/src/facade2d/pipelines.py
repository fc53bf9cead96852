"""Run orchestration: validation, facade simulation, hypothesis matrix,
multi-site batches and sensitivity runs, plus their CSV emitters.

Wall-clock figures measure the stepping loop only (file I/O and problem
assembly excluded); they are written to a separate timing file so that all
other outputs are bit-reproducible.
"""

from __future__ import annotations

import csv
import datetime as dt
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import (
    ErrorReport,
    FluxSeries,
    ThermalLoads,
    cpu_ratio,
    error_metric,
    grid_weights,
    inside_flux,
    series_weights,
    thermal_loads,
)
from .config import BatchManifest, ConfigError, RunConfig
from .domain import (
    DimensionlessProblem,
    Edge,
    ReferenceScales,
    WallAssembly,
    build_grid,
    nondimensionalize,
)
from .environment import (
    ConvectionModel,
    EnvironmentSeries,
    load_environment,
    mean_surface_coefficient,
    shadow_height,
    sunlit_indicator,
    surface_coefficient,
)
from .reference import analytical_solution, validation_problem
from .sensitivity import PerturbationVector, SensitivityDriver, taylor_expand
from .solver import (
    AdiabaticEdge,
    DivergenceError,
    SampledRobinEdge,
    SolverConfig,
    cfl_limit,
    make_stepper,
    tau_diagnostic,
)

__all__ = [
    "SimulationReport",
    "ValidationResult",
    "run_validation",
    "build_facade_model",
    "run_facade",
    "run_hypothesis_matrix",
    "run_batch",
    "run_sensitivity",
    "month_bounds",
    "steady_profile",
]

DAY_S = 86400.0
_FMT = "%.12g"


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([
                _FMT % v if isinstance(v, float) else str(v) for v in row
            ])


# ---------------------------------------------------------------------------
# Validation pipeline
# ---------------------------------------------------------------------------

DEFAULT_SWEEP = (1e-5, 2e-5, 5e-5, 1e-4, 2e-4, 5e-4, 1e-3)


@dataclass(frozen=True)
class ValidationResult:
    table: tuple          # ErrorReport per scheme at the reference settings
    sweep: tuple          # ErrorReport per (scheme, dt) pair
    nx: int
    ny: int


def _check_explicit_cfl(scheme: str, problem: DimensionlessProblem, dt_star: float):
    """Refuse to start a forward-Euler run above its stability limit.

    Divergence from a smooth start grows from rounding noise and can stay
    finite (hence undetected by the non-finite guard) for a long horizon
    while being pure garbage; failing upfront is deterministic.
    """
    if scheme != "explicit":
        return
    limit = cfl_limit(problem.grid, problem.fo_x, problem.fo_y)
    if dt_star > limit * (1.0 + 1e-12):
        raise DivergenceError(
            0, f"explicit step {dt_star:.3e} exceeds the stability limit {limit:.3e}"
        )


def _run_validation_case(scheme: str, dt_star: float, nx: int, ny: int,
                         reference: np.ndarray, t_final: float) -> tuple:
    """One scheme run against the series solution; returns (eps2, wall_s)."""
    problem = validation_problem(nx, ny, dt_star)
    _check_explicit_cfl(scheme, problem, dt_star)
    stepper = make_stepper(problem, SolverConfig(scheme, dt_star))
    n_steps = round(t_final / dt_star)
    t0 = time.perf_counter()
    state = stepper.initial_state(problem.u0)
    while state.step < n_steps:
        state = stepper.step(state)
    wall = time.perf_counter() - t0
    eps2 = error_metric("l2", state.u_curr, reference, grid=problem.grid)
    return eps2, wall


def run_validation(out_dir=None, *, dt_star: float = 1e-4,
                   dt_star_explicit: float = 1e-5, nx: int = 101, ny: int = 101,
                   sweep=DEFAULT_SWEEP, n_terms: int = 50) -> ValidationResult:
    """Run the four schemes on the analytical validation case.

    The main table uses the reference settings (the explicit scheme gets its
    CFL-compliant step); the optional sweep revisits every scheme over a list
    of time steps, recording divergence where a scheme is unstable.  CPU
    ratios are measured against the implicit run of the main table.
    """
    case_grid = validation_problem(nx, ny, dt_star)
    reference = analytical_solution(case_grid.grid.x, case_grid.grid.y,
                                    case_grid.t_final_star, n_terms=n_terms)
    t_final = case_grid.t_final_star

    table = []
    walls = {}
    for scheme in ("implicit", "explicit", "adi", "df"):
        step = dt_star_explicit if scheme == "explicit" else dt_star
        eps2, wall = _run_validation_case(scheme, step, nx, ny, reference, t_final)
        walls[scheme] = wall
        table.append(ErrorReport(
            eps2=eps2, eps2_normalized=float("nan"), r_cpu=float("nan"),
            scheme=scheme, dt_star=step, dx_star=1.0 / (nx - 1),
        ))
    ref_wall = walls["implicit"]
    table = [
        ErrorReport(eps2=r.eps2, eps2_normalized=r.eps2_normalized,
                    r_cpu=cpu_ratio(walls[r.scheme], ref_wall), scheme=r.scheme,
                    dt_star=r.dt_star, dx_star=r.dx_star)
        for r in table
    ]

    sweep_rows = []
    for scheme in ("implicit", "explicit", "adi", "df"):
        for step in (sweep or ()):
            try:
                eps2, wall = _run_validation_case(scheme, step, nx, ny,
                                                  reference, t_final)
                sweep_rows.append(ErrorReport(
                    eps2=eps2, eps2_normalized=float("nan"),
                    r_cpu=cpu_ratio(wall, ref_wall), scheme=scheme,
                    dt_star=step, dx_star=1.0 / (nx - 1),
                ))
            except DivergenceError:
                sweep_rows.append(ErrorReport(
                    eps2=float("nan"), eps2_normalized=float("nan"),
                    r_cpu=float("nan"), scheme=scheme, dt_star=step,
                    dx_star=1.0 / (nx - 1), status="unstable",
                ))

    result = ValidationResult(table=tuple(table), sweep=tuple(sweep_rows), nx=nx, ny=ny)
    if out_dir is not None:
        out_dir = Path(out_dir)
        _write_csv(out_dir / "validation_table.csv",
                   ["scheme", "dt_star", "dx_star", "eps2", "Rcpu", "status"],
                   [(r.scheme, r.dt_star, r.dx_star, r.eps2, r.r_cpu, r.status)
                    for r in result.table])
        _write_csv(out_dir / "validation_sweep.csv",
                   ["dt_star", "eps2", "Rcpu", "scheme"],
                   [(r.dt_star, r.eps2, r.r_cpu, r.scheme) for r in result.sweep])
    return result


# ---------------------------------------------------------------------------
# Facade model assembly
# ---------------------------------------------------------------------------

def month_bounds(start_date: dt.date, t0_s: float, t1_s: float):
    """Calendar-month interval edges (in seconds since start_date midnight).

    Partial months at either end of [t0_s, t1_s] become partial intervals
    carrying their month label.
    """
    if t1_s <= t0_s:
        raise ValueError("empty horizon")
    base = dt.datetime.combine(start_date, dt.time())
    edges = [t0_s]
    labels = []
    current = (base + dt.timedelta(seconds=t0_s)).date().replace(day=1)
    while True:
        labels.append(f"{current.year:04d}-{current.month:02d}")
        nxt = (current.replace(day=28) + dt.timedelta(days=4)).replace(day=1)
        edge = (dt.datetime.combine(nxt, dt.time()) - base).total_seconds()
        if edge >= t1_s - 1e-6:
            edges.append(t1_s)
            break
        edges.append(edge)
        current = nxt
    return np.asarray(edges), tuple(labels)


def steady_profile(wall: WallAssembly, h_out: float, h_in: float,
                   t_out: float, t_in: float, x_m: np.ndarray) -> np.ndarray:
    """1D series-resistance steady temperature profile through the wall."""
    if h_out <= 0 or h_in <= 0:
        return np.full_like(np.asarray(x_m, dtype=float), 0.5 * (t_out + t_in))
    thick = np.array([la.thickness for la in wall.layers])
    cond = np.array([la.conductivity for la in wall.layers])
    r_layers = thick / cond
    r_total = 1.0 / h_out + r_layers.sum() + 1.0 / h_in
    flux = (t_out - t_in) / r_total
    idx = wall.layer_index_at(x_m)
    r_below = np.concatenate(([0.0], np.cumsum(r_layers)))[idx]
    inside_layer = (np.asarray(x_m, dtype=float) - wall.interfaces[idx]) / cond[idx]
    return t_out - flux * (1.0 / h_out + r_below + inside_layer)


@dataclass
class FacadeModel:
    """Assembled dimensionless problem plus the samplers that feed it."""

    config: RunConfig
    env: EnvironmentSeries
    scales: ReferenceScales
    problem: DimensionlessProblem
    convection: ConvectionModel
    h_mean: float
    t_inside_fn: object
    t0_s: float
    n_steps: int
    cadence_steps: int
    mode: str


def _inside_temperature_fn(cfg: RunConfig, env: EnvironmentSeries):
    if cfg.inside_temperature == "file":
        return env.t_in_at
    mean, amp, peak = cfg.inside_mean, cfg.inside_amplitude, cfg.inside_peak_day

    def sinusoid(t_s: float) -> float:
        return mean + amp * np.cos(2.0 * np.pi * (t_s / DAY_S - peak) / 365.0)

    return sinusoid


def build_facade_model(cfg: RunConfig, env: Optional[EnvironmentSeries] = None,
                       dt_s: Optional[float] = None) -> FacadeModel:
    """Wire the weather series and config toggles into a solvable problem."""
    if env is None:
        if cfg.environment_file is None:
            raise ConfigError("config has no environment file and no series was passed")
        env = load_environment(cfg.environment_file, interpolation=cfg.interpolation)
    wall = cfg.wall
    scales = ReferenceScales.for_wall(
        wall,
        temperature=cfg.reference_temperature,
        temperature_span=cfg.temperature_span,
        time=cfg.reference_time,
    )
    mode = cfg.mode
    ny = 3 if mode == "1d" else cfg.ny
    grid = build_grid(wall, cfg.nx, ny, scales)
    y_m = grid.y * wall.height
    y_floor = 0.5 * grid.dy * wall.height
    conv = cfg.convection
    geom = cfg.shading
    alpha = cfg.absorptivity
    h_mean = mean_surface_coefficient(conv, env, wall.height)
    t_inside = _inside_temperature_fn(cfg, env)

    shadow_on = cfg.shadow
    if cfg.convection_variant == "constant":
        h_fn = lambda y, t: np.full(np.shape(y), h_mean)
    elif mode == "1d":
        mid = 0.5 * wall.height
        h_fn = lambda y, t: np.full(
            np.shape(y), surface_coefficient(conv, mid, t, env, y_floor)
        )
    else:
        h_fn = lambda y, t: surface_coefficient(conv, y, t, env, y_floor)

    def q_uniform(t, ratio):
        return alpha * (env.q_direct_at(t) * ratio
                        + env.q_diffuse_at(t) + env.q_reflected_at(t))

    if mode == "1d":
        if shadow_on:
            q_fn = lambda y, t: np.full(np.shape(y), q_uniform(t, env.sunlit_at(t)))
        else:
            q_fn = lambda y, t: np.full(np.shape(y), q_uniform(t, 1.0))
    elif shadow_on:
        def q_fn(y, t):
            shade = shadow_height(env.sunlit_at(t), geom.facade_height)
            chi = sunlit_indicator(y, shade)
            return alpha * (env.q_direct_at(t) * chi
                            + env.q_diffuse_at(t) + env.q_reflected_at(t))
    else:
        q_fn = lambda y, t: np.full(np.shape(y), q_uniform(t, 1.0))

    edges = {
        Edge.LEFT: SampledRobinEdge(Edge.LEFT, scales, y_m, h_fn,
                                    env.t_out_at, q_fn),
        Edge.RIGHT: SampledRobinEdge(
            Edge.RIGHT, scales, y_m,
            lambda y, t: np.full(np.shape(y), cfg.h_inside), t_inside,
        ),
        Edge.TOP: AdiabaticEdge(grid.nx),
        Edge.BOTTOM: AdiabaticEdge(grid.nx),
    }

    t0_s = env.t_start
    if cfg.initial == "steady":
        h0 = float(np.mean(h_fn(y_m, t0_s)))
        profile = steady_profile(wall, h0, cfg.h_inside, env.t_out_at(t0_s),
                                 t_inside(t0_s), grid.x * wall.length)
        u0 = np.broadcast_to(nondimensionalize(profile, scales), grid.shape()).copy()
    else:
        u0 = np.full(grid.shape(), nondimensionalize(float(cfg.initial), scales))

    dt_s = cfg.dt_s if dt_s is None else dt_s
    horizon_s = (cfg.horizon_days * DAY_S if cfg.horizon_days is not None
                 else env.t_end - t0_s)
    n_steps = max(1, round(horizon_s / dt_s))
    if t0_s + n_steps * dt_s > env.t_end * (1 + 1e-12) + 1e-9:
        raise ConfigError(
            f"horizon {horizon_s:g}s exceeds the environment span "
            f"[{env.t_start:g}, {env.t_end:g}]s"
        )
    cadence_steps = max(1, round(cfg.cadence_s / dt_s))

    problem = DimensionlessProblem(
        grid=grid, fo_x=scales.fourier_x, fo_y=scales.fourier_y, edges=edges,
        u0=u0, t_final_star=scales.to_star_time(t0_s + n_steps * dt_s),
        dt_star=dt_s / scales.time,
    )
    return FacadeModel(config=cfg, env=env, scales=scales, problem=problem,
                       convection=conv, h_mean=h_mean, t_inside_fn=t_inside,
                       t0_s=t0_s, n_steps=n_steps, cadence_steps=cadence_steps,
                       mode=mode)


# ---------------------------------------------------------------------------
# Facade simulation
# ---------------------------------------------------------------------------

@dataclass
class SimulationReport:
    """Outputs of one facade run on the output cadence."""

    t_s: np.ndarray
    probes: dict
    flux: FluxSeries
    loads: ThermalLoads
    wall_seconds: float
    scheme: str
    mode: str
    n_steps: int
    fields: Optional[list] = None
    h_mean: float = float("nan")

    def monthly(self) -> dict:
        return dict(zip(self.loads.labels, self.loads.energy_mj))


def _probe_indices(cfg: RunConfig, grid, height: float):
    """Probe nodes at x in {0, L} and the configured heights."""
    probes = []
    for y_probe in cfg.probe_heights:
        i = int(round(y_probe / height * (grid.ny - 1)))
        i = min(max(i, 0), grid.ny - 1)
        for label_x, j in (("x0", 0), ("xL", grid.nx - 1)):
            probes.append((f"{label_x}_y{y_probe:g}", i, j))
    return probes


def run_facade(cfg: RunConfig, env: Optional[EnvironmentSeries] = None,
               out_dir=None, collect_fields: bool = False,
               dt_s: Optional[float] = None) -> SimulationReport:
    """Simulate the facade over the configured horizon.

    Records temperature probes and the inside-surface flux on the output
    cadence, integrates monthly thermal loads, and (optionally) keeps the
    sampled dimensionless fields for downstream comparisons.
    """
    model = build_facade_model(cfg, env, dt_s=dt_s)
    problem, scales = model.problem, model.scales
    grid = problem.grid
    _check_explicit_cfl(cfg.scheme, problem, problem.dt_star)
    if cfg.scheme == "df":
        tau_diagnostic(grid, problem.dt_star, problem.fo_x, problem.fo_y)
    stepper = make_stepper(
        problem, SolverConfig(cfg.scheme, problem.dt_star)
    )
    probes = _probe_indices(cfg, grid, cfg.wall.height)
    t0_star = scales.to_star_time(model.t0_s)

    times, flux_values = [], []
    probe_values = {name: [] for name, _, _ in probes}
    fields = [] if collect_fields else None

    def record(step: int, u: np.ndarray):
        times.append(model.t0_s + step * (problem.dt_star * scales.time))
        flux_values.append(inside_flux(u, grid, scales))
        for name, i, j in probes:
            probe_values[name].append(
                scales.temperature + scales.temperature_span * u[i, j]
            )
        if fields is not None:
            fields.append(u.copy())

    def due(step: int) -> bool:
        return step % model.cadence_steps == 0 or step == model.n_steps

    record(0, problem.u0)
    wall_t0 = time.perf_counter()
    state = stepper.initial_state(problem.u0, t0_star)
    if state.step > 0 and due(state.step):
        record(state.step, state.u_curr)
    while state.step < model.n_steps:
        state = stepper.step(state)
        if due(state.step):
            record(state.step, state.u_curr)
    wall_seconds = time.perf_counter() - wall_t0

    t_arr = np.asarray(times)
    flux = FluxSeries(t=t_arr, values=np.asarray(flux_values))
    bounds, labels = month_bounds(cfg.start_date, t_arr[0], t_arr[-1])
    loads = thermal_loads(flux, bounds, labels)
    report = SimulationReport(
        t_s=t_arr, probes={k: np.asarray(v) for k, v in probe_values.items()},
        flux=flux, loads=loads, wall_seconds=wall_seconds, scheme=cfg.scheme,
        mode=model.mode, n_steps=model.n_steps, fields=fields, h_mean=model.h_mean,
    )
    if out_dir is not None:
        _write_facade_outputs(Path(out_dir), report)
    return report


def _write_facade_outputs(out_dir: Path, report: SimulationReport):
    _write_csv(out_dir / "flux.csv", ["t_seconds", "J_Wm2"],
               zip(report.t_s.tolist(), report.flux.values.tolist()))
    probe_names = sorted(report.probes)
    _write_csv(out_dir / "probes.csv",
               ["t_seconds"] + [f"T_{n}_K" for n in probe_names],
               [(t, *(report.probes[n][k] for n in probe_names))
                for k, t in enumerate(report.t_s.tolist())])
    _write_csv(out_dir / "loads.csv", ["month", "E_MJ"],
               zip(report.loads.labels, report.loads.energy_mj.tolist()))
    _write_csv(out_dir / "timing.csv", ["scheme", "mode", "n_steps", "wall_seconds"],
               [(report.scheme, report.mode, report.n_steps, report.wall_seconds)])


# ---------------------------------------------------------------------------
# Hypothesis matrix (2D/1D x shadow x convection variants)
# ---------------------------------------------------------------------------

HYPOTHESIS_ROWS = (
    ("2d", True, "variable"),
    ("2d", False, "variable"),
    ("2d", True, "constant"),
    ("2d", False, "constant"),
    ("1d", True, "constant"),
    ("1d", True, "variable"),
    ("1d", False, "constant"),
)


def run_hypothesis_matrix(cfg: RunConfig, env: Optional[EnvironmentSeries] = None,
                          out_dir=None) -> dict:
    """Monthly loads for the seven model variants, relative to the full model.

    The reference is the 2D run with shadow and variable convection; other
    rows report the signed monthly deviation 100 (E - E_ref)/|E_ref|.  The
    1D rows follow the standard-model conventions: "shadow" means the
    sunlit-ratio-scaled direct flux, "variable" means the mid-height h(t).
    """
    if env is None:
        env = load_environment(cfg.environment_file, interpolation=cfg.interpolation)
    results = {}
    for mode, shadow, conv in HYPOTHESIS_ROWS:
        variant_cfg = cfg.with_overrides(mode=mode, shadow=shadow,
                                         convection_variant=conv)
        results[(mode, shadow, conv)] = run_facade(variant_cfg, env=env)
    reference = results[HYPOTHESIS_ROWS[0]]
    ref_e = reference.loads.energy_mj
    rows = []
    for key in HYPOTHESIS_ROWS:
        rep = results[key]
        for label, e_mj, e_ref in zip(rep.loads.labels, rep.loads.energy_mj, ref_e):
            eps_r = 0.0 if key == HYPOTHESIS_ROWS[0] else (
                100.0 * (e_mj - e_ref) / abs(e_ref) if e_ref != 0.0 else float("nan")
            )
            rows.append((key[0], "yes" if key[1] else "no", key[2], label,
                         float(e_mj), float(eps_r)))
    if out_dir is not None:
        _write_csv(Path(out_dir) / "hypotheses.csv",
                   ["model", "shadow", "convection", "month", "E_MJ", "eps_r_percent"],
                   rows)
    return results


# ---------------------------------------------------------------------------
# Multi-site batch: 1D vs 2D comparison
# ---------------------------------------------------------------------------

def _normalized_comparison(values, reference, weights=None) -> float:
    """Range-normalised RMS; degenerates to max-|reference| scaling when the
    reference has zero range (e.g. a single-month loads vector)."""
    reference = np.asarray(reference, dtype=float)
    if reference.max() - reference.min() > 0.0:
        return error_metric("normalized", values, reference, weights=weights)
    scale = max(float(np.max(np.abs(reference))), 1e-300)
    return error_metric("l2", np.asarray(values) / scale, reference / scale,
                        weights=weights)


def _batch_site(args):
    label, path, cfg = args
    try:
        env = load_environment(path, interpolation=cfg.interpolation)
        full = run_facade(cfg.with_overrides(mode="2d", shadow=True,
                                             convection_variant="variable"), env=env)
        standard = run_facade(cfg.with_overrides(mode="1d", shadow=True,
                                                 convection_variant="constant"), env=env)
        w = series_weights(full.t_s)
        eps_j = _normalized_comparison(standard.flux.values, full.flux.values,
                                       weights=w)
        eps_e = _normalized_comparison(standard.loads.energy_mj,
                                       full.loads.energy_mj)
        return (label, float(eps_j), float(eps_e), "ok")
    except Exception as exc:  # per-site failures must not kill the batch
        return (label, float("nan"), float("nan"), f"error: {exc}")


def run_batch(manifest: BatchManifest, out_dir=None, jobs: Optional[int] = None) -> list:
    """1D-vs-2D normalized errors on J and E for every site in the manifest."""
    jobs = manifest.jobs if jobs is None else jobs
    tasks = [(label, path, manifest.template) for label, path in manifest.sites]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_batch_site, tasks))
    else:
        rows = [_batch_site(t) for t in tasks]
    if out_dir is not None:
        _write_csv(Path(out_dir) / "batch.csv",
                   ["site", "eps2n_J", "eps2n_E", "status"], rows)
    return rows


# ---------------------------------------------------------------------------
# Sensitivity pipeline
# ---------------------------------------------------------------------------

@dataclass
class SensitivityReport:
    t_s: np.ndarray
    probe_nominal: np.ndarray       # temperature at the probe point [K]
    probe_sensitivity: dict         # parameter -> dT/dp at the probe
    flux_nominal: np.ndarray
    flux_sensitivity: dict          # parameter -> dJ/dp series
    loads_nominal: ThermalLoads
    loads_sensitivity: dict         # parameter -> dE/dp per month [MJ units]
    perturbation: PerturbationVector
    wall_seconds: float
    plain_wall_seconds: float

    def delta_loads(self) -> dict:
        """Per-parameter first-order monthly load changes under the perturbation."""
        steps = {"h11": self.perturbation.dh11, "beta": self.perturbation.dbeta,
                 "F": self.perturbation.dF, "D": self.perturbation.dD}
        return {p: coeff * steps[p] for p, coeff in self.loads_sensitivity.items()}

    def cost_ratio(self) -> float:
        return cpu_ratio(self.wall_seconds, self.plain_wall_seconds)


def run_sensitivity(cfg: RunConfig, env: Optional[EnvironmentSeries] = None,
                    perturbation: Optional[PerturbationVector] = None,
                    out_dir=None, time_plain: bool = True) -> SensitivityReport:
    """Co-step the temperature and the four tangent fields over the horizon.

    Emits first-order (Taylor) deltas for a surface probe, the inside flux
    and the monthly loads, and reports the wall-clock ratio against the plain
    temperature run.
    """
    if env is None:
        env = load_environment(cfg.environment_file, interpolation=cfg.interpolation)
    sens_cfg = cfg.sensitivity
    if perturbation is None:
        perturbation = PerturbationVector(sens_cfg.dh11, sens_cfg.dbeta,
                                          sens_cfg.dF, sens_cfg.dD)
    model = build_facade_model(cfg.with_overrides(mode="2d"), env)
    problem, scales, grid = model.problem, model.scales, model.problem.grid
    driver = SensitivityDriver(
        problem, scales, env, model.convection, cfg.shading, cfg.absorptivity,
        band_df=sens_cfg.band_dF, band_dd=sens_cfg.band_dD,
    )
    t0_star = scales.to_star_time(model.t0_s)
    probe_i = min(max(int(round(sens_cfg.probe_y / cfg.wall.height * (grid.ny - 1))), 0),
                  grid.ny - 1)

    times = []
    probe_nom, flux_nom = [], []
    probe_sens = {p: [] for p in driver.parameters}
    flux_sens = {p: [] for p in driver.parameters}

    def record(step: int, state):
        times.append(model.t0_s + step * cfg.dt_s)
        u = state.temperature.u_curr
        probe_nom.append(scales.temperature + scales.temperature_span * u[probe_i, 0])
        flux_nom.append(inside_flux(u, grid, scales))
        for p in driver.parameters:
            theta = state.theta[p].u_curr
            probe_sens[p].append(scales.temperature_span * theta[probe_i, 0])
            flux_sens[p].append(inside_flux(theta, grid, scales))

    def due(step: int) -> bool:
        return step % model.cadence_steps == 0 or step == model.n_steps

    zeros = np.zeros(grid.shape())
    times.append(model.t0_s)
    probe_nom.append(scales.temperature + scales.temperature_span * problem.u0[probe_i, 0])
    flux_nom.append(inside_flux(problem.u0, grid, scales))
    for p in driver.parameters:
        probe_sens[p].append(0.0)
        flux_sens[p].append(inside_flux(zeros, grid, scales))

    wall_t0 = time.perf_counter()
    state = driver.initial_state(t0_star)
    if due(state.temperature.step):
        record(state.temperature.step, state)
    while state.temperature.step < model.n_steps:
        state = driver.step(state)
        if due(state.temperature.step):
            record(state.temperature.step, state)
    wall_seconds = time.perf_counter() - wall_t0

    plain_wall = float("nan")
    if time_plain:
        stepper = make_stepper(problem, SolverConfig("df", problem.dt_star))
        wall_t1 = time.perf_counter()
        plain = stepper.initial_state(problem.u0, t0_star)
        while plain.step < model.n_steps:
            plain = stepper.step(plain)
        plain_wall = time.perf_counter() - wall_t1

    t_arr = np.asarray(times)
    bounds, labels = month_bounds(cfg.start_date, t_arr[0], t_arr[-1])
    loads_nominal = thermal_loads(FluxSeries(t_arr, np.asarray(flux_nom)),
                                  bounds, labels)
    loads_sens = {
        p: thermal_loads(FluxSeries(t_arr, np.asarray(flux_sens[p])),
                         bounds, labels).energy_mj
        for p in driver.parameters
    }
    report = SensitivityReport(
        t_s=t_arr, probe_nominal=np.asarray(probe_nom),
        probe_sensitivity={p: np.asarray(v) for p, v in probe_sens.items()},
        flux_nominal=np.asarray(flux_nom),
        flux_sensitivity={p: np.asarray(v) for p, v in flux_sens.items()},
        loads_nominal=loads_nominal, loads_sensitivity=loads_sens,
        perturbation=perturbation, wall_seconds=wall_seconds,
        plain_wall_seconds=plain_wall,
    )
    if out_dir is not None:
        _write_sensitivity_outputs(Path(out_dir), report, driver.parameters)
    return report


def _write_sensitivity_outputs(out_dir: Path, report: SensitivityReport, parameters):
    delta = report.perturbation
    deltas = report.delta_loads()
    dE_total = np.zeros_like(report.loads_nominal.energy_mj)
    for p in parameters:
        dE_total = dE_total + deltas[p]
    rows = []
    zero = np.zeros_like(dE_total)
    by_param = {p: deltas.get(p, zero) for p in ("h11", "beta", "F", "D")}
    for k, label in enumerate(report.loads_nominal.labels):
        rows.append((label,
                     float(by_param["h11"][k] if "h11" in parameters else 0.0),
                     float(by_param["beta"][k] if "beta" in parameters else 0.0),
                     float(by_param["F"][k] if "F" in parameters else 0.0),
                     float(by_param["D"][k] if "D" in parameters else 0.0),
                     float(dE_total[k]), float(-dE_total[k])))
    _write_csv(out_dir / "sensitivity_loads.csv",
               ["month", "dE_h11", "dE_beta", "dE_F", "dE_D",
                "dE_total_plus", "dE_total_minus"], rows)

    probe_plus = taylor_expand(report.probe_nominal, report.probe_sensitivity, delta)
    probe_minus = taylor_expand(report.probe_nominal, report.probe_sensitivity,
                                delta.scaled(-1.0))
    header = ["t_seconds", "T_nominal_K"]
    columns = [report.t_s, report.probe_nominal]
    for p in parameters:
        header.append(f"dT_{p}_K")
        columns.append(report.probe_sensitivity[p]
                       * getattr(delta, {"h11": "dh11", "beta": "dbeta",
                                         "F": "dF", "D": "dD"}[p]))
    header += ["T_plus_K", "T_minus_K"]
    columns += [probe_plus, probe_minus]
    _write_csv(out_dir / "sensitivity_probe.csv", header,
               zip(*[np.asarray(c).tolist() for c in columns]))
    _write_csv(out_dir / "sensitivity_timing.csv",
               ["wall_seconds", "plain_wall_seconds", "cost_ratio"],
               [(report.wall_seconds, report.plain_wall_seconds,
                 report.cost_ratio())])
