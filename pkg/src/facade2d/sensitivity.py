"""Tangent-linear sensitivity of the temperature field to the exterior
boundary-condition parameters.

The four sensitivity fields (with respect to the wind coefficient h11, the
height exponent beta, the front-building height F and its distance D) satisfy
the same diffusion equation as the temperature, so they are advanced with the
same three-level kernel; only the exterior Robin right-hand sides differ.
The shadow-geometry derivatives are band densities obtained from one-sided
discrete perturbations of the indicator function, projected onto the edge
nodes so that the band integral is preserved.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .domain import DimensionlessProblem, ReferenceScales
from .environment import (
    ConvectionModel,
    EnvironmentSeries,
    ShadingGeometry,
    clamp_height,
    shadow_height,
)
from .solver import (
    DuFortFrankelStepper,
    ExplicitEulerStepper,
    FieldState,
    bootstrap_substep_count,
    cfl_limit,
)

__all__ = [
    "PerturbationVector",
    "SensitivityState",
    "dh_dh11",
    "dh_dbeta",
    "dchi_dF",
    "dchi_dD",
    "project_band",
    "taylor_expand",
    "SensitivityDriver",
]

PARAMETERS = ("h11", "beta", "F", "D")


@dataclass(frozen=True)
class PerturbationVector:
    """Parameter perturbations; the sign convention is the caller's."""

    dh11: float
    dbeta: float
    dF: float
    dD: float

    def __post_init__(self):
        for name in ("dh11", "dbeta", "dF", "dD"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def scaled(self, factor: float) -> "PerturbationVector":
        return PerturbationVector(self.dh11 * factor, self.dbeta * factor,
                                  self.dF * factor, self.dD * factor)


@dataclass
class SensitivityState:
    """Temperature state plus the four tangent fields at the same step."""

    temperature: FieldState
    theta: dict  # parameter name -> FieldState
    nominal: dict  # parameter name -> nominal value


def dh_dh11(y, t: float, model: ConvectionModel, env: EnvironmentSeries,
            y_floor: float = 0.0):
    """d h / d h11 on the exterior edge: (v/v0) (y/y0)^beta."""
    v = env.wind_at(t)
    yc = clamp_height(y, y_floor)
    return (v / model.v0) * (yc / model.y0) ** model.beta


def dh_dbeta(y, t: float, model: ConvectionModel, env: EnvironmentSeries,
             y_floor: float = 0.0):
    """d h / d beta: h11 (v/v0) ln(y/y0) (y/y0)^beta on clamped heights."""
    v = env.wind_at(t)
    yc = clamp_height(y, y_floor)
    ratio = yc / model.y0
    return model.h11 * (v / model.v0) * np.log(ratio) * ratio**model.beta


def project_band(y, height: float, lo: float, hi: float, density: float) -> np.ndarray:
    """Project a uniform band density onto edge nodes, preserving its integral.

    Each node receives the overlap fraction of its dual cell (half cells at
    the ends) so that the trapezoid quadrature of the nodal values equals
    ``density * (hi - lo)``.
    """
    y = np.asarray(y, dtype=float)
    if hi <= lo:
        return np.zeros_like(y)
    spacing = y[1] - y[0] if y.size > 1 else height
    cell_lo = np.maximum(y - 0.5 * spacing, 0.0)
    cell_hi = np.minimum(y + 0.5 * spacing, height)
    overlap = np.clip(np.minimum(cell_hi, hi) - np.maximum(cell_lo, lo), 0.0, None)
    return density * overlap / (cell_hi - cell_lo)


def dchi_dF(y, shadow: float, geom: ShadingGeometry, delta_f: float,
            side: str = "increase") -> np.ndarray:
    """Discrete d chi / d F as a nodal band density.

    A higher front building raises the shadow top from h to
    min(h + delta_f, H); the indicator drops from 1 to 0 on that band, giving
    the density -1/delta_f there.  ``side="decrease"`` mirrors the band below
    h (one-sided difference from the other direction).
    """
    if not delta_f > 0:
        raise ValueError("delta_f must be > 0")
    h = geom.facade_height
    if side == "increase":
        lo, hi = shadow, min(shadow + delta_f, h)
    elif side == "decrease":
        lo, hi = max(shadow - delta_f, 0.0), shadow
    else:
        raise ValueError("side must be 'increase' or 'decrease'")
    return project_band(y, h, lo, hi, -1.0 / delta_f)


def dchi_dD(y, shadow: float, geom: ShadingGeometry, delta_d: float,
            tan_theta: float, side: str = "increase") -> np.ndarray:
    """Discrete d chi / d D as a nodal band density.

    Moving the front building away lowers the shadow top from h to
    max(h - delta_d tan(theta), 0); the indicator rises on that band, giving
    +1/delta_d.  ``side="decrease"`` mirrors the band above h.
    """
    if not delta_d > 0:
        raise ValueError("delta_d must be > 0")
    if tan_theta < 0:
        raise ValueError("tan_theta must be >= 0")
    h = geom.facade_height
    if side == "increase":
        lo, hi = max(shadow - delta_d * tan_theta, 0.0), shadow
    elif side == "decrease":
        lo, hi = shadow, min(shadow + delta_d * tan_theta, h)
    else:
        raise ValueError("side must be 'increase' or 'decrease'")
    return project_band(y, h, lo, hi, 1.0 / delta_d)


def taylor_expand(nominal, sensitivities: dict, delta: PerturbationVector):
    """First-order estimate: nominal + sum_i Theta_i * delta_i.

    Works nodewise on fields and directly on scalar outputs (flux, loads):
    those functionals are linear in the temperature, so their sensitivities
    compose the same way.
    """
    steps = {"h11": delta.dh11, "beta": delta.dbeta, "F": delta.dF, "D": delta.dD}
    result = np.asarray(nominal, dtype=float).copy()
    for name, coeff in sensitivities.items():
        result = result + np.asarray(coeff, dtype=float) * steps[name]
    if np.ndim(nominal) == 0:
        return float(result)
    return result


class SensitivityDriver:
    """Co-steps the temperature and the four tangent fields with one kernel.

    The temperature problem supplies the grid, the Fourier numbers and its
    own boundary data; the driver derives the tangent boundary sources from
    the current exterior-surface temperature at the same time level the
    kernel samples its data (level n).
    """

    def __init__(self, problem: DimensionlessProblem, scales: ReferenceScales,
                 env: EnvironmentSeries, convection: ConvectionModel,
                 shading: ShadingGeometry, absorptivity: float,
                 band_df: Optional[float] = None, band_dd: Optional[float] = None,
                 parameters=PARAMETERS):
        self.problem = problem
        self.scales = scales
        self.env = env
        self.convection = convection
        self.shading = shading
        self.absorptivity = absorptivity
        grid = problem.grid
        self.y_m = grid.y * scales.length_y
        self.y_floor = 0.5 * grid.dy * scales.length_y
        cell = grid.dy * scales.length_y
        self.band_df = cell if band_df is None else band_df
        self.band_dd = cell if band_dd is None else band_dd
        self.parameters = tuple(parameters)
        unknown = set(self.parameters) - set(PARAMETERS)
        if unknown:
            raise ValueError(f"unknown sensitivity parameters {sorted(unknown)}")
        if "D" in self.parameters and env.tan_theta is None:
            warnings.warn(
                "environment series carries no beam geometry (cos_theta/tan_theta);"
                " the front-distance sensitivity is disabled",
                stacklevel=2,
            )
            self.parameters = tuple(p for p in self.parameters if p != "D")
        # Dimensionless conversion factors for the exterior Robin sources.
        self._coef_h = scales.length_x / scales.conductivity
        self._coef_q = scales.length_x / (scales.conductivity * scales.temperature_span)
        self._df = DuFortFrankelStepper(problem)
        self._zeros_nx = np.zeros(grid.nx)
        self._zeros_ny = np.zeros(grid.ny)

    # -- tangent boundary sources ------------------------------------------

    def _theta_edge_data(self, t_star: float, u_surface: np.ndarray, t_edges):
        """Per-parameter edge data: temperature Biot numbers, tangent rhs."""
        t_s = self.scales.from_star_time(t_star)
        (bi1, _), (bi2, _), (bi3, _), (bi4, _) = t_edges
        u_inf = (self.env.t_out_at(t_s) - self.scales.temperature) / self.scales.temperature_span
        drive = u_inf - u_surface
        shade = shadow_height(self.env.sunlit_at(t_s), self.shading.facade_height)
        q_dr = self.env.q_direct_at(t_s)
        sources = {}
        for name in self.parameters:
            if name == "h11":
                rhs = self._coef_h * dh_dh11(self.y_m, t_s, self.convection, self.env,
                                             self.y_floor) * drive
            elif name == "beta":
                rhs = self._coef_h * dh_dbeta(self.y_m, t_s, self.convection, self.env,
                                              self.y_floor) * drive
            elif name == "F":
                band = dchi_dF(self.y_m, shade, self.shading, self.band_df)
                rhs = self._coef_q * self.absorptivity * q_dr * band
            else:  # D
                tan = self.env.tan_theta_at(t_s) if q_dr > 0.0 else 0.0
                band = dchi_dD(self.y_m, shade, self.shading, self.band_dd, max(tan, 0.0))
                rhs = self._coef_q * self.absorptivity * q_dr * band
            sources[name] = (
                (bi1, np.ascontiguousarray(rhs)),
                (bi2, self._zeros_nx),
                (bi3, self._zeros_ny),
                (bi4, self._zeros_nx),
            )
        return sources

    # -- stepping -----------------------------------------------------------

    def initial_state(self, t0_star: float = 0.0) -> SensitivityState:
        """Bootstrap all five fields across the first step (CFL substeps)."""
        problem = self.problem
        grid = problem.grid
        limit = cfl_limit(grid, problem.fo_x, problem.fo_y)
        m = bootstrap_substep_count(problem.dt_star, limit)
        sub = ExplicitEulerStepper(problem, problem.dt_star / m)
        zeros = np.zeros(grid.shape())
        t_state = FieldState(problem.u0.copy(), problem.u0.copy(), 0, t0_star)
        thetas = {p: FieldState(zeros.copy(), zeros.copy(), 0, t0_star)
                  for p in self.parameters}
        for _ in range(m):
            t_state, thetas = self._advance(sub, t_state, thetas)
        t_state = FieldState(problem.u0.copy(), t_state.u_curr, 1, t0_star + problem.dt_star)
        thetas = {p: FieldState(zeros.copy(), s.u_curr, 1, t_state.t_star)
                  for p, s in thetas.items()}
        return SensitivityState(
            temperature=t_state, theta=thetas,
            nominal={"h11": self.convection.h11, "beta": self.convection.beta,
                     "F": self.shading.front_height, "D": self.shading.front_distance},
        )

    def _advance(self, stepper, t_state: FieldState, thetas: dict):
        t_star = t_state.t_star
        t_edges = stepper._edge_data(t_star)
        sources = self._theta_edge_data(t_star, t_state.u_curr[:, 0], t_edges)
        new_thetas = {p: stepper.step_with_edges(s, sources[p]) for p, s in thetas.items()}
        new_t = stepper.step_with_edges(t_state, t_edges)
        return new_t, new_thetas

    def step(self, state: SensitivityState) -> SensitivityState:
        new_t, new_thetas = self._advance(self._df, state.temperature, state.theta)
        return SensitivityState(temperature=new_t, theta=new_thetas, nominal=state.nominal)
