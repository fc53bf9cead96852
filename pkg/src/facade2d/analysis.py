"""Physical outputs and model-quality metrics.

Inside-surface flux, time-integrated thermal loads, the three spatial RMS
error metrics and the CPU-time ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import Grid2D, ReferenceScales

__all__ = [
    "FluxSeries",
    "ThermalLoads",
    "ErrorReport",
    "inside_flux",
    "inside_flux_profile",
    "thermal_loads",
    "grid_weights",
    "series_weights",
    "error_metric",
    "cpu_ratio",
]

JOULES_PER_MJ = 1.0e6


@dataclass(frozen=True)
class FluxSeries:
    """Height-averaged inside-surface flux J(t) [W/m2] on the output cadence."""

    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.t.shape != self.values.shape:
            raise ValueError("t and values must have the same shape")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("flux series contains non-finite values")


@dataclass(frozen=True)
class ThermalLoads:
    """Per-interval time integrals of J, reported in MJ/m2."""

    labels: tuple
    bounds: np.ndarray  # (n_intervals + 1,) seconds
    energy_mj: np.ndarray

    def __post_init__(self):
        if len(self.labels) != self.energy_mj.size or self.bounds.size != len(self.labels) + 1:
            raise ValueError("inconsistent loads table")


@dataclass(frozen=True)
class ErrorReport:
    """Error metrics of one model run against a reference."""

    eps2: float
    eps2_normalized: float
    r_cpu: float
    scheme: str = ""
    dt_star: float = float("nan")
    dx_star: float = float("nan")
    status: str = "ok"


def inside_flux_profile(u: np.ndarray, grid: Grid2D, scales: ReferenceScales) -> np.ndarray:
    """Dimensional flux -k dT/dx at x = L for every height node [W/m2].

    One-sided second-order stencil on the last three nodes, valid only while
    they share the inside layer (the quadratic extrapolation is meaningless
    across a conductivity jump).  When the grid leaves fewer than three nodes
    in that layer, the conservative two-point face flux is used instead; it
    is first-order in transients but reproduces the discrete steady flux
    exactly.
    """
    last_layer = grid.layer_index[-1]
    if grid.nx >= 3 and np.all(grid.layer_index[-3:] == last_layer):
        du_dxstar = (3.0 * u[:, -1] - 4.0 * u[:, -2] + u[:, -3]) / (2.0 * grid.dx)
    else:
        du_dxstar = (u[:, -1] - u[:, -2]) / grid.dx
    dT_dx = du_dxstar * scales.temperature_span / scales.length_x
    k_inside = grid.kstar[-1] * scales.conductivity
    return -k_inside * dT_dx


def inside_flux(u: np.ndarray, grid: Grid2D, scales: ReferenceScales) -> float:
    """Height-averaged inside-surface flux (1/H) integral of -k dT/dx dy."""
    profile = inside_flux_profile(u, grid, scales)
    return float(np.trapezoid(profile, grid.y))


def thermal_loads(flux: FluxSeries, bounds, labels=None) -> ThermalLoads:
    """Trapezoidal time integral of J over consecutive intervals.

    ``bounds`` are the interval edges in seconds (n+1 values for n
    intervals); they must lie inside the sampled span.  Splitting is exact
    for the trapezoid rule, so loads are additive over adjacent intervals.
    """
    bounds = np.asarray(bounds, dtype=float)
    if bounds.size < 2 or np.any(np.diff(bounds) <= 0):
        raise ValueError("need at least one non-empty interval")
    t, j = flux.t, flux.values
    if t.size < 2:
        raise ValueError("flux series too short to integrate")
    tol = 1e-9 * max(t[-1] - t[0], 1.0)
    if bounds[0] < t[0] - tol or bounds[-1] > t[-1] + tol:
        raise ValueError("interval outside the sampled span")
    cumulative = np.concatenate(([0.0], np.cumsum(0.5 * (j[1:] + j[:-1]) * np.diff(t))))
    at_bounds = np.interp(bounds, t, cumulative)
    energy = np.diff(at_bounds) / JOULES_PER_MJ
    if labels is None:
        labels = tuple(f"interval_{i}" for i in range(energy.size))
    return ThermalLoads(labels=tuple(labels), bounds=bounds, energy_mj=energy)


def grid_weights(grid: Grid2D) -> np.ndarray:
    """Trapezoid quadrature weights over the unit square, normalised to 1."""
    wx = np.ones(grid.nx)
    wx[0] = wx[-1] = 0.5
    wy = np.ones(grid.ny)
    wy[0] = wy[-1] = 0.5
    return np.outer(wy, wx) * (grid.dx * grid.dy)


def series_weights(t) -> np.ndarray:
    """Trapezoid weights over a 1D sample axis, normalised to 1."""
    t = np.asarray(t, dtype=float)
    if t.size < 2:
        return np.ones(t.size)
    w = np.zeros(t.size)
    dt = np.diff(t)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    return w / (t[-1] - t[0])


def error_metric(kind: str, phi, phi_ref, grid: Grid2D | None = None,
                 weights=None) -> float:
    """Weighted RMS of (phi - phi_ref), optionally normalised.

    ``kind``: "l2" uses the raw difference, "normalized" divides by the range
    of the reference, "relative" divides pointwise by the reference (raising
    when the reference is too close to zero anywhere, since the pointwise
    quotient is then meaningless).
    """
    phi = np.asarray(phi, dtype=float)
    phi_ref = np.asarray(phi_ref, dtype=float)
    if phi.shape != phi_ref.shape:
        raise ValueError("fields must share a grid")
    if weights is None:
        weights = grid_weights(grid) if grid is not None else np.full(phi.shape, 1.0 / phi.size)
    weights = np.asarray(weights, dtype=float)
    diff = phi - phi_ref
    if kind == "l2":
        pass
    elif kind == "normalized":
        span = float(phi_ref.max() - phi_ref.min())
        if span == 0.0:
            raise ValueError("reference field has zero range")
        diff = diff / span
    elif kind == "relative":
        floor = 1e-14 * max(1.0, float(np.max(np.abs(phi_ref))))
        bad = np.abs(phi_ref) < floor
        if np.any(bad):
            node = tuple(int(k) for k in np.unravel_index(int(np.argmax(bad)),
                                                          phi_ref.shape))
            raise ValueError(
                f"relative error undefined: |reference| < {floor:g} at node {node}"
            )
        diff = diff / phi_ref
    else:
        raise ValueError("kind must be 'l2', 'normalized' or 'relative'")
    return float(np.sqrt(np.sum(weights * diff**2)))


def cpu_ratio(measured: float, reference: float) -> float:
    """Wall-clock ratio against a reference run (implicit Euler by default)."""
    if reference <= 0:
        raise ValueError("reference time must be > 0")
    if measured < 0:
        raise ValueError("measured time must be >= 0")
    return measured / reference
