"""Time-stepping kernels for the dimensionless 2D diffusion problem.

Four schemes share one spatial discretisation: second-order central
differences with harmonic-mean face conductivities, and Robin boundaries
closed by second-order ghost-node elimination.  The three-level explicit
scheme replaces the central node of the forward-Euler stencil by the average
of the new and old time levels, which removes the CFL restriction at the
price of a consistency condition on ``tau = (k_x/dx^2 + k_y/dy^2) dt^2``.

Boundary data are sampled at the time level where each scheme is consistent:
level n for the explicit schemes, n+1 for implicit Euler, and the stage
target times for the split scheme.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._kernels import BACKEND, stencil_step, thomas_many
from .domain import DimensionlessProblem, Edge, Grid2D, ReferenceScales

__all__ = [
    "BACKEND",
    "DivergenceError",
    "TauAccuracyWarning",
    "FieldState",
    "SchemeCoefficients",
    "SolverConfig",
    "AdiabaticEdge",
    "ConstantRobinEdge",
    "SampledRobinEdge",
    "DuFortFrankelStepper",
    "ExplicitEulerStepper",
    "ImplicitEulerStepper",
    "ADIStepper",
    "make_stepper",
    "solve_tridiagonal",
    "cfl_limit",
    "tau_diagnostic",
    "bootstrap_first_step",
    "dufort_frankel_coefficients",
]

SCHEMES = ("df", "explicit", "implicit", "adi")


class DivergenceError(RuntimeError):
    """A step produced non-finite values (or a linear solve failed)."""

    def __init__(self, step: int, message: Optional[str] = None):
        self.step = step
        super().__init__(message or f"non-finite field after step {step}")


class TauAccuracyWarning(UserWarning):
    """The three-level scheme is running outside its consistency regime."""


@dataclass
class FieldState:
    """Two consecutive time levels of the discrete field.

    ``u_curr`` is level n at time ``t_star``; ``u_prev`` is level n-1 (equal
    to ``u_curr`` for single-level schemes).
    """

    u_prev: np.ndarray
    u_curr: np.ndarray
    step: int = 0
    t_star: float = 0.0

    def __post_init__(self):
        self.u_prev = np.ascontiguousarray(self.u_prev, dtype=float)
        self.u_curr = np.ascontiguousarray(self.u_curr, dtype=float)
        if self.u_prev.shape != self.u_curr.shape:
            raise ValueError("time levels must have matching shapes")


@dataclass(frozen=True)
class SolverConfig:
    """Scheme selection and step size for a run."""

    scheme: str
    dt_star: float
    bootstrap_substeps: int = 10

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; pick one of {SCHEMES}")
        if not self.dt_star > 0:
            raise ValueError("dt_star must be > 0")


# ---------------------------------------------------------------------------
# Boundary data providers: anything with .data(t_star) -> (bi, rhs) arrays
# along the edge, where the discrete Robin closure is
#   k* du/dn + bi * u = rhs            (rhs = bi * u_inf + q*)
# ---------------------------------------------------------------------------

class AdiabaticEdge:
    """Homogeneous Neumann edge (bi = 0, rhs = 0)."""

    def __init__(self, n: int):
        self._bi = np.zeros(n)
        self._rhs = np.zeros(n)

    def data(self, t_star: float):
        return self._bi, self._rhs


class ConstantRobinEdge:
    """Robin edge with time-independent data."""

    def __init__(self, n: int, bi, u_inf=0.0, q_star=0.0):
        self._bi = np.ascontiguousarray(np.broadcast_to(np.asarray(bi, float), (n,)))
        rhs = self._bi * np.asarray(u_inf, float) + np.asarray(q_star, float)
        self._rhs = np.ascontiguousarray(np.broadcast_to(rhs, (n,)))

    def data(self, t_star: float):
        return self._bi, self._rhs


class SampledRobinEdge:
    """Robin edge driven by dimensional samplers.

    ``h_fn(coords_m, t_s)`` returns the surface coefficient along the edge,
    ``t_ambient_fn(t_s)`` the ambient temperature and ``q_fn(coords_m, t_s)``
    the absorbed flux; all three are evaluated at the dimensional time that
    corresponds to ``t_star`` and converted with the reference scales.
    """

    def __init__(self, edge: Edge, scales: ReferenceScales, coords_m: np.ndarray,
                 h_fn: Callable, t_ambient_fn: Callable,
                 q_fn: Optional[Callable] = None):
        self.edge = Edge(edge)
        self.scales = scales
        self.coords_m = np.asarray(coords_m, dtype=float)
        self.h_fn = h_fn
        self.t_ambient_fn = t_ambient_fn
        self.q_fn = q_fn
        self._length = scales.length_x if self.edge.is_vertical else scales.length_y

    def data(self, t_star: float):
        t_s = self.scales.from_star_time(t_star)
        h = np.broadcast_to(
            np.asarray(self.h_fn(self.coords_m, t_s), dtype=float), self.coords_m.shape
        )
        bi = h * self._length / self.scales.conductivity
        u_inf = (self.t_ambient_fn(t_s) - self.scales.temperature) / self.scales.temperature_span
        rhs = bi * u_inf
        if self.q_fn is not None:
            q = np.asarray(self.q_fn(self.coords_m, t_s), dtype=float)
            rhs = rhs + q * self._length / (
                self.scales.conductivity * self.scales.temperature_span
            )
        return np.ascontiguousarray(bi), np.ascontiguousarray(rhs)


# ---------------------------------------------------------------------------
# Scheme coefficients
# ---------------------------------------------------------------------------

def _diffusion_rates(grid: Grid2D, fo_x: float, fo_y: float):
    """Per-node rates a = Fo * k_face / (c* dT-free) in each direction.

    Everything varies along x only, so the rates are (nx,) arrays.
    """
    faces = grid.face_kstar_x()
    c = grid.cstar
    a_e = fo_x * faces[1:] / (c * grid.dx**2)
    a_w = fo_x * faces[:-1] / (c * grid.dx**2)
    a_y = fo_y * grid.kstar / (c * grid.dy**2)
    return a_e, a_w, a_y


@dataclass(frozen=True)
class SchemeCoefficients:
    """Per-node update weights of the three-level explicit scheme.

    ``lam_* = 2 dt a_*`` per face; the update is
    ``u^{n+1} = sig_e u_E + sig_w u_W + sig_n u_N + sig_s u_S + sig_prev u^{n-1}``
    and the weights sum to one exactly (constant fields are preserved).
    Arrays are (nx,) because the material varies along x only.
    """

    lam_e: np.ndarray
    lam_w: np.ndarray
    lam_n: np.ndarray
    lam_s: np.ndarray
    sig_e: np.ndarray
    sig_w: np.ndarray
    sig_n: np.ndarray
    sig_s: np.ndarray
    sig_prev: np.ndarray

    def identity_residual(self) -> float:
        total = self.sig_e + self.sig_w + self.sig_n + self.sig_s + self.sig_prev
        return float(np.max(np.abs(total - 1.0)))


def dufort_frankel_coefficients(grid: Grid2D, fo_x: float, fo_y: float,
                                dt_star: float) -> SchemeCoefficients:
    a_e, a_w, a_y = _diffusion_rates(grid, fo_x, fo_y)
    lam_e = 2.0 * dt_star * a_e
    lam_w = 2.0 * dt_star * a_w
    lam_y = 2.0 * dt_star * a_y
    big = 0.5 * (lam_e + lam_w + 2.0 * lam_y)
    denom = 1.0 + big
    return SchemeCoefficients(
        lam_e=lam_e, lam_w=lam_w, lam_n=lam_y, lam_s=lam_y,
        sig_e=lam_e / denom, sig_w=lam_w / denom,
        sig_n=lam_y / denom, sig_s=lam_y / denom,
        sig_prev=(1.0 - big) / denom,
    )


# ---------------------------------------------------------------------------
# Steppers
# ---------------------------------------------------------------------------

class _StepperBase:
    scheme = "base"

    def __init__(self, problem: DimensionlessProblem, dt_star: Optional[float] = None):
        self.problem = problem
        self.grid = problem.grid
        self.dt = float(problem.dt_star if dt_star is None else dt_star)
        if not self.dt > 0:
            raise ValueError("dt_star must be > 0")
        grid = self.grid
        self.edges = problem.edges
        # Ghost-elimination factors 2*dx / k* of the local boundary node.
        self.coef_w = 2.0 * grid.dx / grid.kstar[0]
        self.coef_e = 2.0 * grid.dx / grid.kstar[-1]
        self.coef_s = 2.0 * grid.dy / grid.kstar
        self.coef_n = 2.0 * grid.dy / grid.kstar

    def _edge_data(self, t_star: float):
        d = self.edges
        return (d[Edge.LEFT].data(t_star), d[Edge.TOP].data(t_star),
                d[Edge.RIGHT].data(t_star), d[Edge.BOTTOM].data(t_star))

    def _ghosts(self, u: np.ndarray, edge_data):
        (bi1, r1), (bi2, r2), (bi3, r3), (bi4, r4) = edge_data
        gw = u[:, 1] + self.coef_w * (r1 - bi1 * u[:, 0])
        ge = u[:, -2] + self.coef_e * (r3 - bi3 * u[:, -1])
        gs = u[1, :] + self.coef_s * (r4 - bi4 * u[0, :])
        gn = u[-2, :] + self.coef_n * (r2 - bi2 * u[-1, :])
        return (np.ascontiguousarray(gw), np.ascontiguousarray(ge),
                np.ascontiguousarray(gs), np.ascontiguousarray(gn))

    def initial_state(self, u0: np.ndarray, t0_star: float = 0.0) -> FieldState:
        return FieldState(u_prev=u0.copy(), u_curr=u0.copy(), step=0, t_star=t0_star)

    def _check(self, total: float, step: int):
        if not np.isfinite(total):
            raise DivergenceError(step)

    def step(self, state: FieldState) -> FieldState:  # pragma: no cover - abstract
        raise NotImplementedError


def _tile(arr_1d: np.ndarray, ny: int) -> np.ndarray:
    return np.ascontiguousarray(np.broadcast_to(arr_1d, (ny, arr_1d.size)))


class _KernelStepper(_StepperBase):
    """Shared driver for the two ghost-frame explicit schemes."""

    def _set_weights(self, c_e, c_w, c_n, c_s, c_c, c_p):
        ny = self.grid.ny
        self.c_e = _tile(c_e, ny)
        self.c_w = _tile(c_w, ny)
        self.c_n = _tile(c_n, ny)
        self.c_s = _tile(c_s, ny)
        self.c_c = _tile(c_c, ny)
        self.c_p = _tile(c_p, ny)

    def step_with_edges(self, state: FieldState, edge_data) -> FieldState:
        """Advance one step using externally supplied (bi, rhs) edge data.

        Lets several fields that share the same operator (the tangent fields)
        reuse one stepper with their own boundary sources.
        """
        gw, ge, gs, gn = self._ghosts(state.u_curr, edge_data)
        out = np.empty_like(state.u_curr)
        total = stencil_step(state.u_curr, state.u_prev, gw, ge, gs, gn,
                             self.c_e, self.c_w, self.c_n, self.c_s,
                             self.c_c, self.c_p, out)
        self._check(total, state.step + 1)
        return FieldState(u_prev=state.u_curr, u_curr=out,
                          step=state.step + 1, t_star=state.t_star + self.dt)

    def step(self, state: FieldState) -> FieldState:
        return self.step_with_edges(state, self._edge_data(state.t_star))


class DuFortFrankelStepper(_KernelStepper):
    """Three-level explicit scheme; needs a bootstrap to create level 1.

    The Robin closure treats the boundary node's own value with the same
    (n-1, n+1) time average the scheme applies to the stencil centre.  A
    plain level-n Robin term would couple a non-centred decay term to the
    leapfrog time integration, whose parasitic mode then grows at any step
    size large enough to be useful; the averaged form keeps the update
    explicit (the implicit half only rescales the boundary diagonal) and
    preserves both the unconditional stability and constant states exactly.
    """

    scheme = "df"

    def __init__(self, problem, dt_star=None, bootstrap_substeps: int = 10):
        super().__init__(problem, dt_star)
        self.bootstrap_substeps = bootstrap_substeps
        self.coefficients = dufort_frankel_coefficients(
            self.grid, problem.fo_x, problem.fo_y, self.dt
        )
        c = self.coefficients
        self._big = 0.5 * (c.lam_e + c.lam_w + c.lam_n + c.lam_s)
        self._weights_key = None

    def _refresh_weights(self, bi1, bi2, bi3, bi4):
        key = (bi1.tobytes(), bi2.tobytes(), bi3.tobytes(), bi4.tobytes())
        if key == self._weights_key:
            return
        c = self.coefficients
        ny, nx = self.grid.shape()
        extra = np.zeros((ny, nx))
        extra[:, 0] += 0.5 * c.lam_w[0] * self.coef_w * bi1
        extra[:, -1] += 0.5 * c.lam_e[-1] * self.coef_e * bi3
        extra[0, :] += 0.5 * c.lam_s * self.coef_s * bi4
        extra[-1, :] += 0.5 * c.lam_n * self.coef_n * bi2
        denom = 1.0 + self._big + extra
        self.c_e = np.ascontiguousarray(c.lam_e / denom)
        self.c_w = np.ascontiguousarray(c.lam_w / denom)
        self.c_n = np.ascontiguousarray(c.lam_n / denom)
        self.c_s = np.ascontiguousarray(c.lam_s / denom)
        self.c_c = np.zeros((ny, nx))
        self.c_p = np.ascontiguousarray((1.0 - self._big - extra) / denom)
        self._weights_key = key

    def step_with_edges(self, state: FieldState, edge_data) -> FieldState:
        (bi1, r1), (bi2, r2), (bi3, r3), (bi4, r4) = edge_data
        self._refresh_weights(bi1, bi2, bi3, bi4)
        u = state.u_curr
        gw = np.ascontiguousarray(u[:, 1] + self.coef_w * r1)
        ge = np.ascontiguousarray(u[:, -2] + self.coef_e * r3)
        gs = np.ascontiguousarray(u[1, :] + self.coef_s * r4)
        gn = np.ascontiguousarray(u[-2, :] + self.coef_n * r2)
        out = np.empty_like(u)
        total = stencil_step(u, state.u_prev, gw, ge, gs, gn,
                             self.c_e, self.c_w, self.c_n, self.c_s,
                             self.c_c, self.c_p, out)
        self._check(total, state.step + 1)
        return FieldState(u_prev=u, u_curr=out,
                          step=state.step + 1, t_star=state.t_star + self.dt)

    def initial_state(self, u0: np.ndarray, t0_star: float = 0.0) -> FieldState:
        return bootstrap_first_step(u0, self.problem, self.dt, t0_star=t0_star,
                                    substeps=self.bootstrap_substeps)


class ExplicitEulerStepper(_KernelStepper):
    """Forward Euler with central differences; CFL-limited."""

    scheme = "explicit"

    def __init__(self, problem, dt_star=None):
        super().__init__(problem, dt_star)
        a_e, a_w, a_y = _diffusion_rates(self.grid, problem.fo_x, problem.fo_y)
        b_e = self.dt * a_e
        b_w = self.dt * a_w
        b_y = self.dt * a_y
        center = 1.0 - (b_e + b_w + 2.0 * b_y)
        zero = np.zeros_like(b_e)
        self._set_weights(b_e, b_w, b_y, b_y, center, zero)


class ImplicitEulerStepper(_StepperBase):
    """Backward Euler; the 5-point system is factorised once and reused while
    the boundary Biot data stay unchanged (they do for constant-coefficient
    runs; time-varying coefficients trigger a refactorisation)."""

    scheme = "implicit"
    residual_tol = 1e-10

    def __init__(self, problem, dt_star=None):
        super().__init__(problem, dt_star)
        grid = self.grid
        a_e, a_w, a_y = _diffusion_rates(grid, problem.fo_x, problem.fo_y)
        self.b_e = self.dt * a_e
        self.b_w = self.dt * a_w
        self.b_y = self.dt * a_y
        self._base = self._assemble_base()
        self._cached_bi = None
        self._lu = None

    def _assemble_base(self) -> sp.csr_matrix:
        ny, nx = self.grid.shape()
        n = ny * nx
        diag = np.tile(1.0 + self.b_e + self.b_w + 2.0 * self.b_y, ny)
        east = np.tile(-self.b_e, ny)
        west = np.tile(-self.b_w, ny)
        north = np.tile(-self.b_y, ny)
        south = north.copy()
        # Ghost elimination folds the outward neighbour onto the inner one.
        east2 = east.reshape(ny, nx)
        west2 = west.reshape(ny, nx)
        east2[:, 0] += -self.b_w[0]
        west2[:, -1] += -self.b_e[-1]
        north2 = north.reshape(ny, nx)
        south2 = south.reshape(ny, nx)
        north2[0, :] += -self.b_y
        south2[-1, :] += -self.b_y
        rows, cols, vals = [], [], []
        idx = np.arange(n).reshape(ny, nx)

        def add(r, c, v):
            rows.append(r.ravel())
            cols.append(c.ravel())
            vals.append(v.ravel())

        add(idx, idx, diag.reshape(ny, nx))
        add(idx[:, :-1], idx[:, 1:], east2[:, :-1])
        add(idx[:, 1:], idx[:, :-1], west2[:, 1:])
        add(idx[:-1, :], idx[1:, :], north2[:-1, :])
        add(idx[1:, :], idx[:-1, :], south2[1:, :])
        m = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n),
        )
        return m.tocsr()

    def _robin_diagonal(self, bi1, bi2, bi3, bi4) -> np.ndarray:
        ny, nx = self.grid.shape()
        adj = np.zeros((ny, nx))
        adj[:, 0] += self.b_w[0] * self.coef_w * bi1
        adj[:, -1] += self.b_e[-1] * self.coef_e * bi3
        adj[0, :] += self.b_y * self.coef_s * bi4
        adj[-1, :] += self.b_y * self.coef_n * bi2
        return adj.ravel()

    def _boundary_load(self, r1, r2, r3, r4) -> np.ndarray:
        ny, nx = self.grid.shape()
        load = np.zeros((ny, nx))
        load[:, 0] += self.b_w[0] * self.coef_w * r1
        load[:, -1] += self.b_e[-1] * self.coef_e * r3
        load[0, :] += self.b_y * self.coef_s * r4
        load[-1, :] += self.b_y * self.coef_n * r2
        return load

    def step(self, state: FieldState) -> FieldState:
        t_next = state.t_star + self.dt
        (bi1, r1), (bi2, r2), (bi3, r3), (bi4, r4) = self._edge_data(t_next)
        key = (bi1, bi2, bi3, bi4)
        if self._lu is None or not all(
            np.array_equal(a, b) for a, b in zip(key, self._cached_bi)
        ):
            matrix = self._base + sp.diags(self._robin_diagonal(bi1, bi2, bi3, bi4))
            try:
                self._lu = spla.splu(matrix.tocsc())
            except RuntimeError as exc:
                raise DivergenceError(state.step + 1, f"linear solve failed: {exc}")
            self._matrix = matrix.tocsr()
            self._cached_bi = tuple(np.array(a, copy=True) for a in key)
        rhs = state.u_curr + self._boundary_load(r1, r2, r3, r4)
        b = rhs.ravel()
        x = self._lu.solve(b)
        res = np.linalg.norm(self._matrix @ x - b)
        scale = max(np.linalg.norm(b), 1e-300)
        if not np.isfinite(res) or res > self.residual_tol * scale:
            raise DivergenceError(
                state.step + 1,
                f"implicit solve residual {res / scale:.3e} above {self.residual_tol:g}",
            )
        out = x.reshape(self.grid.shape())
        self._check(float(out.sum()), state.step + 1)
        return FieldState(u_prev=state.u_curr, u_curr=out,
                          step=state.step + 1, t_star=t_next)


class ADIStepper(_StepperBase):
    """Peaceman-Rachford splitting: x-implicit half step, then y-implicit."""

    scheme = "adi"

    def __init__(self, problem, dt_star=None):
        super().__init__(problem, dt_star)
        a_e, a_w, a_y = _diffusion_rates(self.grid, problem.fo_x, problem.fo_y)
        self.L_e = 0.5 * self.dt * a_e
        self.L_w = 0.5 * self.dt * a_w
        self.L_y = 0.5 * self.dt * a_y

    def _solve_x(self, rhs, bi1, bi3):
        ny, nx = self.grid.shape()
        d = np.broadcast_to(1.0 + self.L_e + self.L_w, (ny, nx)).copy()
        dl = np.broadcast_to(-self.L_w, (ny, nx)).copy()
        du = np.broadcast_to(-self.L_e, (ny, nx)).copy()
        du[:, 0] = -(self.L_e[0] + self.L_w[0])
        dl[:, -1] = -(self.L_e[-1] + self.L_w[-1])
        d[:, 0] += self.L_w[0] * self.coef_w * bi1
        d[:, -1] += self.L_e[-1] * self.coef_e * bi3
        out = np.empty_like(rhs)
        if thomas_many(dl, d, du, np.ascontiguousarray(rhs), out):
            raise np.linalg.LinAlgError("zero pivot in x sweep")
        return out

    def _solve_y(self, rhs_t, bi2, bi4):
        ny, nx = self.grid.shape()
        base = 1.0 + 2.0 * self.L_y
        d = np.broadcast_to(base[:, None], (nx, ny)).copy()
        dl = np.broadcast_to(-self.L_y[:, None], (nx, ny)).copy()
        du = dl.copy()
        du[:, 0] = -2.0 * self.L_y
        dl[:, -1] = -2.0 * self.L_y
        d[:, 0] += self.L_y * self.coef_s * bi4
        d[:, -1] += self.L_y * self.coef_n * bi2
        out = np.empty_like(rhs_t)
        if thomas_many(dl, d, du, np.ascontiguousarray(rhs_t), out):
            raise np.linalg.LinAlgError("zero pivot in y sweep")
        return out

    def step(self, state: FieldState) -> FieldState:
        u = state.u_curr
        t_half = state.t_star + 0.5 * self.dt
        t_full = state.t_star + self.dt
        (bi1, r1), (bi2, r2), (bi3, r3), (bi4, r4) = self._edge_data(t_half)

        # Stage 1: implicit in x, explicit in y (ghosts at the stage target).
        gs = u[1, :] + self.coef_s * (r4 - bi4 * u[0, :])
        gn = u[-2, :] + self.coef_n * (r2 - bi2 * u[-1, :])
        rhs = u + self.L_y * (np.vstack((u[1:, :], gn)) - 2.0 * u
                              + np.vstack((gs, u[:-1, :])))
        rhs[:, 0] += self.L_w[0] * self.coef_w * r1
        rhs[:, -1] += self.L_e[-1] * self.coef_e * r3
        u_half = self._solve_x(rhs, bi1, bi3)

        # Stage 2: implicit in y, explicit in x.
        (bi1, r1), (bi2, r2), (bi3, r3), (bi4, r4) = self._edge_data(t_full)
        gw = u_half[:, 1] + self.coef_w * (r1 - bi1 * u_half[:, 0])
        ge = u_half[:, -2] + self.coef_e * (r3 - bi3 * u_half[:, -1])
        east = np.hstack((u_half[:, 1:], ge[:, None]))
        west = np.hstack((gw[:, None], u_half[:, :-1]))
        rhs2 = (u_half + self.L_e * (east - u_half) + self.L_w * (west - u_half)).T.copy()
        rhs2[:, 0] += self.L_y * self.coef_s * r4
        rhs2[:, -1] += self.L_y * self.coef_n * r2
        out = np.ascontiguousarray(self._solve_y(rhs2, bi2, bi4).T)

        self._check(float(out.sum()), state.step + 1)
        return FieldState(u_prev=state.u_curr, u_curr=out,
                          step=state.step + 1, t_star=t_full)


_STEPPERS = {
    "df": DuFortFrankelStepper,
    "explicit": ExplicitEulerStepper,
    "implicit": ImplicitEulerStepper,
    "adi": ADIStepper,
}


def make_stepper(problem: DimensionlessProblem, config: SolverConfig) -> _StepperBase:
    cls = _STEPPERS[config.scheme]
    if config.scheme == "df":
        return cls(problem, config.dt_star, bootstrap_substeps=config.bootstrap_substeps)
    return cls(problem, config.dt_star)


# ---------------------------------------------------------------------------
# Tridiagonal solve, CFL limit, accuracy diagnostic, bootstrap
# ---------------------------------------------------------------------------

def solve_tridiagonal(lower, diag, upper, rhs) -> np.ndarray:
    """Thomas solve of one tridiagonal system.

    ``lower`` and ``upper`` have length n-1 (sub/super diagonals), ``diag``
    and ``rhs`` length n.  Raises ``numpy.linalg.LinAlgError`` on a zero
    pivot.
    """
    diag = np.asarray(diag, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = diag.size
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.size != n - 1 or upper.size != n - 1 or rhs.size != n:
        raise ValueError("inconsistent system dimensions")
    dl = np.zeros((1, n))
    du = np.zeros((1, n))
    dl[0, 1:] = lower
    du[0, :-1] = upper
    out = np.empty((1, n))
    if thomas_many(dl, np.ascontiguousarray(diag[None, :]), du,
                   np.ascontiguousarray(rhs[None, :]), out):
        raise np.linalg.LinAlgError("zero pivot in tridiagonal solve")
    return out[0]


def cfl_limit(grid: Grid2D, fo_x: float, fo_y: Optional[float] = None) -> float:
    """Largest stable forward-Euler step (positivity of the centre weight).

    Per node the bound is c* / (Fo_x (k_E + k_W)/dx^2 + 2 Fo_y k*/dy^2); the
    most restrictive node wins.  Reduces to
    (dx dy)^2 / (2 Fo (dx^2 + dy^2)) on a homogeneous grid.
    """
    fo_y = fo_x if fo_y is None else fo_y
    a_e, a_w, a_y = _diffusion_rates(grid, fo_x, fo_y)
    return float(1.0 / np.max(a_e + a_w + 2.0 * a_y))


def tau_diagnostic(grid: Grid2D, dt_star: float, fo_x: float,
                   fo_y: Optional[float] = None, warn: bool = True) -> float:
    """Consistency indicator of the three-level scheme; warns above 0.1."""
    fo_y = fo_x if fo_y is None else fo_y
    per_node = (fo_x * grid.kstar / grid.dx**2
                + fo_y * grid.kstar / grid.dy**2) * dt_star**2 / grid.cstar
    tau = float(np.max(per_node))
    if warn and tau > 0.1:
        warnings.warn(
            f"tau = {tau:.3g} > 0.1: time accuracy is degraded at this step size",
            TauAccuracyWarning,
            stacklevel=2,
        )
    return tau


def bootstrap_substep_count(dt_star: float, limit: float, start: int = 10,
                            cap: int = 1000) -> int:
    """Substep count for the explicit start: doubling from ``start`` to ``cap``."""
    m = start
    while dt_star / m > limit * (1.0 + 1e-12) and m < cap:
        m = min(2 * m, cap)
    if dt_star / m > limit * (1.0 + 1e-12):
        raise DivergenceError(
            0, f"bootstrap cannot satisfy the CFL limit {limit:.3e} with {cap} substeps"
        )
    return m


def bootstrap_first_step(u0: np.ndarray, problem: DimensionlessProblem,
                         dt_star: float, t0_star: float = 0.0,
                         substeps: int = 10) -> FieldState:
    """Create the two levels the three-level scheme needs.

    Level -1 is a copy of the initial field; level 1 comes from CFL-checked
    forward-Euler substeps across the first full step.
    """
    limit = cfl_limit(problem.grid, problem.fo_x, problem.fo_y)
    m = bootstrap_substep_count(dt_star, limit, start=substeps)
    sub = ExplicitEulerStepper(problem, dt_star / m)
    state = FieldState(u_prev=u0.copy(), u_curr=u0.copy(), step=0, t_star=t0_star)
    for _ in range(m):
        state = sub.step(state)
    return FieldState(u_prev=u0.copy(), u_curr=state.u_curr,
                      step=1, t_star=t0_star + dt_star)
