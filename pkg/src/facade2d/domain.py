"""Wall geometry, material properties, grid construction and nondimensionalisation.

The facade occupies ``[0, L] x [0, H]``: ``x`` runs through the wall thickness
(layers are stacked along ``x``, exterior surface at ``x = 0``), ``y`` runs up
the facade height.  All solver work happens on the unit square with the
distortion coefficients ``k*``, ``c*`` and the Fourier numbers carrying the
physics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

__all__ = [
    "Edge",
    "MaterialLayer",
    "WallAssembly",
    "ReferenceScales",
    "Grid2D",
    "DimensionlessProblem",
    "build_grid",
    "nondimensionalize",
    "dimensionalize",
    "biot_number",
]

# Relative tolerance for "node sits exactly on a layer interface".
_INTERFACE_SNAP = 1e-12


class Edge(IntEnum):
    """Boundary identifiers; numbering follows the domain sketch.

    LEFT is the exterior surface (x = 0), RIGHT the interior one (x = L),
    BOTTOM and TOP the ground-side and upper edges of the facade.
    """

    LEFT = 1
    TOP = 2
    RIGHT = 3
    BOTTOM = 4

    @property
    def is_vertical(self) -> bool:
        """True for the x = const edges (LEFT/RIGHT)."""
        return self in (Edge.LEFT, Edge.RIGHT)


@dataclass(frozen=True)
class MaterialLayer:
    """One homogeneous wall layer.

    Parameters
    ----------
    name : str
        Label used in reports.
    thickness : float
        Layer thickness along x [m].
    conductivity : float
        Thermal conductivity k [W/(m K)].
    volumetric_capacity : float
        Volumetric heat capacity c [J/(m3 K)].
    """

    name: str
    thickness: float
    conductivity: float
    volumetric_capacity: float

    def __post_init__(self):
        if not self.thickness > 0:
            raise ValueError(f"layer {self.name!r}: thickness must be > 0")
        if not self.conductivity > 0:
            raise ValueError(f"layer {self.name!r}: conductivity must be > 0")
        if not self.volumetric_capacity > 0:
            raise ValueError(f"layer {self.name!r}: volumetric capacity must be > 0")


@dataclass(frozen=True)
class WallAssembly:
    """Layered wall: contiguous layers along x, total thickness L, height H.

    ``width`` is carried as metadata only; it never enters the 2D model.
    """

    layers: tuple[MaterialLayer, ...]
    height: float
    length: float
    width: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValueError("wall needs at least one layer")
        if not self.height > 0:
            raise ValueError("height must be > 0")
        total = sum(layer.thickness for layer in self.layers)
        if abs(total - self.length) > _INTERFACE_SNAP * max(abs(self.length), 1.0):
            raise ValueError(
                f"layer thicknesses sum to {total!r} but declared length is {self.length!r}"
            )

    @property
    def interfaces(self) -> np.ndarray:
        """Cumulative layer boundaries [0, b1, ..., L]."""
        return np.concatenate(([0.0], np.cumsum([la.thickness for la in self.layers])))

    def layer_index_at(self, x: np.ndarray) -> np.ndarray:
        """Map x coordinates [m] to layer indices.

        A point exactly on an interface belongs to the layer on its +x side
        (within a 1e-12 relative snap, so grid nodes generated by linspace
        land deterministically).
        """
        x = np.asarray(x, dtype=float)
        if np.any(x < -_INTERFACE_SNAP * self.length) or np.any(
            x > self.length * (1 + _INTERFACE_SNAP)
        ):
            raise ValueError("coordinate outside the wall")
        inner = self.interfaces[1:-1]
        snap = _INTERFACE_SNAP * self.length
        idx = np.searchsorted(inner, x + snap, side="right")
        return idx.astype(int)


def _max_property(layers, attr):
    return max(getattr(la, attr) for la in layers)


@dataclass(frozen=True)
class ReferenceScales:
    """Reference quantities of the dimensionless transformation.

    ``u = (T - temperature) / temperature_span``; lengths are the wall
    thickness (x) and facade height (y); ``conductivity``/``capacity`` scale
    the distortion coefficients.
    """

    length_x: float
    length_y: float
    conductivity: float
    capacity: float
    temperature: float = 293.15
    temperature_span: float = 20.0
    time: float = 3600.0

    def __post_init__(self):
        for name in ("length_x", "length_y", "conductivity", "capacity", "temperature_span", "time"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    @classmethod
    def for_wall(cls, wall: WallAssembly, **overrides) -> "ReferenceScales":
        """Default scales: k0/c0 are the largest layer values, lengths L and H."""
        kwargs = dict(
            length_x=wall.length,
            length_y=wall.height,
            conductivity=_max_property(wall.layers, "conductivity"),
            capacity=_max_property(wall.layers, "volumetric_capacity"),
        )
        kwargs.update(overrides)
        return cls(**kwargs)

    @property
    def fourier_x(self) -> float:
        return self.conductivity * self.time / (self.capacity * self.length_x**2)

    @property
    def fourier_y(self) -> float:
        return self.conductivity * self.time / (self.capacity * self.length_y**2)

    def to_star_time(self, t_seconds):
        return np.asarray(t_seconds, dtype=float) / self.time

    def from_star_time(self, t_star):
        return np.asarray(t_star, dtype=float) * self.time


@dataclass(frozen=True)
class Grid2D:
    """Uniform node-centred grid on the unit square.

    ``kstar``/``cstar`` hold the per-node distortion coefficients.  Layers
    vary along x only, so both are 1D arrays of length ``nx``; node (i, j)
    uses ``kstar[j]``.  ``layer_index`` records the owning layer of each x
    node (interface nodes take the +x side).
    """

    nx: int
    ny: int
    x: np.ndarray
    y: np.ndarray
    kstar: np.ndarray
    cstar: np.ndarray
    layer_index: np.ndarray

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ValueError("need at least 3 nodes per direction")

    @property
    def dx(self) -> float:
        return 1.0 / (self.nx - 1)

    @property
    def dy(self) -> float:
        return 1.0 / (self.ny - 1)

    def face_kstar_x(self) -> np.ndarray:
        """Conductivity on the nx+1 x-faces (ghost faces copy the edge node).

        Interior faces take the harmonic mean of the adjacent node values,
        which keeps the steady 1D flux exact across layer jumps.
        """
        k = self.kstar
        faces = np.empty(self.nx + 1)
        faces[0] = k[0]
        faces[-1] = k[-1]
        faces[1:-1] = 2.0 * k[:-1] * k[1:] / (k[:-1] + k[1:])
        return faces

    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)


@dataclass(frozen=True)
class DimensionlessProblem:
    """Everything a stepper needs: grid, Fourier numbers, edges, IC, horizon.

    ``edges`` maps each :class:`Edge` to a boundary object exposing
    ``data(t_star) -> (bi, rhs)`` (see :mod:`facade2d.solver`).
    """

    grid: Grid2D
    fo_x: float
    fo_y: float
    edges: dict
    u0: np.ndarray
    t_final_star: float
    dt_star: float

    def __post_init__(self):
        if not (self.fo_x > 0 and self.fo_y > 0):
            raise ValueError("Fourier numbers must be > 0")
        if np.shape(self.u0) != self.grid.shape():
            raise ValueError("u0 shape does not match the grid")
        if not self.dt_star > 0:
            raise ValueError("dt_star must be > 0")
        missing = [e for e in Edge if e not in self.edges]
        if missing:
            raise ValueError(f"missing boundary data for {missing}")


def build_grid(wall: WallAssembly, nx: int, ny: int, scales: ReferenceScales) -> Grid2D:
    """Build the uniform dimensionless grid with per-node material properties."""
    if nx < 3 or ny < 3:
        raise ValueError("need at least 3 nodes per direction")
    x = np.linspace(0.0, 1.0, nx)
    y = np.linspace(0.0, 1.0, ny)
    layer_idx = wall.layer_index_at(x * wall.length)
    k_by_layer = np.array([la.conductivity for la in wall.layers])
    c_by_layer = np.array([la.volumetric_capacity for la in wall.layers])
    return Grid2D(
        nx=nx,
        ny=ny,
        x=x,
        y=y,
        kstar=k_by_layer[layer_idx] / scales.conductivity,
        cstar=c_by_layer[layer_idx] / scales.capacity,
        layer_index=layer_idx,
    )


def nondimensionalize(t_field, scales: ReferenceScales):
    """u = (T - T_ref) / dT, applied nodewise."""
    return (np.asarray(t_field, dtype=float) - scales.temperature) / scales.temperature_span


def dimensionalize(u_field, scales: ReferenceScales):
    """Inverse of :func:`nondimensionalize`."""
    return scales.temperature + scales.temperature_span * np.asarray(u_field, dtype=float)


def biot_number(h: float, scales: ReferenceScales, edge: Edge) -> float:
    """Biot number of a surface coefficient on the given edge.

    Vertical edges (x = const) scale with the wall thickness, horizontal ones
    with the facade height.
    """
    if np.any(np.asarray(h) < 0):
        raise ValueError("surface coefficient must be >= 0")
    length = scales.length_x if Edge(edge).is_vertical else scales.length_y
    return h * length / scales.conductivity
