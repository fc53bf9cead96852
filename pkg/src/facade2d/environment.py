"""Exterior boundary condition building blocks.

Wind- and height-dependent surface coefficient, shadow geometry from a sunlit
area ratio, short-wave flux decomposition, and ingestion of the weather /
shading time-series file.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .domain import Edge

__all__ = [
    "EnvironmentFormatError",
    "EnvironmentSeries",
    "ConvectionModel",
    "ShadingGeometry",
    "BoundarySpec",
    "surface_coefficient",
    "mean_surface_coefficient",
    "shadow_height",
    "sunlit_indicator",
    "incident_flux",
    "load_environment",
]

REQUIRED_COLUMNS = (
    "t_seconds",
    "T_out_K",
    "T_in_K",
    "wind_ms",
    "q_diff_Wm2",
    "q_refl_Wm2",
    "sunlit_ratio",
)


class EnvironmentFormatError(ValueError):
    """Raised for malformed weather/shading files."""


@dataclass(frozen=True)
class ConvectionModel:
    """Exterior surface coefficient h(y, t) = h10 + h11 * (v/v0) * (y/y0)**beta."""

    h10: float
    h11: float
    beta: float
    v0: float = 1.0
    y0: float = 1.0

    def __post_init__(self):
        if self.h10 < 0 or self.h11 < 0:
            raise ValueError("h10 and h11 must be >= 0")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")


@dataclass(frozen=True)
class ShadingGeometry:
    """Front building of height F at distance D, facing a facade of height H."""

    front_height: float
    front_distance: float
    facade_height: float

    def __post_init__(self):
        if self.front_height < 0:
            raise ValueError("front height must be >= 0")
        if not self.front_distance > 0:
            raise ValueError("front distance must be > 0")
        if not self.facade_height > 0:
            raise ValueError("facade height must be > 0")


class EnvironmentSeries:
    """Uniformly sampled climate and shading series.

    All arrays share the time axis ``t`` [s].  ``q_direct`` is the direct
    short-wave flux on the facade plane (already projected); ``cos_theta`` and
    ``tan_theta`` are optional beam-geometry columns used by the shadow
    sensitivities.  Sampling uses zero-order hold by default, linear
    interpolation when constructed with ``interpolation="linear"``.
    """

    def __init__(self, t, t_out, t_in, wind, q_direct, q_diffuse, q_reflected,
                 sunlit, cos_theta=None, tan_theta=None, interpolation="hold"):
        self.t = np.asarray(t, dtype=float)
        self.t_out = np.asarray(t_out, dtype=float)
        self.t_in = np.asarray(t_in, dtype=float)
        self.wind = np.asarray(wind, dtype=float)
        self.q_direct = np.asarray(q_direct, dtype=float)
        self.q_diffuse = np.asarray(q_diffuse, dtype=float)
        self.q_reflected = np.asarray(q_reflected, dtype=float)
        self.sunlit = np.asarray(sunlit, dtype=float)
        self.cos_theta = None if cos_theta is None else np.asarray(cos_theta, dtype=float)
        self.tan_theta = None if tan_theta is None else np.asarray(tan_theta, dtype=float)
        if interpolation not in ("hold", "linear"):
            raise ValueError("interpolation must be 'hold' or 'linear'")
        self.interpolation = interpolation
        self._validate()

    def _validate(self):
        n = self.t.size
        if n == 0:
            raise EnvironmentFormatError("empty series")
        for name in ("t_out", "t_in", "wind", "q_direct", "q_diffuse", "q_reflected", "sunlit"):
            if getattr(self, name).shape != (n,):
                raise EnvironmentFormatError(f"column {name} has wrong length")
        if n > 1:
            steps = np.diff(self.t)
            if np.any(steps <= 0):
                raise EnvironmentFormatError("timestamps must be strictly increasing")
            if np.any(np.abs(steps - steps[0]) > 1e-9 * max(abs(steps[0]), 1.0)):
                raise EnvironmentFormatError("timestamps must be uniform")
        if np.any(self.wind < 0):
            raise EnvironmentFormatError("wind speed must be >= 0")
        for name in ("q_direct", "q_diffuse", "q_reflected"):
            if np.any(getattr(self, name) < 0):
                raise EnvironmentFormatError(f"{name} must be >= 0")
        if np.any((self.sunlit < 0) | (self.sunlit > 1)):
            raise EnvironmentFormatError("sunlit ratio must lie in [0, 1]")
        if not np.all(np.isfinite(self.t_out)) or not np.all(np.isfinite(self.t_in)):
            raise EnvironmentFormatError("temperatures must be finite")

    def __len__(self):
        return self.t.size

    @property
    def t_start(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def step(self) -> float:
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else 0.0

    def _check_span(self, t: float):
        tol = 1e-9 * max(self.t_end - self.t_start, 1.0)
        if t < self.t_start - tol or t > self.t_end + tol:
            raise ValueError(
                f"t={t} outside the series span [{self.t_start}, {self.t_end}]"
            )

    def index_at(self, t: float) -> int:
        self._check_span(t)
        if self.t.size == 1:
            return 0
        i = int((t - self.t_start) // self.step)
        return min(max(i, 0), self.t.size - 1)

    def _sample(self, values: np.ndarray, t: float) -> float:
        if self.interpolation == "linear":
            self._check_span(t)
            return float(np.interp(t, self.t, values))
        return float(values[self.index_at(t)])

    def t_out_at(self, t):
        return self._sample(self.t_out, t)

    def t_in_at(self, t):
        return self._sample(self.t_in, t)

    def wind_at(self, t):
        return self._sample(self.wind, t)

    def q_direct_at(self, t):
        return self._sample(self.q_direct, t)

    def q_diffuse_at(self, t):
        return self._sample(self.q_diffuse, t)

    def q_reflected_at(self, t):
        return self._sample(self.q_reflected, t)

    def sunlit_at(self, t):
        return self._sample(self.sunlit, t)

    def tan_theta_at(self, t):
        if self.tan_theta is None:
            raise ValueError("series has no beam geometry (tan_theta/cos_theta)")
        return self._sample(self.tan_theta, t)

    def replace(self, **arrays) -> "EnvironmentSeries":
        """Copy with some columns swapped out (used by hypothesis toggles)."""
        kwargs = dict(
            t=self.t, t_out=self.t_out, t_in=self.t_in, wind=self.wind,
            q_direct=self.q_direct, q_diffuse=self.q_diffuse,
            q_reflected=self.q_reflected, sunlit=self.sunlit,
            cos_theta=self.cos_theta, tan_theta=self.tan_theta,
            interpolation=self.interpolation,
        )
        kwargs.update(arrays)
        return EnvironmentSeries(**kwargs)


@dataclass(frozen=True)
class BoundarySpec:
    """Dimensional Robin data for one edge.

    ``h`` maps (y, t) to the surface coefficient, ``t_ambient`` maps t to the
    ambient temperature and ``q`` maps (y, t) to the absorbed short-wave flux.
    An adiabatic edge carries no samplers at all.
    """

    edge: Edge
    kind: str = "robin"
    h: Optional[Callable] = None
    t_ambient: Optional[Callable] = None
    q: Optional[Callable] = None
    absorptivity: float = 1.0

    def __post_init__(self):
        if self.kind not in ("robin", "adiabatic"):
            raise ValueError("kind must be 'robin' or 'adiabatic'")
        if not 0.0 <= self.absorptivity <= 1.0:
            raise ValueError("absorptivity must lie in [0, 1]")
        if self.kind == "adiabatic":
            if self.h is not None or self.q is not None:
                raise ValueError("adiabatic edge cannot carry h or q samplers")
        else:
            if self.h is None or self.t_ambient is None:
                raise ValueError("robin edge needs h and ambient temperature samplers")


def clamp_height(y, y_floor: float):
    """Clamp heights away from y = 0 (removes the log singularity of d h/d beta)."""
    return np.maximum(np.asarray(y, dtype=float), y_floor)


def surface_coefficient(model: ConvectionModel, y, t: float, env: EnvironmentSeries,
                        y_floor: float = 0.0):
    """h(y, t) for the exterior edge; wind sampled per the series' rule."""
    v = env.wind_at(t)
    yc = clamp_height(y, y_floor)
    return model.h10 + model.h11 * (v / model.v0) * (yc / model.y0) ** model.beta


def mean_surface_coefficient(model: ConvectionModel, env: EnvironmentSeries,
                             height: float, t_final: Optional[float] = None,
                             n_heights: int = 201) -> float:
    """Trapezoidal double average of h over y in [0, H] and the series span."""
    if len(env) == 0:
        raise ValueError("empty series")
    t_final = env.t_end if t_final is None else t_final
    mask = env.t <= t_final + 1e-9 * max(abs(t_final), 1.0)
    t = env.t[mask]
    v = env.wind[mask]
    if t.size == 0:
        raise ValueError("no samples before t_final")
    y = np.linspace(0.0, height, n_heights)
    profile = np.trapezoid((y / model.y0) ** model.beta, y) / height
    v_mean = np.trapezoid(v, t) / (t[-1] - t[0]) if t.size > 1 else float(v[0])
    return model.h10 + model.h11 * (v_mean / model.v0) * profile


def shadow_height(sunlit_ratio: float, height: float) -> float:
    """Shadow top on the facade for a given sunlit area ratio."""
    s = np.asarray(sunlit_ratio, dtype=float)
    if np.any((s < 0) | (s > 1)):
        raise ValueError("sunlit ratio must lie in [0, 1]")
    return height * (1.0 - s)


def sunlit_indicator(y, shadow: float):
    """1 where y is above the shadow line, 0 at or below it.

    A zero shadow height means no shadow at all, so the whole facade
    (including y = 0) counts as sunlit.
    """
    y = np.asarray(y, dtype=float)
    if shadow <= 0.0:
        return np.ones_like(y)
    return np.where(y > shadow, 1.0, 0.0)


def incident_flux(y, t: float, env: EnvironmentSeries, geom: ShadingGeometry,
                  absorptivity: float):
    """Absorbed short-wave flux on the exterior edge at height y and time t."""
    if not 0.0 <= absorptivity <= 1.0:
        raise ValueError("absorptivity must lie in [0, 1]")
    shade = shadow_height(env.sunlit_at(t), geom.facade_height)
    chi = sunlit_indicator(y, shade)
    direct = env.q_direct_at(t)
    return absorptivity * (direct * chi + env.q_diffuse_at(t) + env.q_reflected_at(t))


def _parse_float(text: str, row: int, column: str) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise EnvironmentFormatError(
            f"row {row}: cannot parse {column}={text!r}"
        ) from None


def load_environment(path, interpolation: str = "hold") -> EnvironmentSeries:
    """Read the weather/shading CSV.

    Expected header: t_seconds, T_out_K, T_in_K, wind_ms, q_dir_Wm2,
    q_diff_Wm2, q_refl_Wm2, sunlit_ratio.  The pair (I_Wm2, cos_theta) may
    replace q_dir_Wm2, in which case the direct flux is I*cos(theta) clamped
    at zero; when both are present the explicit q_dir_Wm2 wins.  An optional
    tan_theta column feeds the shadow-distance sensitivity.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EnvironmentFormatError(f"{path}: empty file")
        names = [n.strip() for n in reader.fieldnames]
        missing = [c for c in REQUIRED_COLUMNS if c not in names]
        if missing:
            raise EnvironmentFormatError(f"{path}: missing columns {missing}")
        has_qdir = "q_dir_Wm2" in names
        has_beam = "I_Wm2" in names and "cos_theta" in names
        if not (has_qdir or has_beam):
            raise EnvironmentFormatError(
                f"{path}: needs either q_dir_Wm2 or the pair (I_Wm2, cos_theta)"
            )
        has_tan = "tan_theta" in names
        rows = {name: [] for name in names}
        for lineno, record in enumerate(reader, start=2):
            if None in record or any(v is None for v in record.values()):
                raise EnvironmentFormatError(f"{path}: row {lineno}: wrong field count")
            for name in names:
                rows[name].append(_parse_float(record[name].strip(), lineno, name))
    if not rows["t_seconds"]:
        raise EnvironmentFormatError(f"{path}: no data rows")

    cos_theta = np.asarray(rows["cos_theta"], dtype=float) if "cos_theta" in rows else None
    if has_qdir:
        q_direct = np.asarray(rows["q_dir_Wm2"], dtype=float)
    else:
        intensity = np.asarray(rows["I_Wm2"], dtype=float)
        q_direct = np.maximum(intensity * cos_theta, 0.0)
    tan_theta = None
    if has_tan:
        tan_theta = np.asarray(rows["tan_theta"], dtype=float)
    elif cos_theta is not None:
        cos_clip = np.clip(cos_theta, None, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            tan_theta = np.where(
                cos_clip > 0.0, np.sqrt(np.maximum(1.0 - cos_clip**2, 0.0)) / cos_clip, 0.0
            )

    try:
        return EnvironmentSeries(
            t=rows["t_seconds"],
            t_out=rows["T_out_K"],
            t_in=rows["T_in_K"],
            wind=rows["wind_ms"],
            q_direct=q_direct,
            q_diffuse=rows["q_diff_Wm2"],
            q_reflected=rows["q_refl_Wm2"],
            sunlit=rows["sunlit_ratio"],
            cos_theta=cos_theta,
            tan_theta=tan_theta,
            interpolation=interpolation,
        )
    except EnvironmentFormatError as exc:
        raise EnvironmentFormatError(f"{path}: {exc}") from None
