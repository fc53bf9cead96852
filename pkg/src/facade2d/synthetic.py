"""Deterministic synthetic weather/shading fixtures.

Real weather acquisition and the pixel-counting shading pipeline are out of
scope; these generators produce physically plausible, fully reproducible
series (pure functions of time, no randomness) in the same file format, with
beam geometry consistent with the shadow the front building would cast.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .environment import EnvironmentSeries, ShadingGeometry

__all__ = ["synthetic_environment", "constant_environment", "write_environment"]

DAY_S = 86400.0


def synthetic_environment(days: float, step_s: float = 360.0, *,
                          t_out_mean: float = 283.15, t_out_amplitude: float = 8.0,
                          t_in: float = 293.15,
                          wind_mean: float = 3.0, wind_amplitude: float = 2.0,
                          solar_peak: float = 500.0, diffuse_peak: float = 120.0,
                          reflected_peak: float = 60.0,
                          elevation_max_deg: float = 35.0,
                          shading: ShadingGeometry | None = None,
                          interpolation: str = "hold") -> EnvironmentSeries:
    """Sinusoidal diurnal climate with an idealised sun path.

    Daylight runs 06:00-18:00; the solar elevation follows a half sine with
    the given midday maximum, the facade faces the sun (beam-normal angle =
    elevation), and the shadow cast by ``shading`` follows
    h = clip(F - D tan(elevation), 0, H).  A low midday elevation therefore
    produces the winter situation where the lower facade stays shaded.
    """
    t = np.arange(0.0, days * DAY_S + 0.5 * step_s, step_s)
    hour = (t % DAY_S) / 3600.0
    daylight = (hour > 6.0) & (hour < 18.0)
    elevation = np.where(
        daylight,
        np.deg2rad(elevation_max_deg) * np.sin(np.pi * (hour - 6.0) / 12.0),
        0.0,
    )
    sin_e = np.sin(elevation)
    intensity = np.where(daylight, solar_peak * sin_e, 0.0)
    cos_theta = np.where(daylight, np.cos(elevation), 0.0)
    tan_theta = np.tan(elevation)
    q_diffuse = np.where(daylight, diffuse_peak * sin_e, 0.0)
    q_reflected = np.where(daylight, reflected_peak * sin_e, 0.0)
    if shading is None:
        sunlit = np.ones_like(t)
    else:
        shadow = np.clip(
            shading.front_height - shading.front_distance * tan_theta,
            0.0, shading.facade_height,
        )
        sunlit = 1.0 - shadow / shading.facade_height
    t_out = t_out_mean + t_out_amplitude * np.sin(2.0 * np.pi * (t - 9.0 * 3600.0) / DAY_S)
    wind = np.maximum(
        wind_mean + wind_amplitude * np.sin(2.0 * np.pi * (t - 3.0 * 3600.0) / DAY_S), 0.0
    )
    return EnvironmentSeries(
        t=t, t_out=t_out, t_in=np.full_like(t, t_in), wind=wind,
        q_direct=np.maximum(intensity * cos_theta, 0.0),
        q_diffuse=q_diffuse, q_reflected=q_reflected, sunlit=sunlit,
        cos_theta=cos_theta, tan_theta=tan_theta, interpolation=interpolation,
    )


def constant_environment(days: float, step_s: float = 3600.0, *,
                         t_out: float = 303.15, t_in: float = 293.15,
                         wind: float = 0.0, sunlit: float = 1.0,
                         q_direct: float = 0.0, q_diffuse: float = 0.0,
                         q_reflected: float = 0.0) -> EnvironmentSeries:
    """Time-constant series (steady-state and equivalence fixtures)."""
    t = np.arange(0.0, days * DAY_S + 0.5 * step_s, step_s)
    full = np.full_like
    return EnvironmentSeries(
        t=t, t_out=full(t, t_out), t_in=full(t, t_in), wind=full(t, wind),
        q_direct=full(t, q_direct), q_diffuse=full(t, q_diffuse),
        q_reflected=full(t, q_reflected), sunlit=full(t, sunlit),
    )


def write_environment(series: EnvironmentSeries, path) -> Path:
    """Write a series in the weather-file format (UTF-8 CSV, '.' decimals)."""
    path = Path(path)
    columns = [
        ("t_seconds", series.t),
        ("T_out_K", series.t_out),
        ("T_in_K", series.t_in),
        ("wind_ms", series.wind),
        ("q_dir_Wm2", series.q_direct),
        ("q_diff_Wm2", series.q_diffuse),
        ("q_refl_Wm2", series.q_reflected),
        ("sunlit_ratio", series.sunlit),
    ]
    if series.cos_theta is not None:
        columns.append(("cos_theta", series.cos_theta))
    if series.tan_theta is not None:
        columns.append(("tan_theta", series.tan_theta))
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([name for name, _ in columns])
        for i in range(len(series)):
            writer.writerow([f"{values[i]:.12g}" for _, values in columns])
    return path
