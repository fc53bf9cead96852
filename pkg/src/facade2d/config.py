"""Declarative run configuration (TOML) for the CLI pipelines."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .domain import MaterialLayer, WallAssembly
from .environment import ConvectionModel, ShadingGeometry

__all__ = ["ConfigError", "RunConfig", "SensitivitySettings", "BatchManifest",
           "load_config", "load_manifest"]


class ConfigError(Exception):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class SensitivitySettings:
    dh11: float = 0.198
    dbeta: float = -0.016
    dF: float = 0.15
    dD: float = -0.15
    band_dF: Optional[float] = None
    band_dD: Optional[float] = None
    probe_y: float = 0.6


@dataclass(frozen=True)
class RunConfig:
    wall: WallAssembly
    nx: int
    ny: int
    scheme: str
    dt_s: float
    horizon_days: Optional[float]
    environment_file: Optional[Path]
    interpolation: str
    inside_temperature: str          # "file" | "sinusoid"
    inside_mean: float
    inside_amplitude: float
    inside_peak_day: float
    start_date: dt.date
    shading: ShadingGeometry
    convection: ConvectionModel
    h_inside: float
    absorptivity: float
    output_dir: Path
    cadence_s: float
    probe_heights: tuple
    shadow: bool                     # hypothesis toggles
    convection_variant: str          # "variable" | "constant"
    mode: str                        # "2d" | "1d"
    initial: str | float             # "steady" or uniform temperature [K]
    reference_temperature: float = 293.15
    temperature_span: float = 20.0
    reference_time: float = 3600.0
    sensitivity: SensitivitySettings = field(default_factory=SensitivitySettings)

    def with_overrides(self, **kwargs) -> "RunConfig":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


@dataclass(frozen=True)
class BatchManifest:
    sites: tuple          # of (label, Path) pairs
    template: RunConfig
    jobs: int = 1


def _section(data: dict, name: str) -> dict:
    value = data.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"[{name}] must be a table")
    return value


def _get(section: dict, key: str, kind, default=None, required=False, where=""):
    if key not in section:
        if required:
            raise ConfigError(f"missing key {key!r} in [{where}]")
        return default
    value = section[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(f"[{where}] {key} must be of type {kind.__name__}")
    return value


def _wall(data: dict) -> WallAssembly:
    sec = _section(data, "wall")
    raw_layers = sec.get("layer", [])
    if not isinstance(raw_layers, list) or not raw_layers:
        raise ConfigError("[wall] needs at least one [[wall.layer]] entry")
    layers = []
    for i, entry in enumerate(raw_layers):
        where = f"wall.layer[{i}]"
        try:
            layers.append(MaterialLayer(
                name=_get(entry, "name", str, default=f"layer{i}", where=where),
                thickness=_get(entry, "thickness_m", float, required=True, where=where),
                conductivity=_get(entry, "conductivity_W_mK", float, required=True, where=where),
                volumetric_capacity=_get(entry, "volumetric_capacity_J_m3K", float,
                                         required=True, where=where),
            ))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    total = sum(la.thickness for la in layers)
    try:
        return WallAssembly(
            layers=tuple(layers),
            height=_get(sec, "height_m", float, required=True, where="wall"),
            length=_get(sec, "length_m", float, default=total, where="wall"),
            width=_get(sec, "width_m", float, default=1.0, where="wall"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _parse_date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError as exc:
        raise ConfigError(f"invalid start_date {text!r}: {exc}") from None


def _run_config(data: dict, base_dir: Path) -> RunConfig:
    wall = _wall(data)

    grid = _section(data, "grid")
    nx = _get(grid, "nx", int, default=75, where="grid")
    ny = _get(grid, "ny", int, default=31, where="grid")
    if nx < 3 or ny < 3:
        raise ConfigError("[grid] nx and ny must be >= 3")

    scheme_sec = _section(data, "scheme")
    scheme = _get(scheme_sec, "name", str, default="df", where="scheme")
    if scheme not in ("df", "explicit", "implicit", "adi"):
        raise ConfigError(f"unknown scheme {scheme!r}")
    dt_s = _get(scheme_sec, "dt_s", float, default=36.0, where="scheme")
    if dt_s <= 0:
        raise ConfigError("[scheme] dt_s must be > 0")
    horizon = _get(scheme_sec, "horizon_days", float, default=None, where="scheme")

    env = _section(data, "environment")
    env_file = _get(env, "file", str, default=None, where="environment")
    env_path = None
    if env_file is not None:
        env_path = (base_dir / env_file).resolve() if not Path(env_file).is_absolute() else Path(env_file)
        if not env_path.exists():
            raise ConfigError(f"environment file {env_path} does not exist")
    interpolation = _get(env, "interpolation", str, default="hold", where="environment")
    if interpolation not in ("hold", "linear"):
        raise ConfigError("[environment] interpolation must be 'hold' or 'linear'")
    inside = _get(env, "inside_temperature", str, default="file", where="environment")
    if inside not in ("file", "sinusoid"):
        raise ConfigError("[environment] inside_temperature must be 'file' or 'sinusoid'")
    start_date = _parse_date(_get(env, "start_date", str, default="2001-01-01",
                                  where="environment"))

    shading_sec = _section(data, "shading")
    try:
        shading = ShadingGeometry(
            front_height=_get(shading_sec, "front_height_m", float, default=0.0,
                              where="shading"),
            front_distance=_get(shading_sec, "front_distance_m", float, default=5.0,
                                where="shading"),
            facade_height=wall.height,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    conv = _section(data, "convection")
    try:
        convection = ConvectionModel(
            h10=_get(conv, "h10", float, default=5.82, where="convection"),
            h11=_get(conv, "h11", float, default=3.96, where="convection"),
            beta=_get(conv, "beta", float, default=0.32, where="convection"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    h_inside = _get(conv, "h_inside", float, default=10.0, where="convection")
    absorptivity = _get(conv, "absorptivity", float, default=0.6, where="convection")
    if not 0.0 <= absorptivity <= 1.0:
        raise ConfigError("[convection] absorptivity must lie in [0, 1]")
    if h_inside < 0:
        raise ConfigError("[convection] h_inside must be >= 0")

    outputs = _section(data, "outputs")
    out_dir = Path(_get(outputs, "directory", str, default="out", where="outputs"))
    if not out_dir.is_absolute():
        out_dir = base_dir / out_dir
    cadence = _get(outputs, "cadence_s", float, default=3600.0, where="outputs")
    if cadence <= 0:
        raise ConfigError("[outputs] cadence_s must be > 0")
    probes = outputs.get("probe_heights_m", [0.3, 1.5, 2.7])
    if not isinstance(probes, list) or not all(isinstance(p, (int, float)) for p in probes):
        raise ConfigError("[outputs] probe_heights_m must be a list of numbers")

    hyp = _section(data, "hypotheses")
    shadow = _get(hyp, "shadow", bool, default=True, where="hypotheses")
    conv_variant = _get(hyp, "convection", str, default="variable", where="hypotheses")
    if conv_variant not in ("variable", "constant"):
        raise ConfigError("[hypotheses] convection must be 'variable' or 'constant'")
    mode = _get(hyp, "mode", str, default="2d", where="hypotheses")
    if mode not in ("2d", "1d"):
        raise ConfigError("[hypotheses] mode must be '2d' or '1d'")

    scales = _section(data, "scales")
    initial = _section(data, "initial")
    initial_kind = _get(initial, "kind", str, default="steady", where="initial")
    if initial_kind == "uniform":
        initial_value: str | float = _get(initial, "temperature_K", float, required=True,
                                          where="initial")
    elif initial_kind == "steady":
        initial_value = "steady"
    else:
        raise ConfigError("[initial] kind must be 'steady' or 'uniform'")

    sens_sec = _section(data, "sensitivity")
    sens = SensitivitySettings(
        dh11=_get(sens_sec, "dh11", float, default=0.198, where="sensitivity"),
        dbeta=_get(sens_sec, "dbeta", float, default=-0.016, where="sensitivity"),
        dF=_get(sens_sec, "dF_m", float, default=0.15, where="sensitivity"),
        dD=_get(sens_sec, "dD_m", float, default=-0.15, where="sensitivity"),
        band_dF=_get(sens_sec, "band_dF_m", float, default=None, where="sensitivity"),
        band_dD=_get(sens_sec, "band_dD_m", float, default=None, where="sensitivity"),
        probe_y=_get(sens_sec, "probe_y_m", float, default=0.6, where="sensitivity"),
    )

    return RunConfig(
        wall=wall, nx=nx, ny=ny, scheme=scheme, dt_s=dt_s, horizon_days=horizon,
        environment_file=env_path, interpolation=interpolation,
        inside_temperature=inside,
        inside_mean=_get(env, "inside_mean_K", float, default=293.15, where="environment"),
        inside_amplitude=_get(env, "inside_amplitude_K", float, default=2.0,
                              where="environment"),
        inside_peak_day=_get(env, "inside_peak_day", float, default=200.0,
                             where="environment"),
        start_date=start_date, shading=shading, convection=convection,
        h_inside=h_inside, absorptivity=absorptivity,
        output_dir=out_dir, cadence_s=cadence, probe_heights=tuple(float(p) for p in probes),
        shadow=shadow, convection_variant=conv_variant, mode=mode,
        initial=initial_value,
        reference_temperature=_get(scales, "reference_temperature_K", float,
                                   default=293.15, where="scales"),
        temperature_span=_get(scales, "temperature_span_K", float, default=20.0,
                              where="scales"),
        reference_time=_get(scales, "reference_time_s", float, default=3600.0,
                            where="scales"),
        sensitivity=sens,
    )


def _load_toml(path: Path) -> dict:
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} does not exist") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def load_config(path) -> RunConfig:
    path = Path(path)
    return _run_config(_load_toml(path), path.parent.resolve())


def load_manifest(path) -> BatchManifest:
    """Batch manifest: [[batch.site]] entries plus a shared run template."""
    path = Path(path)
    data = _load_toml(path)
    base = path.parent.resolve()
    batch = _section(data, "batch")
    raw_sites = batch.get("site", [])
    if not isinstance(raw_sites, list) or not raw_sites:
        raise ConfigError("[batch] needs at least one [[batch.site]] entry")
    sites = []
    labels = set()
    for i, entry in enumerate(raw_sites):
        label = _get(entry, "label", str, required=True, where=f"batch.site[{i}]")
        file_ = _get(entry, "file", str, required=True, where=f"batch.site[{i}]")
        if label in labels:
            raise ConfigError(f"duplicate site label {label!r}")
        labels.add(label)
        site_path = Path(file_)
        if not site_path.is_absolute():
            site_path = base / site_path
        if not site_path.exists():
            raise ConfigError(f"site file {site_path} does not exist")
        sites.append((label, site_path))
    template = _run_config(data, base)
    jobs = _get(batch, "jobs", int, default=1, where="batch")
    if jobs < 1:
        raise ConfigError("[batch] jobs must be >= 1")
    return BatchManifest(sites=tuple(sites), template=template, jobs=jobs)
