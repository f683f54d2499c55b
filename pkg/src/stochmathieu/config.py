"""Experiment configuration: JSON documents mapped onto dataclasses.

Unknown keys anywhere in the document are rejected.  Individual fields can
be overridden with dotted paths, e.g. ``params.acf.sigma_alpha=0.267``.
Physical parameters are validated by the module types they build.
"""

from __future__ import annotations

import copy
import dataclasses
import json
import typing
from dataclasses import dataclass, field
from pathlib import Path

from .analytic import QuadSettings
from .errors import ConfigError
from .gp import AcfSpec
from .sde import Broadband, SimConfig, SystemParams, WhiteNoise

MODES = (
    "simulate-full",
    "simulate-averaged",
    "analytic-pdf",
    "stability-diagram",
    "gp-sample",
    "compare",
    "reproduce-fig3",
)

DESK_SCALE = {"n_realizations": 300, "t_end": 2500.0}


@dataclass(frozen=True)
class ForcingConfig:
    kind: str = "white"
    nu: float = 0.002
    s_f: float = 0.0

    def build(self):
        if self.kind == "white":
            return WhiteNoise(self.nu)
        if self.kind == "broadband":
            return Broadband(self.s_f)
        raise ConfigError(f"forcing.kind must be 'white' or 'broadband', got {self.kind!r}")


@dataclass(frozen=True)
class AcfConfig:
    sigma_alpha: float = 0.229
    ell_alpha: float = 10.0


@dataclass(frozen=True)
class ParamsConfig:
    omega0: float = 1.0
    zeta: float = 0.1
    acf: AcfConfig = field(default_factory=AcfConfig)
    forcing: ForcingConfig = field(default_factory=ForcingConfig)

    def build(self, sigma_alpha: float | None = None, ell_alpha: float | None = None) -> SystemParams:
        acf = AcfSpec(
            self.acf.sigma_alpha if sigma_alpha is None else sigma_alpha,
            self.acf.ell_alpha if ell_alpha is None else ell_alpha,
        )
        return SystemParams(self.omega0, self.zeta, acf, self.forcing.build())


@dataclass(frozen=True)
class AnalyticConfig:
    epsabs: float = 0.0
    epsrel: float = 1e-6
    limit: int = 200
    slack: float = 100.0
    n_core: int = 81
    n_tail: int = 120
    density_floor: float = 1e-12

    def quad(self) -> QuadSettings:
        return QuadSettings(self.epsabs, self.epsrel, self.limit, self.slack)


@dataclass(frozen=True)
class StabilityConfig:
    delta_min: float = 0.05
    delta_max: float = 1.2
    alpha_min: float = 0.0
    alpha_max: float = 1.5
    n_delta: int = 60
    n_alpha: int = 60
    zeta: float = 0.0
    trunc: int = 10
    tol: float = 1e-4


@dataclass(frozen=True)
class GpConfig:
    # grid length; 0 means the simulation grid
    n: int = 0
    realization: int = 0


@dataclass(frozen=True)
class CompareConfig:
    system: str = "averaged"
    scheme: str = "logtail"
    n_bins: int = 60
    core_std: float = 4.0
    min_count: int = 10
    # 0 records every integrator step
    sample_interval: float = 0.0
    sigma_grid: tuple[float, ...] = (0.178, 0.229, 0.267)
    ell_grid: tuple[float, ...] = (2.5, 5.0, 10.0)


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    svg: bool = False
    # simulate modes: number of trajectories written and the row stride
    trajectories: int = 1
    trajectory_stride: int = 20


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "analytic-pdf"
    params: ParamsConfig = field(default_factory=ParamsConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    analytic: AnalyticConfig = field(default_factory=AnalyticConfig)
    stability: StabilityConfig = field(default_factory=StabilityConfig)
    gp: GpConfig = field(default_factory=GpConfig)
    compare: CompareConfig = field(default_factory=CompareConfig)
    outputs: OutputConfig = field(default_factory=OutputConfig)
    workers: int = 1

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


def _coerce(tp, value, path: str):
    origin = typing.get_origin(tp)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(f"{path or 'config'}: expected an object")
        return _build(tp, value, path)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list")
        (inner, _) = typing.get_args(tp)
        return tuple(_coerce(inner, v, path) for v in value)
    if origin is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None:
            return None
        return _coerce(args[0], value, path)
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{path}: unsupported field type {tp}")


def _build(cls, data: dict, path: str = ""):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        where = path or "config"
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    kwargs = {k: _coerce(hints[k], v, f"{path}.{k}" if path else k) for k, v in data.items()}
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


def config_from_dict(data: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, data)


def config_to_dict(cfg) -> dict:
    return json.loads(json.dumps(dataclasses.asdict(cfg)))


def load_config(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def apply_override(data: dict, dotted: str, value) -> dict:
    """Set ``data[a][b][c] = value`` for ``dotted='a.b.c'`` (returns a copy)."""
    out = copy.deepcopy(data)
    keys = dotted.split(".")
    node = out
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {dotted}: {k} is not an object")
    node[keys[-1]] = value
    return out


def parse_override(text: str) -> tuple[str, object]:
    """``key.path=value`` with ``value`` read as JSON when possible."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like key.path=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value
