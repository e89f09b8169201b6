"""
Framework parameters and the key/value configuration format.

Defaults describe a mid-size passenger car on a 3.7 m lane. A configuration
document is one ``key = value`` pair per line, ``#`` starts a comment, keys are
the dataclass field names below (Pacejka coefficients
use ``B_f, C_f, D_f, E_f, B_r, C_r, D_r, E_r``). Omitted keys keep their defaults.

Accelerations are positive magnitudes; signs are applied where they are used.
"""

import hashlib
import logging
import math
import os
from dataclasses import dataclass, field, fields, replace
from typing import Dict, Iterable, Optional, TextIO, Tuple, Union

from modules.errors import ConfigError

CONFIG_ENV_VAR = "SWERVE_SAFETY_CONFIG"


@dataclass(frozen=True)
class VehicleGeometry:
    """Chassis extents measured from the centre of mass, plus axle offsets."""

    d_f: float = 2.4
    d_r: float = 2.3
    b_l: float = 0.9
    b_r: float = 0.9
    l_f: float = 1.19
    l_r: float = 1.37

    def __post_init__(self):
        for name in ("d_f", "d_r", "b_l", "b_r", "l_f", "l_r"):
            _require_positive(name, getattr(self, name), "must be a positive length")
        if self.l_f > self.d_f:
            raise ConfigError(f"l_f must not exceed d_f (got l_f={self.l_f}, d_f={self.d_f})", field="l_f")
        if self.l_r > self.d_r:
            raise ConfigError(f"l_r must not exceed d_r (got l_r={self.l_r}, d_r={self.d_r})", field="l_r")

    @property
    def wheelbase(self) -> float:
        return self.l_f + self.l_r


@dataclass(frozen=True)
class SafetyParams:
    rho: float = 0.1
    mu: float = 0.1
    alpha: float = 3.7
    a_max_accel: float = 2.0
    a_min_brake: float = 2.0
    a_max_brake: float = 8.0
    a_lat_max: float = 4.0
    a_lat_min: float = 2.0
    delta_max: float = math.pi / 6

    def __post_init__(self):
        for name in ("a_max_accel", "a_min_brake", "a_max_brake", "a_lat_max", "a_lat_min"):
            _require_positive(name, getattr(self, name), "must be a positive magnitude")
        if self.a_min_brake > self.a_max_brake:
            raise ConfigError(
                f"a_min_brake must not exceed a_max_brake (got {self.a_min_brake} > {self.a_max_brake})",
                field="a_min_brake",
            )
        if self.a_lat_min > self.a_lat_max:
            raise ConfigError(
                f"a_lat_min must not exceed a_lat_max (got {self.a_lat_min} > {self.a_lat_max})",
                field="a_lat_min",
            )
        if not (0.0 < self.delta_max < math.pi / 2):
            raise ConfigError(f"delta_max must lie in (0, pi/2) (got {self.delta_max})", field="delta_max")
        _require_non_negative("rho", self.rho)
        _require_non_negative("mu", self.mu)
        _require_positive("alpha", self.alpha, "must be a positive lane width")

    def with_rho(self, rho: float) -> "SafetyParams":
        return replace(self, rho=rho)


@dataclass(frozen=True)
class PacejkaCoefficients:
    """Magic-formula coefficients: stiffness B, shape C, peak D (N), curvature E."""

    B: float
    C: float
    D: float
    E: float


@dataclass(frozen=True)
class DynamicParams:
    m: float = 1239.0
    I_zz: float = 1752.0
    e_SP: float = 0.5
    R_wheel: float = 0.302
    c_w: float = 0.3
    rho_drag: float = 1.25
    A: float = 1.438
    pacejka_front: PacejkaCoefficients = field(default_factory=lambda: PacejkaCoefficients(10.96, 1.3, 4560.4, -0.5))
    pacejka_rear: PacejkaCoefficients = field(default_factory=lambda: PacejkaCoefficients(12.67, 1.3, 3947.81, -0.5))

    def __post_init__(self):
        _require_positive("m", self.m, "must be a positive mass")
        _require_positive("I_zz", self.I_zz, "must be a positive inertia")
        _require_positive("D_f", self.pacejka_front.D, "must be a positive peak force")
        _require_positive("D_r", self.pacejka_rear.D, "must be a positive peak force")
        for name in ("c_w", "rho_drag", "A", "R_wheel"):
            _require_non_negative(name, getattr(self, name))

    @property
    def peak_tire_acceleration(self) -> float:
        """Largest acceleration the two axles can transmit together."""
        return (self.pacejka_front.D + self.pacejka_rear.D) / self.m


ParameterSet = Tuple[VehicleGeometry, SafetyParams, DynamicParams]

_PACEJKA_KEYS = {
    "B_f": ("pacejka_front", "B"), "C_f": ("pacejka_front", "C"),
    "D_f": ("pacejka_front", "D"), "E_f": ("pacejka_front", "E"),
    "B_r": ("pacejka_rear", "B"), "C_r": ("pacejka_rear", "C"),
    "D_r": ("pacejka_rear", "D"), "E_r": ("pacejka_rear", "E"),
}


def _require_positive(name: str, value: float, reason: str):
    if not math.isfinite(value) or value <= 0.0:
        raise ConfigError(f"{name} {reason} (got {value})", field=name)


def _require_non_negative(name: str, value: float):
    if not math.isfinite(value) or value < 0.0:
        raise ConfigError(f"{name} must be non-negative (got {value})", field=name)


def _plain_fields(cls) -> Iterable[str]:
    return [f.name for f in fields(cls) if not f.name.startswith("pacejka_")]


def _known_keys() -> Dict[str, str]:
    """Maps every accepted key to the section that owns it."""
    keys = {}
    for name in _plain_fields(VehicleGeometry):
        keys[name] = "geometry"
    for name in _plain_fields(SafetyParams):
        keys[name] = "safety"
    for name in _plain_fields(DynamicParams):
        keys[name] = "dynamic"
    for name in _PACEJKA_KEYS:
        keys[name] = "dynamic"
    return keys


def default_parameters() -> ParameterSet:
    return VehicleGeometry(), SafetyParams(), DynamicParams()


def _parse_lines(text: str) -> Dict[str, Tuple[float, int]]:
    known = _known_keys()
    values: Dict[str, Tuple[float, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', found {raw.strip()!r}", line=lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in known:
            raise ConfigError(f"unknown key {key!r}", line=lineno, field=key)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {values[key][1]})", line=lineno, field=key)
        try:
            number = float(value)
        except ValueError:
            raise ConfigError(f"value for {key!r} is not a number: {value!r}", line=lineno, field=key) from None
        values[key] = (number, lineno)
    return values


def load_config(source: Union[str, TextIO]) -> ParameterSet:
    """Parses a key/value document (text or readable stream) into validated parameters."""
    text = source if isinstance(source, str) else source.read()
    values = _parse_lines(text)
    plain = {key: number for key, (number, _) in values.items()}

    def pick(cls):
        return {name: plain[name] for name in _plain_fields(cls) if name in plain}

    def with_line(exc: ConfigError) -> ConfigError:
        if exc.field in values:
            return ConfigError(str(exc), line=values[exc.field][1], field=exc.field)
        return exc

    try:
        geometry = VehicleGeometry(**pick(VehicleGeometry))
        safety = SafetyParams(**pick(SafetyParams))
        defaults = DynamicParams()
        tires = {"pacejka_front": vars(defaults.pacejka_front).copy(), "pacejka_rear": vars(defaults.pacejka_rear).copy()}
        for key, (section, coefficient) in _PACEJKA_KEYS.items():
            if key in plain:
                tires[section][coefficient] = plain[key]
        dynamic = DynamicParams(
            **pick(DynamicParams),
            pacejka_front=PacejkaCoefficients(**tires["pacejka_front"]),
            pacejka_rear=PacejkaCoefficients(**tires["pacejka_rear"]),
        )
    except ConfigError as exc:
        raise with_line(exc) from None

    logging.debug(f"Loaded configuration with {len(values)} override(s)")
    return geometry, safety, dynamic


def load_config_file(path: str) -> ParameterSet:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return load_config(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path!r}: {exc.strerror}") from None


def resolve_config(cli_path: Optional[str] = None) -> ParameterSet:
    """Flag first, then the environment variable, then the defaults."""
    path = cli_path or os.environ.get(CONFIG_ENV_VAR)
    if path:
        logging.info(f"Using configuration file {path}")
        return load_config_file(path)
    return default_parameters()


def dump_config(geometry: VehicleGeometry, safety: SafetyParams, dynamic: DynamicParams) -> str:
    lines = ["# vehicle geometry"]
    lines += [f"{name} = {getattr(geometry, name)!r}" for name in _plain_fields(VehicleGeometry)]
    lines.append("# safety parameters")
    lines += [f"{name} = {getattr(safety, name)!r}" for name in _plain_fields(SafetyParams)]
    lines.append("# dynamic model")
    lines += [f"{name} = {getattr(dynamic, name)!r}" for name in _plain_fields(DynamicParams)]
    for key, (section, coefficient) in _PACEJKA_KEYS.items():
        lines.append(f"{key} = {getattr(getattr(dynamic, section), coefficient)!r}")
    return "\n".join(lines) + "\n"


def config_hash(geometry: VehicleGeometry, safety: SafetyParams, dynamic: DynamicParams) -> str:
    return hashlib.sha256(dump_config(geometry, safety, dynamic).encode("utf-8")).hexdigest()
