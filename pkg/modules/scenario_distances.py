"""
The four scenario safe distances between a rear and a front vehicle.

All four are centre-of-mass to centre-of-mass distances: the interior term is
the bumper-to-bumper requirement and the chassis extents are added once.
Naming follows <rear response>_for_<front manoeuvre>.

A swerving vehicle is clear once its rear axle, the point whose arcs fix
theta_max and the end of the lane change, is y_c to the side; the clearance
travel x_c is the centre-of-mass displacement at that moment, and a second-arc
clearance also carries the rotated front extent d'. Literal mode measures the
centre of mass instead.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

from modules.config import SafetyParams, VehicleGeometry
from modules.kinematic_swerve import ArcCase, SwerveManoeuvre, build_swerve, clearance, rear_axle_clearance
from modules.rotation_geometry import lateral_clearance, rotated_extents
from modules.rss_core import LongitudinalScenario, braking_travel, d_long_brake_brake, positive_part


@dataclass
class ScenarioResult:
    name: str
    distance: float
    v_f_prime: float
    x_f: float
    x_lead_or_rear: float
    t_c: float
    extent_rear: float
    extent_front: float
    components: Dict[str, float] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    @property
    def interior(self) -> float:
        return self.distance - self.extent_rear - self.extent_front

    def to_dict(self) -> Dict:
        return {
            "scenario": self.name,
            "distance": self.distance,
            "bumper_to_bumper": self.interior,
            "v_f_prime": self.v_f_prime,
            "x_f": self.x_f,
            "x_lead_or_rear": self.x_lead_or_rear,
            "t_c": _json_number(self.t_c),
            "components": {k: _json_number(v) if isinstance(v, float) else v for k, v in self.components.items()},
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _json_number(value: float):
    return value if math.isfinite(value) else None


def _check_speeds(v_r: float, v_f: float):
    LongitudinalScenario(v_r, v_f)


def _swerve(v: float, g: VehicleGeometry, p: SafetyParams, literal: bool) -> Optional[SwerveManoeuvre]:
    """None for a vehicle standing still, which has nothing to swerve."""
    return build_swerve(v, g, p, literal) if v > 0.0 else None


def _clearance_time(swerve: Optional[SwerveManoeuvre], y_c: float, literal: bool) -> float:
    if swerve is None:
        return math.inf
    return (clearance(swerve, y_c) if literal else rear_axle_clearance(swerve, y_c)).t_c


def d_brake_for_brake(
    v_r: float, v_f: float, rho: float, g_rear: VehicleGeometry, g_front: VehicleGeometry,
    p: SafetyParams, literal: bool = False,
) -> ScenarioResult:
    _check_speeds(v_r, v_f)
    q = p.with_rho(rho)
    interior = d_long_brake_brake(LongitudinalScenario(v_r, v_f), q, literal=literal)
    v_r_rho = v_r + q.a_max_accel * rho
    x_r = 0.5 * (v_r + v_r_rho) * rho + v_r_rho ** 2 / (2.0 * q.a_min_brake)
    x_f = v_f ** 2 / (2.0 * q.a_max_brake)
    return ScenarioResult(
        name="bb",
        distance=interior + g_rear.d_f + g_front.d_r,
        v_f_prime=v_f,
        x_f=x_f,
        x_lead_or_rear=x_r,
        t_c=0.0,
        extent_rear=g_rear.d_f,
        extent_front=g_front.d_r,
        components={"v_r_rho": v_r_rho, "x_r": x_r, "x_f": x_f, "interior": interior},
    )


def d_swerve_for_brake(
    v_r: float, v_f: float, rho: float, g_rear: VehicleGeometry, g_front: VehicleGeometry,
    p: SafetyParams, literal: bool = False, clamp_front_stop: bool = True,
) -> ScenarioResult:
    """Rear vehicle swerves around a lead that brakes as hard as it can."""
    _check_speeds(v_r, v_f)
    q = p.with_rho(rho)
    v_r_rho = v_r + q.a_max_accel * rho
    swerve = _swerve(v_r_rho, g_rear, q, literal)
    theta_max = swerve.theta_max if swerve else 0.0
    psi_max = swerve.psi_max if swerve else 0.0
    y_c = lateral_clearance(g_rear, g_front, theta_max, q)
    d_prime = rotated_extents(g_rear, theta_max).d_prime

    if swerve:
        result = clearance(swerve, y_c) if literal else rear_axle_clearance(swerve, y_c)
        x_c, t_c, arc_case = result.x_c, result.t_c, result.arc_case
        if arc_case is ArcCase.SECOND_ARC:
            x_c += d_prime
    else:
        x_c, t_c, arc_case = 0.0, 0.0, ArcCase.FIRST_ARC

    v_f_prime = min(v_f, v_r * math.cos(psi_max))
    horizon = rho + t_c
    if clamp_front_stop:
        x_f = braking_travel(v_f_prime, horizon, q.a_max_brake)
    else:
        x_f = v_f_prime * horizon - 0.5 * q.a_max_brake * horizon ** 2

    interior = positive_part(v_r * rho + 0.5 * q.a_max_accel * rho ** 2 + x_c - x_f)
    return ScenarioResult(
        name="sb",
        distance=interior + d_prime + g_front.d_r,
        v_f_prime=v_f_prime,
        x_f=x_f,
        x_lead_or_rear=x_c,
        t_c=t_c,
        extent_rear=d_prime,
        extent_front=g_front.d_r,
        components={
            "v_r_rho": v_r_rho, "theta_max": theta_max, "psi_max": psi_max, "y_c": y_c,
            "x_c": x_c, "t_c": t_c, "arc_case": arc_case.value, "x_f": x_f,
            "d_prime": d_prime, "interior": interior,
            "swerve_duration": swerve.duration if swerve else 0.0,
        },
    )


def d_brake_for_swerve(
    v_r: float, v_f: float, rho: float, g_rear: VehicleGeometry, g_front: VehicleGeometry,
    p: SafetyParams, literal: bool = False,
) -> ScenarioResult:
    """Rear vehicle brakes while the lead swerves out of the lane."""
    _check_speeds(v_r, v_f)
    q = p.with_rho(rho)
    warnings: List[str] = []
    v_r_rho = v_r + q.a_max_accel * rho
    swerve = _swerve(v_f, g_front, q, literal)
    theta_max = swerve.theta_max if swerve else 0.0
    psi_max = swerve.psi_max if swerve else 0.0
    y_c = lateral_clearance(g_front, g_rear, theta_max, q)
    d_bar = rotated_extents(g_front, theta_max).d_bar
    # a stationary lead never clears the lane
    t_c = _clearance_time(swerve, y_c, literal)

    v_r_min = max(min(v_r, v_r_rho - q.a_min_brake * (t_c - rho)), 0.0)
    v_f_prime = min(v_f * math.cos(psi_max), v_r_min)
    x_f = v_f_prime * t_c if v_f_prime > 0.0 else 0.0

    brake_time = t_c - rho
    if brake_time < 0.0:
        warnings.append(f"t_c={t_c:.4f} s is shorter than the reaction time; brake phase clamped to zero")
        logging.warning(warnings[-1])
        brake_time = 0.0
    x_r_brake = braking_travel(v_r_rho, brake_time, q.a_min_brake)
    x_r = 0.5 * (v_r + v_r_rho) * rho + x_r_brake

    interior = positive_part(x_r - x_f)
    return ScenarioResult(
        name="bs",
        distance=interior + g_rear.d_f + d_bar,
        v_f_prime=v_f_prime,
        x_f=x_f,
        x_lead_or_rear=x_r,
        t_c=t_c,
        extent_rear=g_rear.d_f,
        extent_front=d_bar,
        components={
            "v_r_rho": v_r_rho, "theta_max": theta_max, "psi_max": psi_max, "y_c": y_c,
            "t_c": t_c, "v_r_min": v_r_min, "x_f": x_f, "x_r_brake": x_r_brake, "x_r": x_r,
            "d_bar": d_bar, "interior": interior,
        },
        warnings=warnings,
    )


def d_swerve_for_swerve(
    v_r: float, v_f: float, rho: float, g_rear: VehicleGeometry, g_front: VehicleGeometry,
    p: SafetyParams, literal: bool = False,
) -> ScenarioResult:
    """Both vehicles swerve; the lead then brakes hard, the rear comfortably."""
    _check_speeds(v_r, v_f)
    q = p.with_rho(rho)
    warnings: List[str] = []
    v_r_rho = v_r + q.a_max_accel * rho
    rear = _swerve(v_r_rho, g_rear, q, literal)
    front = _swerve(v_f, g_front, q, literal)
    t_1 = rear.duration if rear else 0.0
    t_2 = front.duration if front else math.inf
    theta_rear = rear.theta_max if rear else 0.0
    theta_front = front.theta_max if front else 0.0
    psi_front = front.psi_max if front else 0.0
    d_prime = rotated_extents(g_rear, theta_rear).d_prime
    d_bar = rotated_extents(g_front, theta_front).d_bar

    v_f_prime = min(v_f * math.cos(psi_front), v_r)
    # the rear covers at most v_r_rho * t_1 while swerving; the literal
    # form subtracts the reaction time from that phase
    cruise = t_1 - rho if literal else t_1
    if cruise < 0.0:
        warnings.append(f"t_1={t_1:.4f} s is shorter than the reaction time; cruise phase clamped to zero")
        logging.warning(warnings[-1])
        cruise = 0.0
    front_travel = v_f_prime * t_2 + v_f_prime ** 2 / (2.0 * q.a_max_brake) if v_f_prime > 0.0 else 0.0

    interior = (
        0.5 * (v_r + v_r_rho) * rho
        + v_r_rho * cruise
        + v_r_rho ** 2 / (2.0 * q.a_min_brake)
        - front_travel
    )

    t_b1 = v_r_rho / q.a_min_brake
    t_b2 = v_f / q.a_max_brake
    if not (rho < t_2 < rho + t_1 < t_2 + t_b2 < rho + t_1 + t_b1):
        warnings.append(
            f"interval ordering rho < t_2 < rho+t_1 < t_2+t_b2 < rho+t_1+t_b1 does not hold "
            f"(rho={rho}, t_1={t_1:.4f}, t_2={t_2:.4f}, t_b1={t_b1:.4f}, t_b2={t_b2:.4f})"
        )
        logging.warning(warnings[-1])

    return ScenarioResult(
        name="ss",
        distance=interior + d_prime + d_bar,
        v_f_prime=v_f_prime,
        x_f=front_travel,
        x_lead_or_rear=interior + front_travel,
        t_c=t_1,
        extent_rear=d_prime,
        extent_front=d_bar,
        components={
            "v_r_rho": v_r_rho, "t_1": t_1, "t_2": t_2, "theta_max": theta_rear,
            "theta_max_front": theta_front, "psi_max_front": psi_front,
            "d_prime": d_prime, "d_bar": d_bar, "interior": interior,
        },
        warnings=warnings,
    )


ScenarioFunction = Callable[..., ScenarioResult]

SCENARIOS: Dict[str, ScenarioFunction] = {
    "bb": d_brake_for_brake,
    "sb": d_swerve_for_brake,
    "bs": d_brake_for_swerve,
    "ss": d_swerve_for_swerve,
}


def scenario_distance(
    name: str, v_r: float, v_f: float, p: SafetyParams, g: VehicleGeometry,
    rho: Optional[float] = None, literal: bool = False,
) -> ScenarioResult:
    """Evaluates one scenario for two vehicles of the same geometry."""
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; expected one of {sorted(SCENARIOS)}")
    rho = p.rho if rho is None else rho
    return SCENARIOS[name](v_r, v_f, rho, g, g, p, literal=literal)
