"""
Baseline RSS quantities: post-reaction speeds, the longitudinal and lateral
safe distances and the two adjacency predicates.

Lateral speeds are signed. The rear vehicle sits on the left; a negative rear
lateral speed moves it toward the front vehicle, a positive front lateral speed
moves the front vehicle toward the rear one.
"""

from dataclasses import dataclass
from typing import Optional

from modules.config import SafetyParams, VehicleGeometry


@dataclass(frozen=True)
class LongitudinalScenario:
    v_r: float
    v_f: float

    def __post_init__(self):
        if self.v_r < 0 or self.v_f < 0:
            raise ValueError(f"speeds must be non-negative (got v_r={self.v_r}, v_f={self.v_f})")


@dataclass(frozen=True)
class LateralScenario:
    v_r_lat: float
    v_f_lat: float


def positive_part(x: float) -> float:
    return x if x > 0.0 else 0.0


def post_reaction_speed(v: float, p: SafetyParams, rho: Optional[float] = None) -> float:
    """Speed after accelerating at a_max_accel for the reaction time."""
    rho = p.rho if rho is None else rho
    return v + p.a_max_accel * rho


def braking_travel(v: float, t: float, decel: float) -> float:
    """Distance covered braking from v for time t, holding still once stopped."""
    if v == 0.0:
        return 0.0
    if t >= v / decel:
        return v ** 2 / (2.0 * decel)
    return v * t - 0.5 * decel * t ** 2


def d_long_brake_brake(s: LongitudinalScenario, p: SafetyParams, literal: bool = False) -> float:
    """
    Bumper-to-bumper distance for a rear vehicle braking behind a braking lead.

    With literal=True the braking term uses (v_r + v_r_rho)^2 instead of
    v_r_rho^2.
    """
    v_r_rho = post_reaction_speed(s.v_r, p)
    braking_speed = s.v_r + v_r_rho if literal else v_r_rho
    interior = (
        s.v_r * p.rho
        + 0.5 * p.a_max_accel * p.rho ** 2
        + braking_speed ** 2 / (2.0 * p.a_min_brake)
        - s.v_f ** 2 / (2.0 * p.a_max_brake)
    )
    return positive_part(interior)


def d_lat(s: LateralScenario, p: SafetyParams) -> float:
    v_r_rho = s.v_r_lat - p.a_lat_max * p.rho
    v_f_rho = s.v_f_lat + p.a_lat_max * p.rho
    bracket = (
        -0.5 * (s.v_r_lat + v_r_rho) * p.rho
        + v_r_rho ** 2 / (2.0 * p.a_lat_min)
        + 0.5 * (s.v_f_lat + v_f_rho) * p.rho
        + v_f_rho ** 2 / (2.0 * p.a_lat_min)
    )
    return p.mu + positive_part(bracket)


def laterally_adjacent(x1: float, x2: float, g: VehicleGeometry, g_other: Optional[VehicleGeometry] = None) -> bool:
    """True when the longitudinal centre positions put the chassis side by side."""
    g_other = g_other or g
    return x2 - g_other.d_r - g.d_f <= x1 <= x2 + g_other.d_r + g.d_f


def longitudinally_adjacent(
    y1: float, y2: float, lateral_distance: float, g: VehicleGeometry, g_other: Optional[VehicleGeometry] = None
) -> bool:
    """
    True when the lateral centre positions put one vehicle in front of the other.

    Uses b_r of the first vehicle and b_l of the second one when geometries differ.
    """
    g_other = g_other or g
    band = g.b_r + g_other.b_l + lateral_distance
    return y2 - band <= y1 <= y2 + band
