"""
Lower bound on swerve clearance from a point-mass model.

A particle that brakes at a_min_brake while pushing sideways at a_lat_min
reaches y_c as fast as any admissible vehicle can, and the chassis is shrunk to
the square inscribed in the b_l circle. The resulting spacing is necessary for
a swerve around a braking lead. Swerves limited only by the tires are bounded
by the same particle with both accelerations at the tire peak.
"""

import math
from dataclasses import dataclass
from typing import Dict, Optional

from modules.config import DynamicParams, SafetyParams, VehicleGeometry
from modules.kinematic_swerve import build_swerve, clearance, rear_axle_clearance
from modules.rotation_geometry import inner_half_side, lateral_clearance, rotated_extents
from modules.rss_core import braking_travel


@dataclass(frozen=True)
class LowerBoundResult:
    x_bar_c: float
    t_c: float
    d_bar_long: float


def particle_clearance(
    v: float, y_c: float, g: VehicleGeometry, p: SafetyParams,
    a_lat: Optional[float] = None, a_brake: Optional[float] = None,
):
    """(t_c, x_bar_c) for a particle starting at speed v; accelerations default to the comfort limits."""
    if y_c < 0.0:
        raise ValueError(f"y_c must be non-negative (got {y_c})")
    a_lat = p.a_lat_min if a_lat is None else a_lat
    a_brake = p.a_min_brake if a_brake is None else a_brake
    t_c = math.sqrt(2.0 * y_c / a_lat)
    # the particle may stop before it is clear; it does not reverse
    x_bar_c = braking_travel(v, t_c, a_brake) + inner_half_side(g)
    return t_c, x_bar_c


def lower_bound(
    v_r: float, v_f: float, y_c: float, g: VehicleGeometry, p: SafetyParams,
    psi_max: Optional[float] = None, cap_lead_speed: bool = True,
) -> LowerBoundResult:
    """
    Necessary spacing (interior, without extents) when swerving for a braking lead.

    With cap_lead_speed the lead's speed is bounded by v_r cos(psi_max), the same
    way the kinematic swerve-for-brake distance does, which holds while the gap
    between the vehicles shrinks monotonically. Without it the lead brakes from
    its real speed v_f. psi_max is taken from the kinematic swerve at the
    post-reaction speed when omitted.
    """
    if v_r < 0.0:
        raise ValueError(f"v_r must be non-negative (got {v_r})")
    v = v_r + p.a_max_accel * p.rho
    t_c, x_bar_c = particle_clearance(v, y_c, g, p)
    if cap_lead_speed:
        if psi_max is None:
            psi_max = build_swerve(v, g, p).psi_max if v > 0.0 else 0.0
        v_f_prime = min(v_f, v_r * math.cos(psi_max))
    else:
        v_f_prime = v_f
    x_f = braking_travel(v_f_prime, p.rho + t_c, p.a_max_brake)
    d_bar_long = v_r * p.rho + 0.5 * p.a_max_accel * p.rho ** 2 + x_bar_c - x_f
    return LowerBoundResult(x_bar_c=x_bar_c, t_c=t_c, d_bar_long=d_bar_long)


def paired_lower_bound(
    v_r: float, v_f: float, g_rear: VehicleGeometry, g_front: VehicleGeometry, p: SafetyParams,
    cap_lead_speed: bool = True,
) -> LowerBoundResult:
    """Lower bound using the y_c of the matching kinematic swerve."""
    v = v_r + p.a_max_accel * p.rho
    swerve = build_swerve(v, g_rear, p) if v > 0.0 else None
    theta_max = swerve.theta_max if swerve else 0.0
    y_c = lateral_clearance(g_rear, g_front, theta_max, p)
    return lower_bound(
        v_r, v_f, y_c, g_rear, p, psi_max=swerve.psi_max if swerve else 0.0, cap_lead_speed=cap_lead_speed,
    )


def kinematic_pair(
    v0: float, g_rear: VehicleGeometry, g_front: VehicleGeometry, p: SafetyParams,
    dp: Optional[DynamicParams] = None,
) -> Dict[str, float]:
    """
    Kinematic and particle clearance travel for a swerve starting at speed v0.

    x_c is the centre-of-mass clearance of the kinematic arcs. x_c_kinematic is
    the front-bumper travel the swerve-for-brake distance charges: the rear-axle
    clearance plus the rotated front extent d'. Particle travel already carries
    the inscribed half side; with dp, x_c_lower_tire bounds tire-limited swerves.
    """
    swerve = build_swerve(v0, g_rear, p)
    y_c = lateral_clearance(g_rear, g_front, swerve.theta_max, p)
    kinematic = clearance(swerve, y_c)
    rear_axle = rear_axle_clearance(swerve, y_c)
    t_c, x_bar_c = particle_clearance(v0, y_c, g_rear, p)
    pair = {
        "v0": v0,
        "y_c": y_c,
        "x_c": kinematic.x_c,
        "x_c_kinematic": rear_axle.x_c + rotated_extents(g_rear, swerve.theta_max).d_prime,
        "x_c_lower": x_bar_c,
        "t_c_kinematic": rear_axle.t_c,
        "t_c_lower": t_c,
    }
    if dp is not None:
        peak = dp.peak_tire_acceleration
        pair["x_c_lower_tire"] = particle_clearance(v0, y_c, g_rear, p, a_lat=peak, a_brake=peak)[1]
    return pair
