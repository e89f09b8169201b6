"""
Axis-aligned outer boxes of a rotated chassis and the lateral clearance distance.

For a left swerve with heading theta >= 0:
    front (d')   = d_f cos + b_r sin, capped at |(d_f, b_r)| past phi
    rear  (d_bar)= d_r cos + b_l sin, capped at |(d_r, b_l)| past gamma
    right (b')   = d_r sin + b_r cos, capped at |(d_r, b_r)| past the rear-right corner angle
    left         = d_f sin + b_l cos, the mirror of b' with (d_f, b_l)
Negative headings swap the roles of the two sides.
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import shapely

from modules.config import SafetyParams, VehicleGeometry
from modules.errors import DomainError
from modules.rss_core import LateralScenario, d_lat


@dataclass(frozen=True)
class RotatedExtents:
    d_prime: float
    d_bar: float
    b_prime: float
    b_prime_left: float
    theta_max: float


def corner_angles(g: VehicleGeometry) -> Tuple[float, float]:
    """phi (front-right corner) and gamma (rear-left corner)."""
    return math.atan(g.b_r / g.d_f), math.atan(g.b_l / g.d_r)


def _capped(cos_leg: float, sin_leg: float, theta: float, peak_angle: float) -> float:
    if theta <= peak_angle:
        return cos_leg * math.cos(theta) + sin_leg * math.sin(theta)
    return math.hypot(cos_leg, sin_leg)


def rotated_extents(g: VehicleGeometry, theta_max: float) -> RotatedExtents:
    if not (0.0 <= theta_max <= math.pi / 2):
        raise DomainError(f"theta_max must lie in [0, pi/2] (got {theta_max})")
    phi, gamma = corner_angles(g)
    return RotatedExtents(
        d_prime=_capped(g.d_f, g.b_r, theta_max, phi),
        d_bar=_capped(g.d_r, g.b_l, theta_max, gamma),
        # sin leg first: d_r sin + b_r cos peaks where tan(theta) = d_r / b_r
        b_prime=_capped(g.b_r, g.d_r, theta_max, math.pi / 2 - math.atan(g.b_r / g.d_r)),
        b_prime_left=_capped(g.b_l, g.d_f, theta_max, math.pi / 2 - math.atan(g.b_l / g.d_f)),
        theta_max=theta_max,
    )


def inner_half_side(g: VehicleGeometry) -> float:
    """Half side of the square inscribed in the circle of radius b_l."""
    return g.b_l / math.sqrt(2.0)


def lateral_clearance(g_swerving: VehicleGeometry, g_other: VehicleGeometry, theta_max: float, p: SafetyParams) -> float:
    extents = rotated_extents(g_swerving, theta_max)
    return extents.b_prime + g_other.b_l + d_lat(LateralScenario(0.0, 0.0), p)


def footprint_corners(x, y, theta, g: VehicleGeometry) -> np.ndarray:
    """
    Chassis corners for arrays of poses, shape (..., 4, 2).

    Order: front-left, front-right, rear-right, rear-left.
    """
    x, y, theta = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), np.asarray(theta, float))
    local = np.array([[g.d_f, g.b_l], [g.d_f, -g.b_r], [-g.d_r, -g.b_r], [-g.d_r, g.b_l]])
    c, s = np.cos(theta)[..., None], np.sin(theta)[..., None]
    cx = x[..., None] + c * local[:, 0] - s * local[:, 1]
    cy = y[..., None] + s * local[:, 0] + c * local[:, 1]
    return np.stack([cx, cy], axis=-1)


def outer_box(x, y, theta, g: VehicleGeometry) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Vectorized (x_min, x_max, y_min, y_max) of the rotated chassis.

    Uses the capped extent formulas at each sample's own heading, so the box
    always contains the four corners.
    """
    x, y, theta = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), np.asarray(theta, float))
    a = np.abs(theta)
    left_turn = theta >= 0.0
    # mirroring a right turn swaps b_l and b_r
    b_near = np.where(left_turn, g.b_r, g.b_l)
    b_far = np.where(left_turn, g.b_l, g.b_r)

    def capped(cos_leg, sin_leg):
        value = cos_leg * np.cos(a) + sin_leg * np.sin(a)
        peak = np.arctan2(sin_leg, cos_leg)
        return np.where(a <= peak, value, np.hypot(cos_leg, sin_leg))

    front = capped(g.d_f, b_near)
    rear = capped(g.d_r, b_far)
    near_side = capped(b_near, g.d_r)
    far_side = capped(b_far, g.d_f)
    lower = np.where(left_turn, near_side, far_side)
    upper = np.where(left_turn, far_side, near_side)
    return x - rear, x + front, y - lower, y + upper


def rectangles_overlap(corners_a: np.ndarray, corners_b: np.ndarray) -> np.ndarray:
    """
    Exact overlap test for arrays of oriented rectangles.

    Inputs have shape (..., 4, 2); touching rectangles do not overlap.
    """
    polys_a = shapely.polygons(np.asarray(corners_a, dtype=float))
    polys_b = shapely.polygons(np.asarray(corners_b, dtype=float))
    return np.asarray(shapely.intersects(polys_a, polys_b) & ~shapely.touches(polys_a, polys_b), dtype=bool)
