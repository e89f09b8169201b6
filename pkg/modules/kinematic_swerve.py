"""
Constant-speed, bang-bang steering lane change for the kinematic bicycle model.

The manoeuvre is two circular arcs of the centre of mass with radius R_c: steer
+delta_c until the yaw reaches theta_max, then -delta_c until the yaw returns to
zero. Positions are those of the centre of mass in a frame where the swerve starts
at the origin heading along +x and ends at y = alpha. psi is the velocity heading,
theta the chassis yaw, theta = psi - beta.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np
import pandas as pd

from modules.config import SafetyParams, VehicleGeometry
from modules.errors import (
    ClearanceUnreachableError,
    DegenerateSpeedError,
    DomainError,
    HeadingLimitError,
    InfeasibleLaneChangeError,
)

TRAJECTORY_COLUMNS = ["t", "x", "y", "theta", "psi"]


class ArcCase(str, Enum):
    FIRST_ARC = "FirstArc"
    SECOND_ARC = "SecondArc"


@dataclass(frozen=True)
class SwerveManoeuvre:
    v: float
    R_c: float
    R_r: float
    delta_c: float
    beta_c: float
    theta_max: float
    psi_max: float
    duration: float
    alpha: float

    @property
    def psi_hat(self) -> float:
        """Velocity heading at the start of the second arc."""
        return self.psi_max - 2.0 * self.beta_c

    @property
    def x_hat(self) -> float:
        return self.R_c * (math.sin(self.psi_max) - math.sin(self.beta_c))

    @property
    def y_hat(self) -> float:
        return self.R_c * (math.cos(self.beta_c) - math.cos(self.psi_max))

    @property
    def x_end(self) -> float:
        return self.x_hat + self.R_c * (math.sin(self.psi_hat) + math.sin(self.beta_c))

    @property
    def l_r(self) -> float:
        return self.R_r * math.tan(self.beta_c)

    @property
    def lateral_accel(self) -> float:
        return self.v ** 2 / self.R_c


@dataclass(frozen=True)
class ClearanceResult:
    x_c: float
    t_c: float
    arc_case: ArcCase
    psi_c: float


def min_turn_radius_steering(g: VehicleGeometry, p: SafetyParams, literal: bool = False) -> float:
    """Centre-of-mass radius at full steering lock."""
    L = g.wheelbase
    if literal:
        return math.sqrt(L ** 2 / (math.tan(p.delta_max) ** 2 + g.l_r ** 2))
    return math.sqrt((L / math.tan(p.delta_max)) ** 2 + g.l_r ** 2)


def min_turn_radius_accel(v: float, p: SafetyParams) -> float:
    return v ** 2 / p.a_lat_min


def build_swerve(v: float, g: VehicleGeometry, p: SafetyParams, literal: bool = False) -> SwerveManoeuvre:
    if not math.isfinite(v) or v <= 0.0:
        raise DegenerateSpeedError(f"swerve speed must be positive (got {v})")

    R_c = max(min_turn_radius_steering(g, p, literal), min_turn_radius_accel(v, p))
    if R_c <= g.l_r:
        raise DomainError(f"turn radius {R_c:.4f} m does not exceed l_r={g.l_r} m")
    R_r = math.sqrt(R_c ** 2 - g.l_r ** 2)
    delta_c = math.atan(g.wheelbase / R_r)
    beta_c = math.atan(g.l_r / R_r)

    ratio = p.alpha / (2.0 * R_r)
    if ratio > 2.0:
        raise InfeasibleLaneChangeError(
            f"lane offset {p.alpha} m cannot be reached with rear-axle radius {R_r:.3f} m"
        )
    theta_max = math.acos(1.0 - ratio)
    psi_max = theta_max + beta_c
    if psi_max > math.pi / 2:
        raise HeadingLimitError(f"swerve heading {psi_max:.4f} rad exceeds pi/2 at v={v}")

    duration = 2.0 * R_c * (psi_max - beta_c) / v
    logging.debug(f"Swerve at v={v:.3f}: R_c={R_c:.3f}, theta_max={theta_max:.5f}, duration={duration:.4f}")
    return SwerveManoeuvre(
        v=v, R_c=R_c, R_r=R_r, delta_c=delta_c, beta_c=beta_c,
        theta_max=theta_max, psi_max=psi_max, duration=duration, alpha=p.alpha,
    )


def clearance(m: SwerveManoeuvre, y_c: float) -> ClearanceResult:
    """Longitudinal travel and time until the centre of mass is y_c to the side."""
    if y_c < 0.0:
        raise DomainError(f"lateral clearance must be non-negative (got {y_c})")
    if y_c > m.alpha + 1e-12:
        raise ClearanceUnreachableError(f"clearance {y_c:.4f} m exceeds the lane offset {m.alpha} m")
    if y_c == 0.0 or m.duration == 0.0:
        return ClearanceResult(x_c=0.0, t_c=0.0, arc_case=ArcCase.FIRST_ARC, psi_c=m.beta_c)

    if y_c <= m.R_c * (math.cos(m.beta_c) - math.cos(m.psi_max)):
        psi_c = math.acos(_clip_unit(math.cos(m.beta_c) - y_c / m.R_c))
        x_c = m.R_c * (math.sin(psi_c) - math.sin(m.beta_c))
        t_c = m.R_c * (psi_c - m.beta_c) / m.v
        return ClearanceResult(x_c=x_c, t_c=t_c, arc_case=ArcCase.FIRST_ARC, psi_c=psi_c)

    # y peaks above alpha where psi crosses zero, so y_c is first met on the rising part
    psi_c = math.acos(_clip_unit((y_c - m.y_hat) / m.R_c + math.cos(m.psi_hat)))
    x_c = m.R_c * (math.sin(m.psi_hat) - math.sin(psi_c)) + m.x_hat
    t_c = m.R_c * (m.psi_max - m.beta_c + m.psi_hat - psi_c) / m.v
    return ClearanceResult(x_c=x_c, t_c=t_c, arc_case=ArcCase.SECOND_ARC, psi_c=psi_c)


def rear_axle_clearance(m: SwerveManoeuvre, y_c: float) -> ClearanceResult:
    """
    Centre-of-mass travel and time until the rear axle is y_c to the side.

    The rear axle follows two arcs of radius R_r and, unlike the centre of mass,
    never rises above alpha, so it meets y_c exactly once. Reported x_c is the
    centre-of-mass displacement at that moment.
    """
    if y_c < 0.0:
        raise DomainError(f"lateral clearance must be non-negative (got {y_c})")
    if y_c > m.alpha + 1e-12:
        raise ClearanceUnreachableError(f"clearance {y_c:.4f} m exceeds the lane offset {m.alpha} m")
    if y_c == 0.0 or m.duration == 0.0:
        return ClearanceResult(x_c=0.0, t_c=0.0, arc_case=ArcCase.FIRST_ARC, psi_c=m.beta_c)

    if y_c <= 0.5 * m.alpha:
        theta_c = math.acos(_clip_unit(1.0 - y_c / m.R_r))
        x_rear = m.R_r * math.sin(theta_c)
        t_c = m.R_c * theta_c / m.v
        arc_case, psi_c = ArcCase.FIRST_ARC, theta_c + m.beta_c
    else:
        theta_c = math.acos(_clip_unit(1.0 - (m.alpha - y_c) / m.R_r))
        x_rear = m.R_r * (2.0 * math.sin(m.theta_max) - math.sin(theta_c))
        t_c = m.R_c * (2.0 * m.theta_max - theta_c) / m.v
        arc_case, psi_c = ArcCase.SECOND_ARC, theta_c - m.beta_c
    x_c = x_rear - m.l_r * (1.0 - math.cos(theta_c))
    return ClearanceResult(x_c=x_c, t_c=t_c, arc_case=arc_case, psi_c=psi_c)


def _clip_unit(value: float) -> float:
    return min(1.0, max(-1.0, value))


def pose_at(m: SwerveManoeuvre, t) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Vectorized (x, y, theta, psi) at times t >= 0.

    Past the end of the swerve the vehicle continues straight at speed v.
    """
    t = np.asarray(t, dtype=float)
    half = 0.5 * m.duration
    first = t <= half
    after = t >= m.duration

    psi_first = m.beta_c + m.v * t / m.R_c
    psi_second = m.psi_hat - m.v * (t - half) / m.R_c
    psi = np.where(first, psi_first, psi_second)

    x = np.where(
        first,
        m.R_c * (np.sin(psi) - math.sin(m.beta_c)),
        m.x_hat + m.R_c * (math.sin(m.psi_hat) - np.sin(psi)),
    )
    y = np.where(
        first,
        m.R_c * (math.cos(m.beta_c) - np.cos(psi)),
        m.y_hat + m.R_c * (np.cos(psi) - math.cos(m.psi_hat)),
    )
    theta = np.where(first, psi - m.beta_c, psi + m.beta_c)

    x = np.where(after, m.x_end + m.v * (t - m.duration), x)
    y = np.where(after, m.alpha, y)
    theta = np.where(after, 0.0, theta)
    psi = np.where(after, 0.0, psi)
    return x, y, theta, psi


def rear_axle_pose_at(m: SwerveManoeuvre, t) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized rear-axle (x, y, theta, psi), measured from where the rear axle starts."""
    _, _, theta, psi = pose_at(m, t)
    t = np.asarray(t, dtype=float)
    first = t <= 0.5 * m.duration
    after = t >= m.duration
    lift = m.R_r * (1.0 - np.cos(theta))
    x = np.where(first, m.R_r * np.sin(theta), m.R_r * (2.0 * math.sin(m.theta_max) - np.sin(theta)))
    y = np.where(first, lift, m.alpha - lift)
    x = np.where(after, 2.0 * m.R_r * math.sin(m.theta_max) + m.v * (t - m.duration), x)
    y = np.where(after, m.alpha, y)
    return x, y, theta, psi


def sample_trajectory(m: SwerveManoeuvre, dt: float) -> pd.DataFrame:
    """
    Rear-axle samples every dt up to and including the end of the swerve.

    The rear axle is the point the boundary conditions y(t_f) = alpha and
    theta(t_f) = 0 refer to, and its y never decreases.
    """
    if dt <= 0.0:
        raise DomainError(f"sample step must be positive (got {dt})")
    times = np.arange(0.0, m.duration, dt) if m.duration > 0.0 else np.zeros(1)
    if m.duration > 0.0:
        times = np.append(times, m.duration)
    x, y, theta, psi = rear_axle_pose_at(m, times)
    if m.duration > 0.0:
        y[-1], theta[-1] = m.alpha, 0.0
    return pd.DataFrame({"t": times, "x": x, "y": y, "theta": theta, "psi": psi}, columns=TRAJECTORY_COLUMNS)


def integrate_bicycle(m: SwerveManoeuvre, g: VehicleGeometry, dt: float = 1e-3) -> pd.DataFrame:
    """
    RK4 integration of the kinematic bicycle ODE under the swerve's steering.

    Independent of the closed-form arcs; used as an oracle for clearance().
    The step is shrunk so that the steering switch falls on a grid point.
    """
    if m.duration == 0.0:
        return pd.DataFrame({"t": [0.0], "x": [0.0], "y": [0.0], "theta": [0.0]})
    half = 0.5 * m.duration
    n_half = max(1, math.ceil(half / dt))
    h = half / n_half
    L = g.wheelbase

    def rates(state, delta):
        beta = math.atan(g.l_r * math.tan(delta) / L)
        heading = state[2] + beta
        return np.array([
            m.v * math.cos(heading),
            m.v * math.sin(heading),
            m.v * math.cos(beta) * math.tan(delta) / L,
        ])

    state = np.zeros(3)
    rows = [(0.0, *state)]
    for k in range(2 * n_half):
        delta = m.delta_c if k < n_half else -m.delta_c
        k1 = rates(state, delta)
        k2 = rates(state + 0.5 * h * k1, delta)
        k3 = rates(state + 0.5 * h * k2, delta)
        k4 = rates(state + h * k3, delta)
        state = state + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rows.append(((k + 1) * h, *state))
    return pd.DataFrame(rows, columns=["t", "x", "y", "theta"])


def first_crossing(trajectory: pd.DataFrame, y_c: float) -> Tuple[float, float]:
    """(t, x) where y first reaches y_c, linearly interpolated between samples."""
    y = trajectory["y"].to_numpy()
    hits = np.nonzero(y >= y_c)[0]
    if hits.size == 0:
        raise ClearanceUnreachableError(f"trajectory never reaches y={y_c}")
    i = int(hits[0])
    t = trajectory["t"].to_numpy()
    x = trajectory["x"].to_numpy()
    if i == 0:
        return float(t[0]), float(x[0])
    w = (y_c - y[i - 1]) / (y[i] - y[i - 1])
    return float(t[i - 1] + w * (t[i] - t[i - 1])), float(x[i - 1] + w * (x[i] - x[i - 1]))
