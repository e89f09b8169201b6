"""
Worst-case, fixed-step simulation of scripted vehicles.

Every agent follows a closed-form script: braking phases are exact
constant-deceleration motion, swerves are sampled from the kinematic arcs.
Reacting followers accelerate at a_max_accel for the reaction time before
their response starts. Footprints are checked with the rotation-compensated
outer boxes at every step; touching boxes are not a collision.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from modules.config import SafetyParams, VehicleGeometry
from modules.errors import BracketError, DomainError
from modules.kinematic_swerve import SwerveManoeuvre, build_swerve, pose_at
from modules.rotation_geometry import footprint_corners, outer_box, rectangles_overlap
from modules.scenario_distances import SCENARIOS
from modules.universal_distance import TripleState, universal

MAX_DT = 0.01


class Role(str, Enum):
    BRAKING_LEAD = "BrakingLead"
    SWERVING_LEAD = "SwervingLead"
    REACTING_FOLLOWER = "ReactingFollower"


class Manoeuvre(str, Enum):
    BRAKE = "brake"
    SWERVE = "swerve"


@dataclass(frozen=True)
class AgentScript:
    role: Role
    manoeuvre: Manoeuvre
    trigger_time: float
    initial: Tuple[float, float, float]
    geometry: Optional[VehicleGeometry] = None
    direction: int = 1
    reaction_time: Optional[float] = None

    def __post_init__(self):
        if self.role is Role.BRAKING_LEAD and self.manoeuvre is not Manoeuvre.BRAKE:
            raise DomainError("a braking lead must brake")
        if self.role is Role.SWERVING_LEAD and self.manoeuvre is not Manoeuvre.SWERVE:
            raise DomainError("a swerving lead must swerve")
        if self.trigger_time < 0:
            raise DomainError(f"trigger_time must be non-negative (got {self.trigger_time})")
        if self.initial[2] < 0:
            raise DomainError(f"initial speed must be non-negative (got {self.initial[2]})")
        if self.direction not in (1, -1):
            raise DomainError(f"direction must be +1 (left) or -1 (right) (got {self.direction})")

    def to_dict(self) -> Dict:
        data = {
            "role": self.role.value,
            "manoeuvre": self.manoeuvre.value,
            "trigger_time": self.trigger_time,
            "initial": list(self.initial),
            "direction": self.direction,
        }
        if self.reaction_time is not None:
            data["reaction_time"] = self.reaction_time
        if self.geometry is not None:
            data["geometry"] = asdict(self.geometry)
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "AgentScript":
        geometry = data.get("geometry")
        return cls(
            role=Role(data["role"]),
            manoeuvre=Manoeuvre(data["manoeuvre"]),
            trigger_time=float(data["trigger_time"]),
            initial=tuple(float(v) for v in data["initial"]),
            geometry=VehicleGeometry(**geometry) if geometry else None,
            direction=int(data.get("direction", 1)),
            reaction_time=data.get("reaction_time"),
        )


@dataclass
class SimOutcome:
    min_gap_long: float
    min_gap_lat: float
    collided: bool
    first_violation_time: Optional[float]
    collision_pair: Optional[Tuple[int, int]] = None

    def to_dict(self) -> Dict:
        def number(value):
            return value if value is None or math.isfinite(value) else None

        return {
            "min_gap_long": number(self.min_gap_long),
            "min_gap_lat": number(self.min_gap_lat),
            "collided": self.collided,
            "first_violation_time": self.first_violation_time,
            "collision_pair": list(self.collision_pair) if self.collision_pair else None,
        }


def agents_to_json(agents: Sequence[AgentScript]) -> str:
    return json.dumps({"agents": [a.to_dict() for a in agents]}, indent=2)


def agents_from_json(text: str) -> List[AgentScript]:
    return [AgentScript.from_dict(item) for item in json.loads(text)["agents"]]


@dataclass
class _Plan:
    """Scalar description of one agent's motion."""

    x0: float
    y0: float
    v0: float
    segments: List[Tuple[float, float]]
    swerve: Optional[SwerveManoeuvre] = None
    swerve_start: float = 0.0
    swerve_decel: float = 0.0
    direction: int = 1
    geometry: VehicleGeometry = field(default_factory=VehicleGeometry)
    end_time: float = 0.0


def _segment_speeds(v0: float, segments: List[Tuple[float, float]]) -> List[float]:
    """Speed at the start of each constant-acceleration segment."""
    speeds = [v0]
    for (start, accel), (next_start, _) in zip(segments, segments[1:]):
        v = speeds[-1] + accel * (next_start - start)
        speeds.append(max(v, 0.0))
    return speeds


def _longitudinal(t: np.ndarray, v0: float, segments: List[Tuple[float, float]]) -> Tuple[np.ndarray, np.ndarray]:
    """Displacement and speed for piecewise-constant acceleration; braking holds at zero speed."""
    speeds = _segment_speeds(v0, segments)
    x = np.zeros_like(t)
    v = np.full_like(t, v0)
    bounds = [start for start, _ in segments[1:]] + [math.inf]
    for (start, accel), end, v_start in zip(segments, bounds, speeds):
        tau = np.clip(t - start, 0.0, end - start)
        if accel < 0.0:
            tau = np.minimum(tau, v_start / -accel)
        x += v_start * tau + 0.5 * accel * tau ** 2
        inside = (t >= start) & (t < end)
        v = np.where(inside, np.maximum(v_start + accel * np.clip(t - start, 0.0, None), 0.0), v)
    return x, v


def _plan(agent: AgentScript, g: VehicleGeometry, p: SafetyParams) -> _Plan:
    x0, y0, v0 = agent.initial
    geometry = agent.geometry or g
    trigger = agent.trigger_time
    segments: List[Tuple[float, float]] = [(0.0, 0.0)]
    if agent.role is Role.REACTING_FOLLOWER:
        reaction = p.rho if agent.reaction_time is None else agent.reaction_time
        segments.append((max(trigger - reaction, 0.0), p.a_max_accel))
    decel = p.a_max_brake if agent.role is not Role.REACTING_FOLLOWER else p.a_min_brake

    if agent.manoeuvre is Manoeuvre.BRAKE:
        segments.append((trigger, -decel))
        v_trigger = _segment_speeds(v0, segments)[-1]
        return _Plan(x0, y0, v0, segments, geometry=geometry, end_time=trigger + v_trigger / decel)

    # swerving: speed is frozen at the trigger for the whole swerve
    segments.append((trigger, 0.0))
    v_trigger = _segment_speeds(v0, segments)[-1]
    swerve = build_swerve(v_trigger, geometry, p) if v_trigger > 0.0 else None
    duration = swerve.duration if swerve else 0.0
    return _Plan(
        x0, y0, v0, segments, swerve=swerve, swerve_start=trigger, swerve_decel=decel,
        direction=agent.direction, geometry=geometry,
        end_time=trigger + duration + (v_trigger / decel if swerve else 0.0),
    )


def _evaluate(plan: _Plan, t: np.ndarray) -> Dict[str, np.ndarray]:
    dx, v = _longitudinal(t, plan.v0, plan.segments)
    x = plan.x0 + dx
    y = np.full_like(t, plan.y0)
    theta = np.zeros_like(t)
    if plan.swerve is None:
        return {"x": x, "y": y, "theta": theta, "v": v}

    m = plan.swerve
    tau = t - plan.swerve_start
    active = tau >= 0.0
    x_start = plan.x0 + _longitudinal(np.array([plan.swerve_start]), plan.v0, plan.segments)[0][0]
    sx, sy, stheta, _ = pose_at(m, np.clip(tau, 0.0, m.duration))
    after = np.clip(tau - m.duration, 0.0, None)
    stop = m.v / plan.swerve_decel
    brake_tau = np.minimum(after, stop)
    extra = m.v * brake_tau - 0.5 * plan.swerve_decel * brake_tau ** 2

    x = np.where(active, x_start + sx + extra, x)
    y = np.where(active, plan.y0 + plan.direction * sy, y)
    theta = np.where(active, plan.direction * stheta, theta)
    v = np.where(active, np.maximum(m.v - plan.swerve_decel * after, 0.0), v)
    return {"x": x, "y": y, "theta": theta, "v": v}


def time_grid(dt: float, horizon: float) -> np.ndarray:
    if not (0.0 < dt <= MAX_DT):
        raise DomainError(f"dt must lie in (0, {MAX_DT}] (got {dt})")
    if horizon <= 0.0:
        raise DomainError(f"horizon must be positive (got {horizon})")
    return dt * np.arange(int(round(horizon / dt)) + 1)


def default_horizon(agents: Sequence[AgentScript], g: VehicleGeometry, p: SafetyParams) -> float:
    return max(_plan(agent, g, p).end_time for agent in agents) + 0.5


def tracks(agents: Sequence[AgentScript], t: np.ndarray, g: VehicleGeometry, p: SafetyParams) -> List[Dict[str, np.ndarray]]:
    return [_evaluate(_plan(agent, g, p), t) for agent in agents]


def run(
    agents: Sequence[AgentScript], dt: float, horizon: Optional[float], g: VehicleGeometry, p: SafetyParams,
    exact: bool = False, lateral_buffer: float = 0.0,
) -> SimOutcome:
    """
    Steps every agent on a shared grid and reports the closest approach.

    A pair counts as a hit when the boxes overlap longitudinally and sit less
    than lateral_buffer apart sideways; with the default 0 only a real overlap
    counts. Without a buffer, exact re-checks overlapping boxes against the
    oriented chassis.
    """
    if lateral_buffer < 0.0:
        raise DomainError(f"lateral_buffer must be non-negative (got {lateral_buffer})")
    if len(agents) < 2:
        raise DomainError("a simulation needs at least two agents")
    plans = [_plan(agent, g, p) for agent in agents]
    if horizon is None:
        horizon = max(plan.end_time for plan in plans) + 0.5
    t = time_grid(dt, horizon)
    states = [_evaluate(plan, t) for plan in plans]
    boxes = [outer_box(s["x"], s["y"], s["theta"], plan.geometry) for s, plan in zip(states, plans)]

    min_long = math.inf
    min_lat = math.inf
    first_hit: Optional[int] = None
    pair: Optional[Tuple[int, int]] = None
    for i in range(len(agents)):
        for j in range(i + 1, len(agents)):
            xi0, xi1, yi0, yi1 = boxes[i]
            xj0, xj1, yj0, yj1 = boxes[j]
            sep_x = np.maximum(xj0 - xi1, xi0 - xj1)
            sep_y = np.maximum(yj0 - yi1, yi0 - yj1)
            x_overlap = sep_x < 0.0
            y_overlap = sep_y < 0.0
            y_close = sep_y < lateral_buffer
            if y_overlap.any():
                min_long = min(min_long, float(sep_x[y_overlap].min()))
            if x_overlap.any():
                min_lat = min(min_lat, float(sep_y[x_overlap].min()))
            hits = x_overlap & y_close
            if exact and lateral_buffer == 0.0 and hits.any():
                idx = np.nonzero(hits)[0]
                ci = footprint_corners(states[i]["x"][idx], states[i]["y"][idx], states[i]["theta"][idx], plans[i].geometry)
                cj = footprint_corners(states[j]["x"][idx], states[j]["y"][idx], states[j]["theta"][idx], plans[j].geometry)
                hits = np.zeros_like(hits)
                hits[idx] = rectangles_overlap(ci, cj)
            if hits.any():
                k = int(np.argmax(hits))
                if first_hit is None or k < first_hit:
                    first_hit, pair = k, (i, j)

    collided = first_hit is not None
    outcome = SimOutcome(
        min_gap_long=min_long,
        min_gap_lat=min_lat,
        collided=collided,
        first_violation_time=float(t[first_hit]) if collided else None,
        collision_pair=pair,
    )
    logging.debug(f"Simulated {len(agents)} agents over {horizon:.2f} s: collided={collided}")
    return outcome


def scenario_agents(
    kind: str, v_r: float, v_f: float, gap: float, p: SafetyParams,
    g_rear: Optional[VehicleGeometry] = None, g_front: Optional[VehicleGeometry] = None,
) -> List[AgentScript]:
    """Rear follower at the origin, lead `gap` metres ahead (centre to centre)."""
    if kind not in SCENARIOS:
        raise KeyError(f"unknown scenario {kind!r}; expected one of {sorted(SCENARIOS)}")
    rear_response, lead_action = kind[0], kind[1]
    lead = AgentScript(
        role=Role.BRAKING_LEAD if lead_action == "b" else Role.SWERVING_LEAD,
        manoeuvre=Manoeuvre.BRAKE if lead_action == "b" else Manoeuvre.SWERVE,
        trigger_time=0.0,
        initial=(gap, 0.0, v_f),
        geometry=g_front,
    )
    rear = AgentScript(
        role=Role.REACTING_FOLLOWER,
        manoeuvre=Manoeuvre.BRAKE if rear_response == "b" else Manoeuvre.SWERVE,
        trigger_time=p.rho,
        initial=(0.0, 0.0, v_r),
        geometry=g_rear,
    )
    return [rear, lead]


def longitudinal_gap_series(
    agents: Sequence[AgentScript], dt: float, horizon: Optional[float], g: VehicleGeometry, p: SafetyParams,
    rear: int = 0, front: int = 1,
) -> pd.DataFrame:
    """Box-to-box longitudinal gap between two agents at every step."""
    plans = [_plan(agent, g, p) for agent in agents]
    if horizon is None:
        horizon = max(plan.end_time for plan in plans) + 0.5
    t = time_grid(dt, horizon)
    rs, fs = _evaluate(plans[rear], t), _evaluate(plans[front], t)
    _, rear_front_edge, _, _ = outer_box(rs["x"], rs["y"], rs["theta"], plans[rear].geometry)
    front_rear_edge, _, _, _ = outer_box(fs["x"], fs["y"], fs["theta"], plans[front].geometry)
    return pd.DataFrame({"t": t, "gap": front_rear_edge - rear_front_edge})


def minimal_safe_spacing(
    kind: str, v_r: float, v_f: float, dt: float, g: VehicleGeometry, p: SafetyParams,
    g_front: Optional[VehicleGeometry] = None, tol: float = 0.01, exact: bool = False,
) -> float:
    """Smallest centre-to-centre starting gap (to tol) at which the scripted pair never touches."""
    g_front = g_front or g

    def collides(gap: float) -> bool:
        agents = scenario_agents(kind, v_r, v_f, gap, p, g, g_front)
        return run(agents, dt, None, g, p, exact=exact).collided

    lo = g.d_f + g_front.d_r
    if not collides(lo):
        return lo
    hi = max(SCENARIOS[kind](v_r, v_f, p.rho, g, g_front, p).distance, lo + tol)
    for _ in range(8):
        if not collides(hi):
            break
        hi = lo + 1.5 * (hi - lo)
    else:
        raise BracketError(f"no collision-free spacing found for {kind} at v_r={v_r}, v_f={v_f} (tried up to {hi:.2f} m)")

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if collides(mid):
            lo = mid
        else:
            hi = mid
    return hi


def block_agents(
    speeds: Sequence[float], lead_manoeuvre: Manoeuvre, g: VehicleGeometry, p: SafetyParams,
    spacing_scale: float = 1.0,
) -> List[AgentScript]:
    """
    A single-lane block, front vehicle first, each follower at the universal distance.

    Responses alternate down the block: a vehicle behind a braking one swerves,
    a vehicle behind a swerving one brakes.
    """
    if len(speeds) < 2:
        raise DomainError("a block needs at least two vehicles")
    positions = [0.0]
    for k in range(1, len(speeds)):
        ahead_two = speeds[k - 2] if k >= 2 else None
        spacing = universal(TripleState(speeds[k], speeds[k - 1], ahead_two), p, g)
        positions.append(positions[-1] - spacing_scale * spacing)

    lead_braking = lead_manoeuvre is Manoeuvre.BRAKE
    agents = [AgentScript(
        role=Role.BRAKING_LEAD if lead_braking else Role.SWERVING_LEAD,
        manoeuvre=lead_manoeuvre,
        trigger_time=0.0,
        initial=(positions[0], 0.0, speeds[0]),
    )]
    for k in range(1, len(speeds)):
        previous = agents[-1].manoeuvre
        agents.append(AgentScript(
            role=Role.REACTING_FOLLOWER,
            manoeuvre=Manoeuvre.SWERVE if previous is Manoeuvre.BRAKE else Manoeuvre.BRAKE,
            trigger_time=k * p.rho,
            initial=(positions[k], 0.0, speeds[k]),
        ))
    return agents


BLOCK_BREAK_FACTOR = 1.5


def split_blocks(positions: Sequence[float], speeds: Sequence[float], g: VehicleGeometry, p: SafetyParams) -> List[List[int]]:
    """
    Splits a single lane, front vehicle first, into independent blocks.

    A follower starts a new block when its gap exceeds BLOCK_BREAK_FACTOR times
    both the brake-for-brake and swerve-for-swerve distances to the vehicle ahead.
    """
    if len(positions) != len(speeds):
        raise DomainError("positions and speeds must have the same length")
    if any(b > a for a, b in zip(positions, positions[1:])):
        raise DomainError("positions must be ordered front vehicle first")
    blocks: List[List[int]] = [[0]] if positions else []
    for k in range(1, len(positions)):
        v_r, v_f = speeds[k], speeds[k - 1]
        reach = max(
            SCENARIOS["bb"](v_r, v_f, p.rho, g, g, p).distance,
            SCENARIOS["ss"](v_r, v_f, p.rho, g, g, p).distance,
        )
        if positions[k - 1] - positions[k] > BLOCK_BREAK_FACTOR * reach:
            blocks.append([k])
        else:
            blocks[-1].append(k)
    return blocks
