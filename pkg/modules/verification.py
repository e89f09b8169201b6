"""
Property suites that check the closed-form distances against the worst-case
simulation.

A suite is a list of properties; each property draws its cases from a seeded
generator up front, so the report depends only on (parameters, seed, case
counts) and not on the order in which worker threads finish.
"""

import concurrent.futures
import json
import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from modules.config import SafetyParams, VehicleGeometry
from modules.errors import DomainError
from modules.kinematic_swerve import build_swerve, clearance, first_crossing, integrate_bicycle
from modules.particle_lower_bound import lower_bound
from modules.rotation_geometry import corner_angles, footprint_corners, lateral_clearance, rotated_extents
from modules.rss_core import LateralScenario, braking_travel, d_lat
from modules.safety_sim import Manoeuvre, block_agents, minimal_safe_spacing, run, scenario_agents, split_blocks
from modules.scenario_distances import SCENARIOS

SUITES = ("theorems", "tightness")
RESULT_COLUMNS = ["property", "case", "passed", "inputs", "detail"]
CORNER_TOLERANCE = 1e-9
CONTINUITY_TOLERANCE = 1e-9
CLEARANCE_X_TOLERANCE = 0.01
CLEARANCE_T_TOLERANCE = 1e-3
LOWER_BOUND_SLACK = 0.05
TIGHTNESS_FACTOR = 0.9
TIGHT_SPEEDS = {"sb": (27.0, 30.0)}
# brake-for-brake ends with the boxes exactly touching; rounding must not turn that into a hit
TOUCH_SLACK = 1e-6

Case = Dict[str, Any]
Outcome = Tuple[bool, str]


@dataclass(frozen=True)
class PropertyCheck:
    name: str
    cases: int
    draw: Callable[[np.random.Generator], Case]
    check: Callable[[Case], Outcome]
    # "all": every case must pass; "any": one hit is enough (tightness checks)
    require: str = "all"


def _random_geometry(rng: np.random.Generator) -> VehicleGeometry:
    d_f, d_r = rng.uniform(1.5, 3.0, size=2)
    return VehicleGeometry(
        d_f=float(d_f),
        d_r=float(d_r),
        b_l=float(rng.uniform(0.6, 1.2)),
        b_r=float(rng.uniform(0.6, 1.2)),
        l_f=float(d_f * rng.uniform(0.3, 0.9)),
        l_r=float(d_r * rng.uniform(0.3, 0.9)),
    )


class PropertySuiteRunner:
    """Runs one named suite concurrently and aggregates a pass/fail report."""

    def __init__(
        self, suite: str, g: VehicleGeometry, p: SafetyParams, seed: int = 0, jobs: Optional[int] = None,
        cases: Optional[int] = None, dt: float = 1e-3,
    ):
        if suite not in SUITES:
            raise DomainError(f"unknown suite {suite!r}; expected one of {list(SUITES)}")
        self.suite = suite
        self.g = g
        self.p = p
        self.seed = seed
        self.jobs = jobs
        self.cases = cases
        self.dt = dt
        self._lateral_buffer = d_lat(LateralScenario(0.0, 0.0), p)

    # --- properties -----------------------------------------------------

    def _count(self, default: int) -> int:
        return self.cases if self.cases is not None else default

    def properties(self) -> List[PropertyCheck]:
        if self.suite == "theorems":
            return [
                PropertyCheck("rotated_extents", self._count(200), self._draw_pose, self._check_extents),
                PropertyCheck("brake_for_brake", self._count(200), self._draw_pair(0.0, 30.0), self._safe_at("bb")),
                PropertyCheck("swerve_for_brake", self._count(200), self._draw_pair(0.0, 30.0), self._safe_at("sb")),
                PropertyCheck("brake_for_swerve", self._count(200), self._draw_pair(0.0, 30.0), self._safe_at("bs")),
                # the interval ordering behind the swerve-for-swerve bound needs comparable swerve times
                PropertyCheck("swerve_for_swerve", self._count(200), self._draw_pair(5.0, 30.0), self._safe_at("ss")),
                PropertyCheck("universal_block", self._count(100), self._draw_block, self._check_block),
                PropertyCheck("particle_lower_bound", self._count(200), self._draw_pair(5.0, 30.0), self._check_lower_bound),
                PropertyCheck("clearance_consistency", self._count(200), self._draw_clearance, self._check_clearance),
                PropertyCheck("continuity", self._count(200), self._draw_continuity, self._check_continuity),
            ]
        return [
            PropertyCheck(f"tight_{kind}", self._count(20), self._draw_tight(kind), self._tight_at(kind), require="any")
            for kind in ("bb", "sb", "bs", "ss")
        ]

    def _draw_pose(self, rng: np.random.Generator) -> Case:
        g = _random_geometry(rng)
        return {"geometry": g, "theta": float(rng.uniform(0.0, math.pi / 2))}

    def _check_extents(self, case: Case) -> Outcome:
        g, theta = case["geometry"], case["theta"]
        ext = rotated_extents(g, theta)
        corners = footprint_corners(0.0, 0.0, theta, g)
        xs, ys = corners[:, 0], corners[:, 1]
        excess = max(
            xs.max() - ext.d_prime,
            -xs.min() - ext.d_bar,
            -ys.min() - ext.b_prime,
            ys.max() - ext.b_prime_left,
        )
        return bool(excess <= CORNER_TOLERANCE), f"largest corner excess {excess:.3e} m"

    @staticmethod
    def _draw_pair(low: float, high: float) -> Callable[[np.random.Generator], Case]:
        def draw(rng: np.random.Generator) -> Case:
            v_r, v_f = rng.uniform(low, high, size=2)
            return {"v_r": float(v_r), "v_f": float(v_f)}
        return draw

    def _safe_at(self, kind: str) -> Callable[[Case], Outcome]:
        def check(case: Case) -> Outcome:
            distance = SCENARIOS[kind](case["v_r"], case["v_f"], self.p.rho, self.g, self.g, self.p).distance
            outcome = run(scenario_agents(kind, case["v_r"], case["v_f"], distance + TOUCH_SLACK, self.p), self.dt, None, self.g, self.p)
            return not outcome.collided, f"gap {distance:.3f} m, min longitudinal clearance {outcome.min_gap_long:.3f} m"
        return check

    def _draw_block(self, rng: np.random.Generator) -> Case:
        size = int(rng.integers(3, 9))
        return {
            "speeds": [float(v) for v in rng.uniform(5.0, 30.0, size=size)],
            "lead": Manoeuvre.BRAKE if rng.random() < 0.5 else Manoeuvre.SWERVE,
        }

    def _check_block(self, case: Case) -> Outcome:
        agents = block_agents(case["speeds"], case["lead"], self.g, self.p)
        blocks = split_blocks([agent.initial[0] for agent in agents], case["speeds"], self.g, self.p)
        outcome = run(agents, self.dt, None, self.g, self.p)
        return not outcome.collided, f"{len(agents)} vehicles in {len(blocks)} block(s), collision pair {outcome.collision_pair}"

    def _check_lower_bound(self, case: Case) -> Outcome:
        v_r, v_f = case["v_r"], case["v_f"]
        swerve = build_swerve(v_r + self.p.a_max_accel * self.p.rho, self.g, self.p)
        y_c = lateral_clearance(self.g, self.g, swerve.theta_max, self.p)
        # the lead brakes from its real speed, so a lead that pulls away still counts
        bound = lower_bound(v_r, v_f, y_c, self.g, self.p, cap_lead_speed=False).d_bar_long + self.g.d_r
        spacing = minimal_safe_spacing("sb", v_r, v_f, self.dt, self.g, self.p)
        return spacing >= bound - LOWER_BOUND_SLACK, f"simulated {spacing:.3f} m vs necessary {bound:.3f} m"

    def _draw_clearance(self, rng: np.random.Generator) -> Case:
        return {"v": float(rng.uniform(5.0, 30.0)), "fraction": float(rng.uniform(0.02, 0.98))}

    def _check_clearance(self, case: Case) -> Outcome:
        m = build_swerve(case["v"], self.g, self.p)
        y_c = case["fraction"] * m.alpha
        closed = clearance(m, y_c)
        t, x = first_crossing(integrate_bicycle(m, self.g, dt=self.dt), y_c)
        dx, dt = abs(x - closed.x_c), abs(t - closed.t_c)
        passed = dx <= CLEARANCE_X_TOLERANCE and dt <= CLEARANCE_T_TOLERANCE
        return passed, f"dx={dx:.2e} m, dt={dt:.2e} s ({closed.arc_case.value})"

    def _draw_continuity(self, rng: np.random.Generator) -> Case:
        return {"geometry": _random_geometry(rng), "v": float(rng.uniform(5.0, 30.0))}

    def _check_continuity(self, case: Case) -> Outcome:
        g, v = case["geometry"], case["v"]
        eps = 1e-12
        jumps = {}
        phi, gamma = corner_angles(g)
        for name, angle in (("d_prime", phi), ("d_bar", gamma)):
            lo, hi = rotated_extents(g, angle - eps), rotated_extents(g, angle + eps)
            jumps[name] = abs(getattr(lo, name) - getattr(hi, name))
        t_stop = v / self.p.a_min_brake
        jumps["braking"] = abs(braking_travel(v, t_stop - eps, self.p.a_min_brake) - braking_travel(v, t_stop + eps, self.p.a_min_brake))
        m = build_swerve(v, g, self.p)
        jumps["arc_switch"] = abs(clearance(m, m.y_hat - eps).x_c - clearance(m, m.y_hat + eps).x_c)
        worst = max(jumps, key=jumps.get)
        return jumps[worst] <= CONTINUITY_TOLERANCE, f"largest jump {jumps[worst]:.2e} at {worst}"

    def _draw_tight(self, kind: str) -> Callable[[np.random.Generator], Case]:
        def draw(rng: np.random.Generator) -> Case:
            # swerve-for-brake is only tight at high speed
            v_r = float(rng.uniform(*TIGHT_SPEEDS.get(kind, (10.0, 30.0))))
            if kind == "bb":
                v_f = float(rng.uniform(0.0, v_r))
            elif kind == "ss":
                v_f = v_r
            else:
                v_f = 0.0
            return {"v_r": v_r, "v_f": v_f}
        return draw

    def _tight_at(self, kind: str) -> Callable[[Case], Outcome]:
        def check(case: Case) -> Outcome:
            result = SCENARIOS[kind](case["v_r"], case["v_f"], self.p.rho, self.g, self.g, self.p)
            if result.interior <= 0.0:
                return False, "interior term not positive; nothing to shrink"
            gap = TIGHTNESS_FACTOR * result.interior + result.extent_rear + result.extent_front
            agents = scenario_agents(kind, case["v_r"], case["v_f"], gap, self.p)
            outcome = run(agents, self.dt, None, self.g, self.p, lateral_buffer=self._lateral_buffer)
            return outcome.collided, f"gap {gap:.3f} m, collided={outcome.collided}"
        return check

    # --- execution ------------------------------------------------------

    def _plan_cases(self) -> List[Tuple[int, PropertyCheck, int, Case]]:
        rng = np.random.default_rng(self.seed)
        planned = []
        for order, prop in enumerate(self.properties()):
            for index in range(prop.cases):
                planned.append((order, prop, index, prop.draw(rng)))
        return planned

    @staticmethod
    def _run_case(prop: PropertyCheck, case: Case) -> Outcome:
        try:
            return prop.check(case)
        except DomainError as e:
            return False, f"{type(e).__name__}: {e}"

    def execute(self, progress_callback=None) -> Tuple[pd.DataFrame, Dict[str, Any]]:
        planned = self._plan_cases()
        total = len(planned)
        completed = 0
        rows: Dict[Tuple[int, int], Dict[str, Any]] = {}
        max_workers = self.jobs if self.jobs else 4
        logging.info(f"Running suite {self.suite} ({total} cases, seed {self.seed}, {max_workers} workers)")

        with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as executor:
            future_to_case = {
                executor.submit(self._run_case, prop, case): (order, prop, index, case)
                for order, prop, index, case in planned
            }
            for future in concurrent.futures.as_completed(future_to_case):
                order, prop, index, case = future_to_case[future]
                passed, detail = future.result()
                rows[(order, index)] = {
                    "property": prop.name,
                    "case": index,
                    "passed": bool(passed),
                    "inputs": _describe(case),
                    "detail": detail,
                }
                completed += 1
                if progress_callback:
                    progress_callback(completed / total, f"Checking {self.suite}... ({completed}/{total})")

        results_df = pd.DataFrame([rows[key] for key in sorted(rows)], columns=RESULT_COLUMNS)
        return results_df, self.report(results_df)

    def report(self, results_df: pd.DataFrame) -> Dict[str, Any]:
        properties = []
        for prop in self.properties():
            subset = results_df[results_df["property"] == prop.name]
            hits = int(subset["passed"].sum())
            verdict = hits == len(subset) if prop.require == "all" else hits >= 1
            entry = {"property": prop.name, "cases": int(len(subset)), "passed": bool(verdict)}
            if prop.require == "all":
                entry["failures"] = int(len(subset) - hits)
            else:
                entry["collisions"] = hits
            properties.append(entry)
            if not verdict:
                logging.warning(f"Property {prop.name} failed in suite {self.suite}")
        return {
            "suite": self.suite,
            "seed": self.seed,
            "passed": all(entry["passed"] for entry in properties),
            "properties": properties,
        }


def _describe(case: Case) -> str:
    def plain(value):
        if isinstance(value, VehicleGeometry):
            return vars(value)
        if isinstance(value, Manoeuvre):
            return value.value
        return value

    return json.dumps({key: plain(value) for key, value in case.items()}, sort_keys=True)
