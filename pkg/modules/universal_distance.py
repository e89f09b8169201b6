"""
Universal following distance: the spacing which, kept by every vehicle in a
block, lets each of them answer whatever the vehicle ahead does.

Vehicle 1 follows vehicle 2, which follows vehicle 3. Terms that reach past
vehicle 2 are discounted by the spacing vehicle 2 already keeps, floored at the
extent-only minimum.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, Optional

import numpy as np
import pandas as pd

from modules.config import SafetyParams, VehicleGeometry
from modules.scenario_distances import (
    d_brake_for_brake,
    d_brake_for_swerve,
    d_swerve_for_brake,
    d_swerve_for_swerve,
)

UNIFORM_COLUMNS = ["v", "d_bb", "d_sb", "d_bs", "d_ss", "d_hat"]


@dataclass(frozen=True)
class TripleState:
    v1: float
    v2: float
    v3: Optional[float] = None
    d_23: Optional[float] = None

    def __post_init__(self):
        for name in ("v1", "v2", "v3"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be non-negative (got {value})")
        if self.d_23 is not None and self.d_23 < 0:
            raise ValueError(f"d_23 must be non-negative (got {self.d_23})")


def _extent_floor(g: VehicleGeometry) -> float:
    return g.d_f + g.d_r


def universal_terms(
    t: TripleState, p: SafetyParams, g: VehicleGeometry, literal: bool = False, use_positions: bool = False
) -> Dict[str, float]:
    """Every candidate of the universal max, keyed by scenario and vehicle pair."""
    rho = p.rho
    terms: Dict[str, float] = {}
    bs_12 = d_brake_for_swerve(t.v1, t.v2, rho, g, g, p, literal=literal).distance
    if literal:
        # the literal max lists the brake-for-swerve term twice
        terms["bs_12"] = bs_12
        terms["bs_12_repeat"] = bs_12
    else:
        terms["sb_12"] = d_swerve_for_brake(t.v1, t.v2, rho, g, g, p, literal=literal).distance
        terms["bs_12"] = bs_12

    if t.v3 is None:
        return terms

    if use_positions:
        if t.d_23 is None:
            raise ValueError("the position-aware distance needs d_23")
        discount = t.d_23
    else:
        discount = d_swerve_for_brake(t.v2, t.v3, rho, g, g, p, literal=literal).distance
    floor = _extent_floor(g)
    ss_13 = d_swerve_for_swerve(t.v1, t.v3, 2.0 * rho, g, g, p, literal=literal).distance
    bb_13 = d_brake_for_brake(t.v1, t.v3, 2.0 * rho, g, g, p, literal=literal).distance
    terms["ss_13"] = max(ss_13 - discount, floor)
    terms["bb_13"] = max(bb_13 - discount, floor)
    return terms


def universal(t: TripleState, p: SafetyParams, g: VehicleGeometry, literal: bool = False) -> float:
    return max(universal_terms(t, p, g, literal=literal).values())


def universal_with_positions(t: TripleState, p: SafetyParams, g: VehicleGeometry, literal: bool = False) -> float:
    return max(universal_terms(t, p, g, literal=literal, use_positions=True).values())


def uniform_illustration(v: float, p: SafetyParams, g: VehicleGeometry, literal: bool = False) -> float:
    """Single spacing for a block in which every vehicle drives at v."""
    if v < 0:
        raise ValueError(f"v must be non-negative (got {v})")
    rho = p.rho
    bs = d_brake_for_swerve(v, v, rho, g, g, p, literal=literal).distance
    first = bs if literal else d_swerve_for_brake(v, v, rho, g, g, p, literal=literal).distance
    return max(
        first,
        bs,
        d_swerve_for_swerve(v, v, 2.0 * rho, g, g, p, literal=literal).distance / 2.0,
        d_brake_for_brake(v, v, 2.0 * rho, g, g, p, literal=literal).distance / 2.0,
    )


def braking_only(v: float, p: SafetyParams, g: VehicleGeometry, literal: bool = False) -> float:
    return d_brake_for_brake(v, v, p.rho, g, g, p, literal=literal).distance


def uniform_row(v: float, p: SafetyParams, g: VehicleGeometry, literal: bool = False) -> Dict[str, float]:
    rho = p.rho
    return {
        "v": v,
        "d_bb": d_brake_for_brake(v, v, rho, g, g, p, literal=literal).distance,
        "d_sb": d_swerve_for_brake(v, v, rho, g, g, p, literal=literal).distance,
        "d_bs": d_brake_for_swerve(v, v, rho, g, g, p, literal=literal).distance,
        "d_ss": d_swerve_for_swerve(v, v, rho, g, g, p, literal=literal).distance,
        "d_hat": uniform_illustration(v, p, g, literal=literal),
    }


def sweep_uniform(speeds: Iterable[float], p: SafetyParams, g: VehicleGeometry, literal: bool = False) -> pd.DataFrame:
    return pd.DataFrame([uniform_row(float(v), p, g, literal) for v in speeds], columns=UNIFORM_COLUMNS)


def crossover_speed(table: pd.DataFrame, swerve_col: str = "d_hat", brake_col: str = "d_bb") -> Optional[float]:
    """First speed at which the swerve-enabled distance drops below braking-only."""
    v = table["v"].to_numpy()
    diff = (table[swerve_col] - table[brake_col]).to_numpy()
    below = np.nonzero(diff < 0.0)[0]
    if below.size == 0:
        return None
    i = int(below[0])
    if i == 0:
        return float(v[0])
    w = diff[i - 1] / (diff[i - 1] - diff[i])
    return float(v[i - 1] + w * (v[i] - v[i - 1]))


def max_reduction(table: pd.DataFrame, swerve_col: str = "d_hat", brake_col: str = "d_bb") -> float:
    """Largest relative saving of the swerve-enabled distance over braking-only."""
    reduction = 1.0 - table[swerve_col] / table[brake_col]
    return float(max(reduction.max(), 0.0))
