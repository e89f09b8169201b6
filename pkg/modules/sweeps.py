"""
Parameter sweeps over speed grids.

Rows are computed concurrently and written back in grid order. A row that
raises a domain error keeps its speed columns, leaves its distance cells empty
and adds a line to the sweep's warnings.
"""

import concurrent.futures
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
import pandas as pd

from modules.config import DynamicParams, SafetyParams, VehicleGeometry
from modules.dynamic_single_track import find_swerve
from modules.errors import DomainError, SwerveSafetyError
from modules.particle_lower_bound import kinematic_pair
from modules.rotation_geometry import rotated_extents
from modules.scenario_distances import SCENARIOS
from modules.universal_distance import TripleState, universal, uniform_illustration

SWEEP_VARIABLES = ("v_r", "v_f", "v_all")
SWEEP_MODES = ("corrected", "literal")
DISTANCE_OUTPUTS = ("d_bb", "d_sb", "d_bs", "d_ss", "d_hat")
BRACKETING_COLUMNS = ["v0", "x_c_kinematic", "x_c_lower", "x_c_lower_tire", "x_c_dyn_constrained", "x_c_dyn_unconstrained"]
FLOAT_FORMAT = "%.9g"


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    step: float
    outputs: Tuple[str, ...] = DISTANCE_OUTPUTS
    mode: str = "corrected"
    # speed of the vehicle that is not swept
    other_speed: float = 0.0

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise DomainError(f"variable must be one of {list(SWEEP_VARIABLES)} (got {self.variable!r})")
        if self.mode not in SWEEP_MODES:
            raise DomainError(f"mode must be one of {list(SWEEP_MODES)} (got {self.mode!r})")
        if not self.step > 0:
            raise DomainError(f"step must be positive (got {self.step})")
        if self.start > self.stop:
            raise DomainError(f"start must not exceed stop (got {self.start} > {self.stop})")
        if self.start < 0 or self.other_speed < 0:
            raise DomainError("speeds must be non-negative")
        unknown = set(self.outputs) - set(DISTANCE_OUTPUTS)
        if unknown or not self.outputs:
            raise DomainError(f"outputs must be a non-empty subset of {list(DISTANCE_OUTPUTS)} (got {list(self.outputs)})")

    @property
    def literal(self) -> bool:
        return self.mode == "literal"

    def grid(self) -> np.ndarray:
        """Inclusive grid; the stop value is kept when the step lands on it."""
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(count)

    def columns(self) -> List[str]:
        speeds = ["v"] if self.variable == "v_all" else ["v_r", "v_f"]
        return speeds + [name for name in DISTANCE_OUTPUTS if name in self.outputs]


@dataclass
class SweepResult:
    table: pd.DataFrame
    warnings: List[str] = field(default_factory=list)
    failed_rows: int = 0

    @property
    def all_failed(self) -> bool:
        return len(self.table) > 0 and self.failed_rows == len(self.table)


def distance_row(spec: SweepSpec, v: float, g: VehicleGeometry, p: SafetyParams) -> Dict[str, float]:
    if spec.variable == "v_all":
        v_r = v_f = v
        row: Dict[str, float] = {"v": v}
    else:
        v_r, v_f = (v, spec.other_speed) if spec.variable == "v_r" else (spec.other_speed, v)
        row = {"v_r": v_r, "v_f": v_f}
    for name in spec.outputs:
        if name == "d_hat":
            if spec.variable == "v_all":
                row[name] = uniform_illustration(v, p, g, literal=spec.literal)
            else:
                row[name] = universal(TripleState(v_r, v_f), p, g, literal=spec.literal)
        else:
            row[name] = SCENARIOS[name[2:]](v_r, v_f, p.rho, g, g, p, literal=spec.literal).distance
    return row


def _concurrent_rows(
    values: Sequence[float], compute: Callable[[float], Dict[str, Any]], blank: Callable[[float], Dict[str, Any]],
    jobs: Optional[int], progress_callback=None,
) -> Tuple[List[Dict[str, Any]], List[str]]:
    rows: Dict[int, Dict[str, Any]] = {}
    warnings: List[str] = []
    total = len(values)
    completed = 0
    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs or 1) as executor:
        future_to_index = {executor.submit(compute, float(v)): i for i, v in enumerate(values)}
        for future in concurrent.futures.as_completed(future_to_index):
            i = future_to_index[future]
            try:
                rows[i] = future.result()
            except SwerveSafetyError as e:
                logging.warning(f"Sweep row {i} (v={values[i]:g}) failed: {e}")
                warnings.append(f"row {i} (v={values[i]:g}): {type(e).__name__}: {e}")
                rows[i] = blank(float(values[i]))
                rows[i]["_failed"] = True
            completed += 1
            if progress_callback:
                progress_callback(completed / total, f"Sweeping... ({completed}/{total})")
    ordered = [rows[i] for i in range(total)]
    # completion order must not leak into the sidecar
    warnings.sort(key=lambda text: int(text.split()[1]))
    return ordered, warnings


def run_sweep(
    spec: SweepSpec, g: VehicleGeometry, p: SafetyParams, jobs: Optional[int] = None, progress_callback=None
) -> SweepResult:
    values = spec.grid()

    def blank(v: float) -> Dict[str, Any]:
        if spec.variable == "v_all":
            return {"v": v}
        return {"v_r": v, "v_f": spec.other_speed} if spec.variable == "v_r" else {"v_r": spec.other_speed, "v_f": v}

    rows, warnings = _concurrent_rows(values, lambda v: distance_row(spec, v, g, p), blank, jobs, progress_callback)
    failed = sum(1 for row in rows if row.pop("_failed", False))
    table = pd.DataFrame(rows, columns=spec.columns())
    logging.info(f"Sweep over {spec.variable}: {len(table)} rows, {failed} failed")
    return SweepResult(table=table, warnings=warnings, failed_rows=failed)


def bracketing_row(
    v0: float, g: VehicleGeometry, p: SafetyParams, dp: DynamicParams, dynamic: bool = True,
    search: Optional[Dict[str, Any]] = None,
) -> Dict[str, float]:
    """
    One comparison row of front-bumper travel until clearance.

    Kinematic travel carries d', the particle bound the inscribed half side, and
    each dynamic column the d' at its own peak yaw.
    """
    pair = kinematic_pair(v0, g, g, p, dp)
    row = {
        "v0": v0,
        "x_c_kinematic": pair["x_c_kinematic"],
        "x_c_lower": pair["x_c_lower"],
        "x_c_lower_tire": pair["x_c_lower_tire"],
        "x_c_dyn_constrained": math.nan,
        "x_c_dyn_unconstrained": math.nan,
    }
    if dynamic:
        for constrained, column in ((True, "x_c_dyn_constrained"), (False, "x_c_dyn_unconstrained")):
            swerve = find_swerve(v0, constrained, dp, g, p, **(search or {}))
            row[column] = swerve.x_c + rotated_extents(g, swerve.theta_max).d_prime
    return row


def run_bracketing(
    speeds: Sequence[float], g: VehicleGeometry, p: SafetyParams, dp: DynamicParams, dynamic: bool = True,
    jobs: Optional[int] = None, search: Optional[Dict[str, Any]] = None, progress_callback=None,
) -> SweepResult:
    rows, warnings = _concurrent_rows(
        speeds,
        lambda v: bracketing_row(v, g, p, dp, dynamic=dynamic, search=search),
        lambda v: {"v0": v},
        jobs,
        progress_callback,
    )
    failed = sum(1 for row in rows if row.pop("_failed", False))
    return SweepResult(table=pd.DataFrame(rows, columns=BRACKETING_COLUMNS), warnings=warnings, failed_rows=failed)


def bracketed(table: pd.DataFrame, column: str = "x_c_dyn_unconstrained") -> pd.Series:
    """
    Row-wise lower <= dynamic <= kinematic; rows without a dynamic value are False.

    Tire-limited swerves are bounded below by the tire-peak particle, constrained
    ones by the comfort-limit particle.
    """
    lower = "x_c_lower_tire" if column == "x_c_dyn_unconstrained" else "x_c_lower"
    return (table[lower] <= table[column]) & (table[column] <= table["x_c_kinematic"])


def write_csv(table: pd.DataFrame, out: Union[str, TextIO], digest: str):
    """CSV preceded by a provenance comment naming the configuration hash."""
    if isinstance(out, str):
        with open(out, "w", encoding="utf-8", newline="") as handle:
            write_csv(table, handle, digest)
        return
    out.write(f"# config_hash={digest}\n")
    table.to_csv(out, index=False, float_format=FLOAT_FORMAT)


def write_warnings(warnings: Sequence[str], csv_path: str) -> Optional[str]:
    """Sidecar next to the CSV; nothing is written for a clean sweep."""
    if not warnings:
        return None
    path = f"{csv_path}.warnings.json"
    with open(path, "w", encoding="utf-8") as handle:
        json.dump({"warnings": list(warnings)}, handle, indent=2)
    return path
