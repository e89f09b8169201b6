"""
Dynamic single-track vehicle with Pacejka lateral tire forces and drag.

State (x, y, v, beta, psi, omega_z, delta): centre-of-mass position, speed,
side slip, yaw, yaw rate and front steering angle. The velocity heading is
psi + beta. Inputs are the steering rate and a longitudinal demand in m/s^2
applied as the rear longitudinal force F_lr = m * demand; the front axle carries
no longitudinal force. Aerodynamic drag acts along the body axis, lateral drag
F_Ay is part of the equations but zero.

Equations of motion:
    v'     = [(F_lr - F_Ax) cos(b) + F_lf cos(d - b) + (F_sr - F_Ay) sin(b) - F_sf sin(d - b)] / m
    beta'  = -w + [-(F_lr - F_Ax) sin(b) + F_lf sin(d - b) + (F_sr - F_Ay) cos(b) + F_sf cos(d - b)] / (m v)
    w'     = [F_sf l_f cos(d) - F_sr l_r - F_Ay e_SP + F_lf l_f sin(d)] / I_zz
    slip   a_f = d - atan((l_f w + v sin b) / (v cos b)),  a_r = atan((l_r w - v sin b) / (v cos b))

Integration is fixed-step RK4. Swerves are open-loop: the steering profile is
planned by inverting the model for a trapezoidal lateral-acceleration target
(ramp to +a, hold, ramp through zero to -a at the switch time, hold until the
yaw is back to zero), stored as one steering rate per step, and replayed.
The search bisects the switch time for y(t_f) = alpha for every brake demand
and target level, then keeps the manoeuvre with the shortest clearance travel.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from modules.config import DynamicParams, PacejkaCoefficients, SafetyParams, VehicleGeometry
from modules.errors import DomainError, LowSpeedSingularityError, NoFeasibleManoeuvreError
from modules.kinematic_swerve import build_swerve
from modules.rotation_geometry import lateral_clearance

TRAJECTORY_COLUMNS = ["t", "x", "y", "v", "beta", "psi", "omega_z", "delta"]
STATE_FIELDS = ("x", "y", "v", "beta", "psi", "omega_z", "delta")

MIN_SEARCH_SPEED = 5.0
Y_TOLERANCE = 0.01
YAW_TOLERANCE = 0.005
# candidates slower than this are treated as failed; slip angles blow up near zero
SPEED_FLOOR = 0.5
CHUNK = 128
LATERAL_RAMP = 0.2
TARGET_MARGIN = 0.95
PEAK_FORCE_FRACTION = 0.999
SWITCH_SPAN = (0.1, 1.5)
HORIZON_FACTOR = 2.5
BISECTION_STEPS = 30


@dataclass(frozen=True)
class DynamicState:
    x: float = 0.0
    y: float = 0.0
    v: float = 0.0
    beta: float = 0.0
    psi: float = 0.0
    omega_z: float = 0.0
    delta: float = 0.0

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in STATE_FIELDS], dtype=float)

    @classmethod
    def from_array(cls, values) -> "DynamicState":
        return cls(*(float(v) for v in values))


@dataclass(frozen=True)
class ManoeuvreControl:
    """Steering rates held over equal slices of [0, t_f]; planned swerves use one slice per step."""

    steering_rates: Tuple[float, ...]
    brake_input: float
    t_f: float

    def __post_init__(self):
        if self.t_f <= 0:
            raise DomainError(f"t_f must be positive (got {self.t_f})")
        if len(self.steering_rates) == 0:
            raise DomainError("steering_rates needs at least one interval")

    @property
    def intervals(self) -> int:
        return len(self.steering_rates)

    def steering_rate_at(self, t: float) -> float:
        slot = min(int(self.intervals * t / self.t_f), self.intervals - 1)
        return self.steering_rates[max(slot, 0)]


@dataclass
class DynamicSwerve:
    control: ManoeuvreControl
    trajectory: pd.DataFrame
    x_c: float
    t_c: float
    y_c: float
    theta_max: float
    peak_lat_accel: float
    residual_y: float
    residual_yaw: float
    diagnostics: Dict[str, Any] = field(default_factory=dict)


def pacejka_lateral(slip, c: PacejkaCoefficients):
    b_alpha = c.B * slip
    return c.D * np.sin(c.C * np.arctan(b_alpha - c.E * (b_alpha - np.arctan(b_alpha))))


def _forces(S: np.ndarray, long_accel, dp: DynamicParams, g: VehicleGeometry):
    _, _, v, beta, _, omega, delta = S
    v_long = v * np.cos(beta)
    alpha_f = delta - np.arctan((g.l_f * omega + v * np.sin(beta)) / v_long)
    alpha_r = np.arctan((g.l_r * omega - v * np.sin(beta)) / v_long)
    F_sf = pacejka_lateral(alpha_f, dp.pacejka_front)
    F_sr = pacejka_lateral(alpha_r, dp.pacejka_rear)
    F_lf = 0.0
    F_lr = dp.m * long_accel
    F_Ax = 0.5 * dp.c_w * dp.rho_drag * dp.A * v ** 2
    F_Ay = 0.0

    along = (F_lr - F_Ax) * np.cos(beta) + F_lf * np.cos(delta - beta) + (F_sr - F_Ay) * np.sin(beta) - F_sf * np.sin(delta - beta)
    across = -(F_lr - F_Ax) * np.sin(beta) + F_lf * np.sin(delta - beta) + (F_sr - F_Ay) * np.cos(beta) + F_sf * np.cos(delta - beta)
    moment = F_sf * g.l_f * np.cos(delta) - F_sr * g.l_r - F_Ay * dp.e_SP + F_lf * g.l_f * np.sin(delta)
    return along, across, moment


def derivatives(S: np.ndarray, omega_delta, long_accel, dp: DynamicParams, g: VehicleGeometry) -> np.ndarray:
    """Time derivative of the state; S has shape (7,) or (7, N)."""
    _, _, v, beta, psi, omega, _ = S
    along, across, moment = _forces(S, long_accel, dp, g)
    heading = psi + beta
    return np.stack([
        v * np.cos(heading),
        v * np.sin(heading),
        along / dp.m,
        -omega + across / (dp.m * v),
        omega,
        moment / dp.I_zz,
        omega_delta * np.ones_like(v),
    ])


def lateral_acceleration(S: np.ndarray, long_accel, dp: DynamicParams, g: VehicleGeometry):
    """v * (psi' + beta'), which reduces to the cross-track force over mass."""
    _, across, _ = _forces(S, long_accel, dp, g)
    return across / dp.m


def _rk4(S, omega_delta, long_accel, h, dp, g):
    k1 = derivatives(S, omega_delta, long_accel, dp, g)
    k2 = derivatives(S + 0.5 * h * k1, omega_delta, long_accel, dp, g)
    k3 = derivatives(S + 0.5 * h * k2, omega_delta, long_accel, dp, g)
    k4 = derivatives(S + h * k3, omega_delta, long_accel, dp, g)
    return S + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), k1


def step(
    state: DynamicState, control: Tuple[float, float], dt: float, dp: DynamicParams, g: VehicleGeometry
) -> DynamicState:
    """One RK4 step under (steering rate, longitudinal demand)."""
    if dt <= 0:
        raise DomainError(f"dt must be positive (got {dt})")
    if state.v <= 0:
        raise LowSpeedSingularityError(f"speed {state.v} m/s leaves slip angles undefined")
    omega_delta, long_accel = control
    S, _ = _rk4(state.to_array(), omega_delta, long_accel, dt, dp, g)
    if not np.all(np.isfinite(S)) or S[2] <= 0:
        raise LowSpeedSingularityError(f"speed dropped to {S[2]:.4f} m/s during the step")
    return DynamicState.from_array(S)


def pacejka_inverse(force, c: PacejkaCoefficients):
    """Slip angle on the rising branch of the Pacejka curve; forces are capped just below D."""
    ratio = np.clip(np.asarray(force, dtype=float) / c.D, -PEAK_FORCE_FRACTION, PEAK_FORCE_FRACTION)
    angle = np.minimum(np.arcsin(np.abs(ratio)) / c.C, 0.5 * math.pi - 1e-6)
    phi = np.sign(ratio) * np.tan(angle)
    x = phi
    for _ in range(8):
        x = x - ((1.0 - c.E) * x + c.E * np.arctan(x) - phi) / ((1.0 - c.E) + c.E / (1.0 + x ** 2))
    return x / c.B


def steering_for_lateral_acceleration(S: np.ndarray, a_target, long_accel, dp: DynamicParams, g: VehicleGeometry):
    """Steering angle that makes the cross-track force of state S equal m * a_target."""
    _, _, v, beta, _, omega, delta = S
    v_long = v * np.cos(beta)
    alpha_r = np.arctan((g.l_r * omega - v * np.sin(beta)) / v_long)
    F_sr = pacejka_lateral(alpha_r, dp.pacejka_rear)
    F_lr = dp.m * long_accel
    F_Ax = 0.5 * dp.c_w * dp.rho_drag * dp.A * v ** 2
    required = dp.m * a_target + (F_lr - F_Ax) * np.sin(beta) - F_sr * np.cos(beta)
    front_heading = np.arctan((g.l_f * omega + v * np.sin(beta)) / v_long)
    for _ in range(2):
        delta = pacejka_inverse(required / np.cos(delta - beta), dp.pacejka_front) + front_heading
    return delta


def lateral_target(t, t_switch, level, ramp: float = LATERAL_RAMP):
    """Trapezoid: ramp to +level, hold, then ramp through zero to -level from t_switch."""
    t = np.asarray(t, dtype=float)
    rise = level * np.minimum(t / ramp, 1.0)
    fall = level * (1.0 - 2.0 * np.clip((t - t_switch) / ramp, 0.0, 1.0))
    return np.where(t < t_switch, rise, fall)


def _step_count(t_f: float, dt: float, intervals: int = 4) -> int:
    """Number of steps, a multiple of `intervals` so that every interval ends on a step."""
    return intervals * max(1, math.ceil(t_f / (intervals * dt) - 1e-9))


def simulate(
    initial: DynamicState, control: ManoeuvreControl, dt: float, dp: DynamicParams, g: VehicleGeometry
) -> pd.DataFrame:
    """Trajectory table of an open-loop manoeuvre; dt is the largest step used."""
    N = control.intervals
    n = _step_count(control.t_f, dt, N)
    h = control.t_f / n
    long_accel = -control.brake_input
    state = initial
    rows = []
    for k in range(n):
        S = state.to_array()
        a_lat = float(lateral_acceleration(S, long_accel, dp, g))
        rows.append((k * h, *S, a_lat))
        state = step(state, (control.steering_rates[(N * k) // n], long_accel), h, dp, g)
    S = state.to_array()
    rows.append((control.t_f, *S, float(lateral_acceleration(S, long_accel, dp, g))))
    return pd.DataFrame(rows, columns=TRAJECTORY_COLUMNS + ["a_lat"])


def steady_yaw_rate(v: float, delta: float, dp: DynamicParams, g: VehicleGeometry, duration: float = 5.0, dt: float = 0.01) -> Tuple[float, float]:
    """(yaw rate, speed) after holding a constant steering angle."""
    state = DynamicState(v=v, delta=delta)
    n = _step_count(duration, dt)
    for _ in range(n):
        state = step(state, (0.0, 0.0), duration / n, dp, g)
    return state.omega_z, state.v


@dataclass
class _Batch:
    """Candidate grid shared by every pass of the search."""

    v0: float
    brake: np.ndarray
    level: np.ndarray
    dt: float
    horizon: float
    delta_max: float
    dp: DynamicParams
    g: VehicleGeometry


def _run_batch(batch: _Batch, idx: np.ndarray, t_switch: np.ndarray, record: bool = False) -> Dict[str, np.ndarray]:
    """
    Plans and integrates the candidates `idx` in lock-step.

    A candidate ends on the first step after its switch time where the yaw is
    back to zero; failed candidates are frozen and flagged.
    """
    N = idx.size
    h = batch.dt
    n = max(1, math.ceil(batch.horizon / h))
    long_accel = -batch.brake[idx]
    level = batch.level[idx]
    S = np.zeros((7, N))
    S[2] = batch.v0
    valid = np.ones(N, dtype=bool)
    running = np.ones(N, dtype=bool)
    end_step = np.full(N, -1)
    peak_lat = np.zeros(N)
    peak_delta = np.zeros(N)
    if record:
        rates = np.zeros((n, N))
        xs, ys, psis = (np.empty((n + 1, N)) for _ in range(3))
        xs[0], ys[0], psis[0] = S[0], S[1], S[4]
    with np.errstate(all="ignore"):
        for k in range(n):
            if not running.any():
                if record:
                    xs, ys, psis, rates = xs[:k + 1], ys[:k + 1], psis[:k + 1], rates[:k]
                break
            t = k * h
            wanted = steering_for_lateral_acceleration(S, lateral_target(t, t_switch, level), long_accel, batch.dp, batch.g)
            rate = (np.clip(wanted, -batch.delta_max, batch.delta_max) - S[6]) / h
            S_new, k1 = _rk4(S, rate, long_accel, h, batch.dp, batch.g)
            a_lat = np.abs(S[2] * (k1[4] + k1[3]))
            peak_lat = np.where(running, np.maximum(peak_lat, a_lat), peak_lat)
            ok = np.all(np.isfinite(S_new), axis=0) & (S_new[2] > SPEED_FLOOR)
            valid &= ok | ~running
            running &= ok
            S = np.where(running, S_new, S)
            peak_delta = np.where(running, np.maximum(peak_delta, np.abs(S[6])), peak_delta)
            if record:
                rates[k] = np.where(running, rate, 0.0)
                xs[k + 1], ys[k + 1], psis[k + 1] = S[0], S[1], S[4]
            finished = running & (t + h > t_switch) & (S[4] <= 0.0)
            end_step[finished] = k + 1
            running &= ~finished
    out = {"final": S, "valid": valid, "end_step": end_step, "peak_lat": peak_lat, "peak_delta": peak_delta}
    if record:
        out.update(x=xs, y=ys, psi=psis, rates=rates)
    return out


def _lateral_residual(batch: _Batch, idx: np.ndarray, t_switch: np.ndarray, alpha: float) -> np.ndarray:
    """y(t_f) - alpha; candidates that never straighten out count as overshooting."""
    run = _run_batch(batch, idx, t_switch)
    finished = run["valid"] & (run["end_step"] > 0)
    return np.where(finished, run["final"][1] - alpha, np.inf)


def _bisect_switch(batch: _Batch, lo: np.ndarray, hi: np.ndarray, alpha: float) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised bisection of the switch time; returns the switch times and a solved mask."""
    everyone = np.arange(lo.size)
    f_lo = _lateral_residual(batch, everyone, lo, alpha)
    f_hi = _lateral_residual(batch, everyone, hi, alpha)
    active = (f_lo < 0.0) & (f_hi >= 0.0)
    best = hi.copy()
    solved = np.zeros(lo.size, dtype=bool)
    lo, hi = lo.copy(), hi.copy()
    for _ in range(BISECTION_STEPS):
        act = np.nonzero(active)[0]
        if act.size == 0:
            break
        mid = 0.5 * (lo[act] + hi[act])
        f_mid = _lateral_residual(batch, act, mid, alpha)
        best[act] = mid
        done = np.abs(f_mid) <= Y_TOLERANCE / 2.0
        solved[act[done]] = True
        active[act[done]] = False
        below = ~done & (f_mid < 0.0)
        lo[act[below]] = mid[below]
        hi[act[~done & ~below]] = mid[~done & ~below]
    return best, solved


def find_swerve(
    v0: float, constrained: bool, dp: DynamicParams, g: VehicleGeometry, p: SafetyParams,
    dt: float = 1e-3, brake_step: float = 0.25, target_levels: int = 5,
    brake_values: Optional[Sequence[float]] = None,
    progress_callback: Optional[Callable[[float, str], None]] = None,
) -> DynamicSwerve:
    """
    Shortest-clearance open-loop swerve reaching y = alpha with zero final yaw.

    constrained caps brake demand at a_min_brake and lateral acceleration at
    a_lat_min; otherwise only the tire peak force limits both, and
    `target_levels` lateral-acceleration levels up to that peak are tried.
    """
    if v0 < MIN_SEARCH_SPEED:
        raise DomainError(f"the dynamic swerve search needs v0 >= {MIN_SEARCH_SPEED} m/s (got {v0})")

    reference = build_swerve(v0, g, p)
    if constrained:
        brake_limit = p.a_min_brake
        levels = np.array([TARGET_MARGIN * p.a_lat_min])
    else:
        brake_limit = dp.peak_tire_acceleration
        levels = np.linspace(p.a_lat_min, TARGET_MARGIN * 0.95 * dp.peak_tire_acceleration, max(1, target_levels))
    brakes = np.asarray(brake_values, dtype=float) if brake_values is not None else np.arange(0.0, brake_limit + 1e-9, brake_step)
    brakes = brakes[(brakes >= 0.0) & (brakes <= brake_limit + 1e-9)]
    if brakes.size == 0:
        raise DomainError(f"no brake demand within [0, {brake_limit:.3f}] m/s^2 to search")
    B, A = (grid.ravel() for grid in np.meshgrid(brakes, levels, indexing="ij"))
    batch = _Batch(
        v0=v0, brake=B, level=A, dt=dt, horizon=HORIZON_FACTOR * reference.duration,
        delta_max=p.delta_max, dp=dp, g=g,
    )
    logging.info(f"Dynamic swerve search at v0={v0}: {B.size} candidates ({brakes.size} brakes x {levels.size} lateral levels)")

    def report(fraction: float, text: str):
        if progress_callback:
            progress_callback(fraction, text)

    report(0.1, "solving boundary conditions")
    lo = np.full(B.size, SWITCH_SPAN[0] * reference.duration)
    hi = np.full(B.size, SWITCH_SPAN[1] * reference.duration)
    t_switch, solved = _bisect_switch(batch, lo, hi, p.alpha)

    report(0.7, "measuring clearance")
    result = _select(batch, t_switch, solved, constrained, dp, g, p)
    report(1.0, "done")
    return result


def _select(batch: _Batch, t_switch, solved, constrained, dp, g, p) -> DynamicSwerve:
    lat_cap = (p.a_lat_min if constrained else dp.peak_tire_acceleration) * 1.01
    candidates = np.nonzero(solved)[0]
    best: Optional[Tuple[float, int]] = None
    reasons = {"unsolved": int((~solved).sum()), "residual": 0, "lat_accel": 0, "steering": 0, "no_clearance": 0}
    measured: Dict[int, Tuple[float, float, float, float, float, float]] = {}
    profiles: Dict[int, np.ndarray] = {}
    for start in range(0, candidates.size, CHUNK):
        idx = candidates[start:start + CHUNK]
        run = _run_batch(batch, idx, t_switch[idx], record=True)
        final = run["final"]
        for j, i in enumerate(idx.tolist()):
            end = int(run["end_step"][j])
            res_y = abs(final[1, j] - p.alpha)
            res_yaw = abs(final[4, j])
            if not run["valid"][j] or end <= 0 or res_y > Y_TOLERANCE or res_yaw > YAW_TOLERANCE:
                reasons["residual"] += 1
                continue
            if run["peak_lat"][j] > lat_cap:
                reasons["lat_accel"] += 1
                continue
            if run["peak_delta"][j] > p.delta_max + 1e-9:
                reasons["steering"] += 1
                continue
            # clearance is measured against the extents rotated by the yaw this manoeuvre reaches
            theta_max = float(min(max(run["psi"][:end + 1, j].max(), 0.0), math.pi / 2))
            y_c = lateral_clearance(g, g, theta_max, p)
            hits = np.nonzero(run["y"][:end + 1, j] >= y_c)[0]
            if hits.size == 0:
                reasons["no_clearance"] += 1
                continue
            x_c = float(run["x"][hits[0], j])
            measured[i] = (x_c, theta_max, y_c, float(run["peak_lat"][j]), res_y, res_yaw)
            profiles[i] = run["rates"][:end, j].copy()
            if best is None or x_c < best[0]:
                best = (x_c, i)

    if best is None:
        raise NoFeasibleManoeuvreError(f"no feasible swerve at v0={batch.v0}", diagnostics=reasons)

    i = best[1]
    x_c, theta_max, y_c, peak_lat, res_y, res_yaw = measured[i]
    rates = profiles[i]
    control = ManoeuvreControl(tuple(float(r) for r in rates), float(batch.brake[i]), rates.size * batch.dt)
    trajectory = simulate(DynamicState(v=batch.v0), control, batch.dt, dp, g)
    hits = np.nonzero(trajectory["y"].to_numpy() >= y_c)[0]
    k = int(hits[0]) if hits.size else len(trajectory) - 1
    reasons["feasible"] = len(measured)
    reasons["lateral_target"] = float(batch.level[i])
    reasons["t_switch"] = float(t_switch[i])
    logging.info(
        f"Selected t_f={control.t_f:.3f} s, brake={control.brake_input:.2f} m/s^2, "
        f"lateral target={batch.level[i]:.3f} m/s^2, x_c={x_c:.3f} m"
    )
    return DynamicSwerve(
        control=control,
        trajectory=trajectory,
        x_c=float(trajectory["x"].iloc[k]),
        t_c=float(trajectory["t"].iloc[k]),
        y_c=y_c,
        theta_max=theta_max,
        peak_lat_accel=peak_lat,
        residual_y=res_y,
        residual_yaw=res_yaw,
        diagnostics=reasons,
    )
