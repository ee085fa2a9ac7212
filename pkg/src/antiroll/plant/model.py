"""Public plant API: state containers and the physics operations.

The heavy lifting lives in :mod:`antiroll.plant.kernel`; this module wraps
it with dataclasses and unit handling so tests and the harness can talk to
the plant without caring about packed array layouts.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernel, layout
from .params import TireParams, VehicleParams
from .terrain import TerrainProfile, flat_terrain

WHEEL_IDS = ("fl", "fr", "rl", "rr")


@dataclass
class VehicleState:
    """Full plant state.  Angles in rad, speeds in SI."""

    vx: float = 0.0
    vy: float = 0.0
    yaw_rate: float = 0.0
    roll: float = 0.0
    roll_rate: float = 0.0
    wheel_speeds: np.ndarray = field(default_factory=lambda: np.zeros(4))
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    travel: float = 0.0

    def as_array(self) -> np.ndarray:
        v = np.zeros(layout.NSTATE)
        v[layout.VX] = self.vx
        v[layout.VY] = self.vy
        v[layout.YAW_RATE] = self.yaw_rate
        v[layout.ROLL] = self.roll
        v[layout.ROLL_RATE] = self.roll_rate
        v[layout.W_FL:layout.W_RR + 1] = np.asarray(self.wheel_speeds, dtype=float)
        v[layout.POS_X] = self.x
        v[layout.POS_Y] = self.y
        v[layout.HEADING] = self.heading
        v[layout.PATH_S] = self.travel
        return v

    @classmethod
    def from_array(cls, v: np.ndarray) -> "VehicleState":
        return cls(
            vx=float(v[layout.VX]),
            vy=float(v[layout.VY]),
            yaw_rate=float(v[layout.YAW_RATE]),
            roll=float(v[layout.ROLL]),
            roll_rate=float(v[layout.ROLL_RATE]),
            wheel_speeds=np.array(v[layout.W_FL:layout.W_RR + 1]),
            x=float(v[layout.POS_X]),
            y=float(v[layout.POS_Y]),
            heading=float(v[layout.HEADING]),
            travel=float(v[layout.PATH_S]),
        )

    @classmethod
    def cruising(cls, params: VehicleParams, speed: float) -> "VehicleState":
        """Straight-line free-rolling state at the given speed [m/s]."""
        omega = speed / params.wheel_radius
        return cls(vx=speed, wheel_speeds=np.full(4, omega))


@dataclass(frozen=True)
class WheelLoads:
    """Per-wheel vertical forces [N], clamped at zero unless stated."""

    fl: float
    fr: float
    rl: float
    rr: float

    @property
    def left_total(self) -> float:
        return self.fl + self.rl

    @property
    def right_total(self) -> float:
        return self.fr + self.rr

    @property
    def total(self) -> float:
        return self.fl + self.fr + self.rl + self.rr

    def as_array(self) -> np.ndarray:
        return np.array([self.fl, self.fr, self.rl, self.rr])


@dataclass(frozen=True)
class ControlInput:
    """Controller-boundary input: steering wheel angle and speed target.

    Units are fixed at this boundary: degrees for the steering wheel,
    km/h for the speed target.  Everything downstream is SI.
    """

    steer_deg: float
    speed_kmh: float

    def __post_init__(self):
        if not (math.isfinite(self.steer_deg) and math.isfinite(self.speed_kmh)):
            raise ValueError("control input must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.steer_deg, self.speed_kmh])


@dataclass(frozen=True)
class ActuatorCommand:
    """Low-level plant input: road-wheel angle [rad] and wheel torques [N m]."""

    steer_rad: float
    wheel_torques: np.ndarray

    def torque_array(self) -> np.ndarray:
        t = np.asarray(self.wheel_torques, dtype=float)
        if t.shape != (4,):
            raise ValueError("wheel_torques must have shape (4,)")
        return t


@dataclass(frozen=True)
class StepInfo:
    loads: WheelLoads
    ltr: float
    lateral_accel: float
    lifted: bool
    rolled: bool
    mu: float


def tire_slip(state: VehicleState, wheel_id: str | int, steer_rad: float,
              params: VehicleParams) -> tuple[float, float]:
    """Longitudinal slip and slip angle for one wheel.

    Slip angles are computed per axle from the planar velocity state; the
    slip ratio uses the wheel's own hub speed, so left and right differ
    while yawing.
    """
    idx = WHEEL_IDS.index(wheel_id) if isinstance(wheel_id, str) else int(wheel_id)
    if not 0 <= idx < 4:
        raise ValueError(f"bad wheel id {wheel_id!r}")
    u_g = max(state.vx, kernel.LOW_SPEED)
    if idx < 2:
        alpha = steer_rad - math.atan((state.vy + params.dist_front_axle * state.yaw_rate) / u_g)
    else:
        alpha = math.atan((-state.vy + params.dist_rear_axle * state.yaw_rate) / u_g)
    half_tw = 0.5 * params.track_width
    # left wheels sit at +tw/2
    u_w = state.vx - state.yaw_rate * half_tw if idx in (0, 2) \
        else state.vx + state.yaw_rate * half_tw
    lam = kernel._slip_ratio(params.wheel_radius * float(state.wheel_speeds[idx]), u_w)
    return float(lam), float(alpha)


def magic_formula(lam: float, alpha: float, fz: float, tires: TireParams,
                  m: float, g: float, mu_scale: float = 1.0) -> tuple[float, float]:
    """Combined-slip tire forces (F_x, F_y) in the wheel frame."""
    if fz < 0:
        raise ValueError("vertical load must be nonnegative")
    fx, fy = kernel._tire_force(
        float(lam), math.tan(alpha), float(fz), m * g,
        tires.stiffness_factor, tires.shape_factor, tires.peak_friction,
        tires.curvature_factor, tires.load_sensitivity,
        tires.normalized_stiffness, mu_scale)
    return float(fx), float(fy)


def peak_force(fz: float, tires: TireParams, m: float, g: float,
               mu_scale: float = 1.0) -> float:
    """Load-dependent peak force bound of the tire curve."""
    if fz <= 0:
        return 0.0
    load = fz / (m * g)
    ratio = 0.9 * load
    return fz * 1.0114 * tires.peak_friction * mu_scale / (1.0 + ratio ** 3)


def _transfer_moment(state: VehicleState, lateral_accel: float,
                     params: VehicleParams) -> float:
    ka = params.stiffness_asym
    da = params.damping_asym
    tan_phi = math.tan(max(-1.2, min(1.2, state.roll)))
    m_susp = (params.roll_stiffness * (1.0 - ka * ka) * tan_phi
              + params.roll_damping * (1.0 - da * da) * state.roll_rate * math.cos(state.roll)
              + params.mass_total * params.gravity * (ka + da))
    return params.mass_total * lateral_accel * params.roll_axis_height + m_susp


def vertical_loads(state: VehicleState, lateral_accel: float,
                   params: VehicleParams, total_reaction: float | None = None,
                   clamp: bool = True) -> WheelLoads:
    """Per-wheel vertical forces from the quasi-static moment balance.

    ``lateral_accel`` is the net lateral specific force reacted by the
    tires.  ``total_reaction`` defaults to the vehicle weight; terrain
    effects pass a scaled value.  With ``clamp=False`` the raw (possibly
    negative) loads are returned, which conserve the total exactly.
    """
    w_total = params.mass_total * params.gravity if total_reaction is None \
        else total_reaction
    wb = params.wheelbase
    fz_f0 = w_total * params.dist_rear_axle / wb
    fz_r0 = w_total * params.dist_front_axle / wb
    df = _transfer_moment(state, lateral_accel, params) / params.track_width
    df_f = params.front_roll_share * df
    df_r = (1.0 - params.front_roll_share) * df
    fl, fr = 0.5 * fz_f0 - df_f, 0.5 * fz_f0 + df_f
    rl, rr = 0.5 * fz_r0 - df_r, 0.5 * fz_r0 + df_r
    if clamp:
        if fl < 0.0:
            fl, fr = 0.0, fz_f0
        elif fr < 0.0:
            fr, fl = 0.0, fz_f0
        if rl < 0.0:
            rl, rr = 0.0, fz_r0
        elif rr < 0.0:
            rr, rl = 0.0, fz_r0
    return WheelLoads(fl=fl, fr=fr, rl=rl, rr=rr)


def ltr(loads: WheelLoads, m: float, g: float) -> float:
    """Load-transfer ratio: right minus left totals over vehicle weight."""
    return (loads.right_total - loads.left_total) / (m * g)


def ltr_signal(state: VehicleState, lateral_accel: float,
               params: VehicleParams) -> float:
    """Unclamped load-transfer ratio; exceeds +-1 past wheel lift-off."""
    raw = vertical_loads(state, lateral_accel, params, clamp=False)
    return ltr(raw, params.mass_total, params.gravity)


def steady_state_ltr(v: float, radius: float, params: VehicleParams) -> float:
    """Analytic steady-cornering LTR from the small-angle moment balance."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    a_y = v * v / radius
    return 2.0 * params.cg_height * a_y / (params.gravity * params.track_width)


def dynamics_rhs(state: VehicleState, cmd: ActuatorCommand,
                 terrain: TerrainProfile | None, params: VehicleParams,
                 tires: TireParams | None = None) -> tuple[VehicleState, dict]:
    """Continuous-time state derivative plus force diagnostics.

    Returns the derivative packed in a VehicleState (fields hold d/dt
    values) and a dict with loads, the LTR signal, and regime flags.
    """
    par = params if tires is None else dataclasses.replace(params, tires=tires)
    terr = terrain if terrain is not None else flat_terrain()
    x = state.as_array()
    deriv = np.zeros(layout.NSTATE)
    aux = np.zeros(kernel.NAUX)
    kernel._rhs(x, par.pack(), float(cmd.steer_rad), cmd.torque_array(),
                terr.s_step, terr.elev_curv, terr.bank,
                terr.mu_scale(par.tires.peak_friction), deriv, aux)
    info = {
        "loads": WheelLoads(fl=aux[kernel.AUX_FZ_FL], fr=aux[kernel.AUX_FZ_FR],
                            rl=aux[kernel.AUX_FZ_RL], rr=aux[kernel.AUX_FZ_RR]),
        "ltr": float(aux[kernel.AUX_LTR]),
        "lateral_accel": float(aux[kernel.AUX_AY]),
        "lifted": bool(aux[kernel.AUX_LIFTED] > 0.5),
        "rolled": bool(abs(state.roll) > kernel.ROLL_LIMIT),
    }
    return VehicleState.from_array(deriv), info


class Plant:
    """Fixed-step simulator for one vehicle on one terrain profile.

    ``step`` advances a controller period with zero-order-held actuator
    commands, integrating internally at the plant substep.
    """

    def __init__(self, params: VehicleParams,
                 terrain: TerrainProfile | None = None,
                 substep: float = 0.001):
        if substep <= 0:
            raise ValueError("substep must be positive")
        self.params = params
        self.terrain = terrain if terrain is not None else flat_terrain()
        self.substep = substep
        self._packed = params.pack()
        self._mu_scale = self.terrain.mu_scale(params.tires.peak_friction)

    def step_array(self, x: np.ndarray, steer_rad: float,
                   torques: np.ndarray, dt: float,
                   aux: np.ndarray) -> int:
        """Hot-path variant: advances the packed state in place."""
        n_sub = max(1, int(round(dt / self.substep)))
        return kernel.integrate(
            x, self._packed, steer_rad, torques,
            self.terrain.s_step, self.terrain.elev_curv, self.terrain.bank,
            self._mu_scale, self.substep, n_sub, aux)

    def step(self, state: VehicleState, cmd: ActuatorCommand,
             dt: float = 0.01) -> tuple[VehicleState, StepInfo]:
        if dt <= 0:
            raise ValueError("dt must be positive")
        x = state.as_array()
        aux = np.zeros(kernel.NAUX)
        status = self.step_array(x, float(cmd.steer_rad), cmd.torque_array(),
                                 dt, aux)
        if status == kernel.STATUS_NONFINITE:
            raise FloatingPointError("plant state became non-finite")
        info = StepInfo(
            loads=WheelLoads(fl=aux[kernel.AUX_FZ_FL], fr=aux[kernel.AUX_FZ_FR],
                             rl=aux[kernel.AUX_FZ_RL], rr=aux[kernel.AUX_FZ_RR]),
            ltr=float(aux[kernel.AUX_LTR]),
            lateral_accel=float(aux[kernel.AUX_AY]),
            lifted=bool(aux[kernel.AUX_LIFTED] > 0.5),
            rolled=(status == kernel.STATUS_ROLLED),
            mu=float(aux[kernel.AUX_MU]),
        )
        return VehicleState.from_array(x), info
