"""Vehicle and tire parameter sets.

Parameters live in flat key-value config files (SI units unless the key
name says otherwise) and are validated on construction.  ``pack`` flattens
everything into the float64 vector the integration kernel consumes.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .. import configfile
from . import layout


@dataclass(frozen=True)
class TireParams:
    """Combined-slip tire curve coefficients.

    The normalized curve is ``P(s) = sin(shape * atan(x(s)))`` with
    ``x = (s/shape)*(1 - curvature) + curvature*atan(s/shape)``, scaled by a
    load-dependent peak force.  ``peak_friction`` plays the role of the
    surface friction coefficient on the nominal surface.
    """

    stiffness_factor: float = 9.0
    shape_factor: float = 1.55
    peak_friction: float = 0.95
    curvature_factor: float = -0.8
    load_sensitivity: float = 4.0

    def __post_init__(self):
        if not (0.0 < self.peak_friction <= 2.0):
            raise ValueError(f"peak_friction out of range: {self.peak_friction}")
        if self.stiffness_factor <= 0 or self.shape_factor <= 0:
            raise ValueError("stiffness_factor and shape_factor must be positive")
        if not (0.0 < self.load_sensitivity <= 50.0):
            raise ValueError(f"load_sensitivity out of range: {self.load_sensitivity}")
        if self.curvature_factor >= 1.0:
            raise ValueError("curvature_factor must be < 1")

    @property
    def normalized_stiffness(self) -> float:
        # slope coefficient chosen so the curve's initial slope at quarter
        # nominal load reproduces stiffness_factor*shape_factor*peak_friction
        b, c, d = self.stiffness_factor, self.shape_factor, self.peak_friction
        c2 = self.load_sensitivity
        return b * c * d / (4.0 * (1.0 - math.exp(-c2 / 4.0)))


@dataclass(frozen=True)
class VehicleParams:
    """Rigid twin-track vehicle with a single suspended roll degree of freedom."""

    mass_total: float
    mass_unsprung: float
    h_sprung: float            # sprung CG height above the roll axis [m]
    roll_axis_height: float    # roll axis height above ground [m]
    roll_inertia_sprung: float
    yaw_inertia: float
    roll_stiffness: float
    roll_damping: float
    track_width: float
    dist_front_axle: float
    dist_rear_axle: float
    wheel_radius: float
    wheel_inertia: float
    steer_ratio: float
    front_roll_share: float = 0.5
    stiffness_asym: float = 0.0
    damping_asym: float = 0.0
    drag_coeff: float = 0.4        # aero drag [N/(m/s)^2]
    roll_resist_coeff: float = 0.012
    drive_torque_max: float = 3000.0   # total drive torque bound [N m]
    brake_torque_max: float = 6000.0   # total brake torque bound [N m]
    gravity: float = 9.81
    tires: TireParams = field(default_factory=TireParams)

    def __post_init__(self):
        if self.mass_total <= 0 or not (0.0 < self.mass_unsprung < self.mass_total):
            raise ValueError("need 0 < mass_unsprung < mass_total")
        for name in ("h_sprung", "roll_axis_height", "roll_inertia_sprung",
                     "yaw_inertia", "roll_stiffness", "roll_damping",
                     "track_width", "dist_front_axle", "dist_rear_axle",
                     "wheel_radius", "wheel_inertia", "steer_ratio", "gravity"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (0.0 <= self.stiffness_asym < 1.0):
            raise ValueError("stiffness_asym must lie in [0, 1)")
        if not (0.0 <= self.damping_asym < 1.0):
            raise ValueError("damping_asym must lie in [0, 1)")
        if not (0.0 < self.front_roll_share < 1.0):
            raise ValueError("front_roll_share must lie in (0, 1)")
        # the suspended pendulum must be statically stable upright
        if self.roll_stiffness <= self.mass_sprung * self.gravity * self.h_sprung:
            raise ValueError("roll_stiffness too low: upright equilibrium unstable")

    @property
    def mass_sprung(self) -> float:
        return self.mass_total - self.mass_unsprung

    @property
    def wheelbase(self) -> float:
        return self.dist_front_axle + self.dist_rear_axle

    @property
    def cg_height(self) -> float:
        """Total CG height above ground, sprung and unsprung combined."""
        return self.roll_axis_height + (self.mass_sprung / self.mass_total) * self.h_sprung

    @property
    def liftoff_accel(self) -> float:
        """Lateral acceleration at which the inner side fully unloads."""
        return self.gravity * self.track_width / (2.0 * self.cg_height)

    @property
    def tip_inertia(self) -> float:
        """Roll inertia of the whole vehicle about a wheel contact line."""
        m = self.mass_total
        half_track = 0.5 * self.track_width
        return self.roll_inertia_sprung + m * (self.cg_height ** 2 + half_track ** 2)

    def pack(self) -> np.ndarray:
        v = np.zeros(layout.NPARAM)
        v[layout.P_MASS] = self.mass_total
        v[layout.P_MASS_SPRUNG] = self.mass_sprung
        v[layout.P_MASS_UNSPRUNG] = self.mass_unsprung
        v[layout.P_H_SPRUNG] = self.h_sprung
        v[layout.P_ROLL_INERTIA] = self.roll_inertia_sprung
        v[layout.P_YAW_INERTIA] = self.yaw_inertia
        v[layout.P_ROLL_STIFFNESS] = self.roll_stiffness
        v[layout.P_ROLL_DAMPING] = self.roll_damping
        v[layout.P_STIFF_ASYM] = self.stiffness_asym
        v[layout.P_DAMP_ASYM] = self.damping_asym
        v[layout.P_TRACK_WIDTH] = self.track_width
        v[layout.P_LF] = self.dist_front_axle
        v[layout.P_LR] = self.dist_rear_axle
        v[layout.P_WHEEL_RADIUS] = self.wheel_radius
        v[layout.P_GRAVITY] = self.gravity
        v[layout.P_ROLL_AXIS_H] = self.roll_axis_height
        v[layout.P_WHEEL_INERTIA] = self.wheel_inertia
        v[layout.P_FRONT_ROLL_SHARE] = self.front_roll_share
        v[layout.P_DRAG] = self.drag_coeff
        v[layout.P_ROLL_RESIST] = self.roll_resist_coeff
        v[layout.P_TIRE_B] = self.tires.stiffness_factor
        v[layout.P_TIRE_C] = self.tires.shape_factor
        v[layout.P_TIRE_D] = self.tires.peak_friction
        v[layout.P_TIRE_E] = self.tires.curvature_factor
        v[layout.P_TIRE_LOAD_SENS] = self.tires.load_sensitivity
        v[layout.P_TIRE_STIFF] = self.tires.normalized_stiffness
        v[layout.P_CG_HEIGHT] = self.cg_height
        v[layout.P_TIP_INERTIA] = self.tip_inertia
        return v


_TIRE_KEYS = {f.name for f in fields(TireParams)}
_VEHICLE_KEYS = {f.name for f in fields(VehicleParams)} - {"tires"}


def vehicle_from_dict(values: dict) -> VehicleParams:
    tire_kwargs = {}
    veh_kwargs = {}
    for key, val in values.items():
        if key.startswith("tire_"):
            short = key[len("tire_"):]
            if short not in _TIRE_KEYS:
                raise KeyError(f"unknown tire parameter {key!r}")
            tire_kwargs[short] = float(val)
        elif key in _VEHICLE_KEYS:
            veh_kwargs[key] = float(val)
        else:
            raise KeyError(f"unknown vehicle parameter {key!r}")
    return VehicleParams(tires=TireParams(**tire_kwargs), **veh_kwargs)


def vehicle_to_dict(params: VehicleParams) -> dict:
    out = {}
    for f in fields(VehicleParams):
        if f.name == "tires":
            continue
        out[f.name] = getattr(params, f.name)
    for f in fields(TireParams):
        out[f"tire_{f.name}"] = getattr(params.tires, f.name)
    return out


def load_vehicle(path: str | os.PathLike) -> VehicleParams:
    return vehicle_from_dict(configfile.load(path))


def save_vehicle(params: VehicleParams, path: str | os.PathLike) -> None:
    configfile.dump(vehicle_to_dict(params), path)


def sedan() -> VehicleParams:
    """Tall road car.  Static stability factor sits below the tire friction
    limit, so sustained cornering at the handling limit can lift the inner
    wheels."""
    return VehicleParams(
        mass_total=1600.0,
        mass_unsprung=250.0,
        h_sprung=0.628,
        roll_axis_height=0.45,
        roll_inertia_sprung=650.0,
        yaw_inertia=2600.0,
        roll_stiffness=350_000.0,
        roll_damping=22_000.0,
        track_width=1.52,
        dist_front_axle=1.15,
        dist_rear_axle=1.50,
        wheel_radius=0.32,
        wheel_inertia=1.2,
        steer_ratio=16.0,
        front_roll_share=0.55,
        drag_coeff=0.40,
        roll_resist_coeff=0.012,
        drive_torque_max=3000.0,
        brake_torque_max=6000.0,
        tires=TireParams(
            stiffness_factor=9.0,
            shape_factor=1.55,
            peak_friction=0.95,
            curvature_factor=-0.8,
            load_sensitivity=4.0,
        ),
    )


def utility_truck() -> VehicleParams:
    """Box truck: higher CG, wider track, lower grip.  Rolls over well below
    the sedan's limit speed on the same corner."""
    return VehicleParams(
        mass_total=4600.0,
        mass_unsprung=700.0,
        h_sprung=0.979,
        roll_axis_height=0.50,
        roll_inertia_sprung=2800.0,
        yaw_inertia=12_000.0,
        roll_stiffness=1_000_000.0,
        roll_damping=81_000.0,
        track_width=1.85,
        dist_front_axle=1.60,
        dist_rear_axle=2.00,
        wheel_radius=0.42,
        wheel_inertia=4.0,
        steer_ratio=20.0,
        front_roll_share=0.5,
        drag_coeff=1.1,
        roll_resist_coeff=0.014,
        drive_torque_max=9000.0,
        brake_torque_max=18_000.0,
        tires=TireParams(
            stiffness_factor=8.0,
            shape_factor=1.55,
            peak_friction=0.85,
            curvature_factor=-0.8,
            load_sensitivity=4.0,
        ),
    )


def with_tires(params: VehicleParams, **tire_overrides) -> VehicleParams:
    return replace(params, tires=replace(params.tires, **tire_overrides))
