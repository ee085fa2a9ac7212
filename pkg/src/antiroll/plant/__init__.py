from .params import (TireParams, VehicleParams, load_vehicle, save_vehicle,
                     sedan, utility_truck)
from .model import (
    ActuatorCommand,
    ControlInput,
    Plant,
    StepInfo,
    VehicleState,
    WheelLoads,
    dynamics_rhs,
    ltr,
    ltr_signal,
    magic_formula,
    steady_state_ltr,
    tire_slip,
    vertical_loads,
)
from .terrain import TerrainProfile, flat_terrain, riverbed_terrain
from .track import (TrackGeometry, constant_radius_track, data_loop_track,
                    three_turn_track, track_by_name)
from .driver import DriverGains, PreviewDriver, driver_steering
from .governor import GovernorGains, SpeedGovernor, speed_governor

__all__ = [
    "ActuatorCommand",
    "ControlInput",
    "DriverGains",
    "GovernorGains",
    "Plant",
    "PreviewDriver",
    "SpeedGovernor",
    "StepInfo",
    "TerrainProfile",
    "TireParams",
    "TrackGeometry",
    "VehicleParams",
    "VehicleState",
    "WheelLoads",
    "constant_radius_track",
    "data_loop_track",
    "driver_steering",
    "dynamics_rhs",
    "flat_terrain",
    "load_vehicle",
    "ltr",
    "ltr_signal",
    "magic_formula",
    "riverbed_terrain",
    "save_vehicle",
    "sedan",
    "speed_governor",
    "steady_state_ltr",
    "three_turn_track",
    "tire_slip",
    "track_by_name",
    "utility_truck",
    "vertical_loads",
]
