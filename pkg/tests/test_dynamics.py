"""Rigid-body dynamics: equilibrium, symmetry, integrator order, flags."""

import math

import numpy as np
import pytest

from antiroll.plant import sedan, Plant, dynamics_rhs
from antiroll.plant.model import ActuatorCommand, VehicleState
import antiroll.plant.kernel as kernel

PAR = sedan()
FREE = ActuatorCommand(steer_rad=0.0, wheel_torques=np.zeros(4))


def mirror_state(s: VehicleState) -> VehicleState:
    """Reflect a state about the vehicle's longitudinal plane."""
    w = s.wheel_speeds
    return VehicleState(
        vx=s.vx, vy=-s.vy, yaw_rate=-s.yaw_rate,
        roll=-s.roll, roll_rate=-s.roll_rate,
        wheel_speeds=np.array([w[1], w[0], w[3], w[2]]),
        x=s.x, y=-s.y, heading=-s.heading, travel=s.travel)


def test_straight_line_equilibrium():
    s = VehicleState.cruising(PAR, 25.0)
    d, info = dynamics_rhs(s, FREE, None, PAR)
    # lateral and roll channels are exactly quiet
    assert d.vy == 0.0
    assert d.yaw_rate == 0.0
    assert d.roll == 0.0
    assert d.roll_rate == 0.0
    assert info["ltr"] == 0.0
    # drag and rolling resistance decelerate
    assert d.vx < 0.0


def test_mirror_symmetry_of_rhs():
    s = VehicleState(vx=22.0, vy=0.4, yaw_rate=0.18, roll=0.05,
                     roll_rate=-0.1,
                     wheel_speeds=np.array([68.0, 69.0, 68.5, 69.5]),
                     heading=0.2, y=1.5)
    cmd = ActuatorCommand(steer_rad=0.04,
                          wheel_torques=np.array([50.0, 50.0, 80.0, 80.0]))
    cmd_m = ActuatorCommand(steer_rad=-0.04, wheel_torques=cmd.wheel_torques)
    d, info = dynamics_rhs(s, cmd, None, PAR)
    dm, info_m = dynamics_rhs(mirror_state(s), cmd_m, None, PAR)
    assert dm.vy == pytest.approx(-d.vy, abs=1e-12)
    assert dm.yaw_rate == pytest.approx(-d.yaw_rate, abs=1e-12)
    assert dm.roll_rate == pytest.approx(-d.roll_rate, abs=1e-12)
    assert dm.vx == pytest.approx(d.vx, abs=1e-12)
    assert info_m["ltr"] == pytest.approx(-info["ltr"], abs=1e-12)
    assert dm.wheel_speeds[0] == pytest.approx(d.wheel_speeds[1], abs=1e-12)
    assert dm.wheel_speeds[2] == pytest.approx(d.wheel_speeds[3], abs=1e-12)


def test_step_matches_rhs_for_small_dt():
    s = VehicleState(vx=20.0, wheel_speeds=np.full(4, 62.5), vy=0.1,
                     yaw_rate=0.05)
    cmd = ActuatorCommand(steer_rad=0.02, wheel_torques=np.full(4, 100.0))
    d, _ = dynamics_rhs(s, cmd, None, PAR)
    plant = Plant(PAR, substep=1e-5)
    after, _ = plant.step(s, cmd, dt=1e-5)
    fd = (after.as_array() - s.as_array()) / 1e-5
    ref = d.as_array()
    # wheel-spin channels are stiff, so allow a little slack there
    scale = np.maximum(np.abs(ref), 1.0)
    assert np.all(np.abs(fd - ref) / scale < 5e-3)


def test_integrator_order():
    """Step-halving on a smooth cornering arc shows 4th-order decay."""
    s0 = VehicleState.cruising(PAR, 20.0)
    cmd = ActuatorCommand(steer_rad=math.radians(15.0) / PAR.steer_ratio,
                          wheel_torques=np.zeros(4))

    def final_state(h):
        plant = Plant(PAR, substep=h)
        s = s0
        for _ in range(int(round(0.4 / 0.01))):
            s, _ = plant.step(s, cmd, dt=0.01)
        return s.as_array()[:5]

    ref = final_state(0.000125)
    e1 = np.linalg.norm(final_state(0.002) - ref)
    e2 = np.linalg.norm(final_state(0.001) - ref)
    order = math.log2(e1 / e2)
    assert order > 3.8


def test_roll_impulse_decays():
    s = VehicleState.cruising(PAR, 25.0)
    s = VehicleState(vx=s.vx, roll_rate=0.3, wheel_speeds=s.wheel_speeds)
    plant = Plant(PAR)
    for _ in range(200):
        s, info = plant.step(s, FREE, dt=0.01)
    assert abs(s.roll) < 1e-3
    assert abs(s.roll_rate) < 1e-3


def test_rollover_flag_terminates():
    s = VehicleState(vx=25.0, roll=0.45, roll_rate=3.0,
                     wheel_speeds=np.full(4, 78.0))
    plant = Plant(PAR)
    x = s.as_array()
    aux = np.zeros(kernel.NAUX)
    status = plant.step_array(x, 0.0, np.zeros(4), 0.5, aux)
    assert status == kernel.STATUS_ROLLED
    assert abs(x[3]) > kernel.ROLL_LIMIT


def test_nonfinite_state_raises():
    s = VehicleState(vx=float("nan"), wheel_speeds=np.zeros(4))
    plant = Plant(PAR)
    with pytest.raises(FloatingPointError):
        plant.step(s, FREE)


def test_free_rolling_wheels_track_ground_speed():
    s = VehicleState.cruising(PAR, 30.0)
    plant = Plant(PAR)
    for _ in range(100):
        s, _ = plant.step(s, FREE, dt=0.01)
    # free-rolling slip stays a fraction of a percent
    for w in s.wheel_speeds:
        assert abs(w * PAR.wheel_radius - s.vx) / s.vx < 5e-3
