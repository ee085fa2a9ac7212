"""Vertical load balance and the load-transfer ratio."""

import math

import pytest
from hypothesis import given, settings, strategies as st

from antiroll.plant import sedan, utility_truck, vertical_loads, ltr, steady_state_ltr
from antiroll.plant.model import VehicleState, ltr_signal

PAR = sedan()
WEIGHT = PAR.mass_total * PAR.gravity


def test_static_distribution():
    loads = vertical_loads(VehicleState(vx=20.0), 0.0, PAR)
    assert loads.total == pytest.approx(WEIGHT, rel=1e-12)
    assert loads.fl == pytest.approx(loads.fr)
    assert loads.rl == pytest.approx(loads.rr)
    # front axle share follows the rear-distance lever arm
    front = loads.fl + loads.fr
    assert front == pytest.approx(WEIGHT * PAR.dist_rear_axle / PAR.wheelbase)


@settings(max_examples=150, deadline=None)
@given(
    a_y=st.floats(-12.0, 12.0),
    roll=st.floats(-0.3, 0.3),
    roll_rate=st.floats(-1.0, 1.0),
)
def test_unclamped_loads_conserve_total(a_y, roll, roll_rate):
    st8 = VehicleState(vx=25.0, roll=roll, roll_rate=roll_rate)
    raw = vertical_loads(st8, a_y, PAR, clamp=False)
    assert raw.total == pytest.approx(WEIGHT, abs=1e-9 * WEIGHT)


def test_clamped_loads_nonnegative_and_axle_conserving():
    st8 = VehicleState(vx=25.0, roll=0.12)
    loads = vertical_loads(st8, 11.0, PAR)
    arr = loads.as_array()
    assert (arr >= 0).all()
    # clamping moves the lifted wheel's share to its axle partner
    assert loads.total == pytest.approx(WEIGHT, rel=1e-12)


def test_liftoff_gives_unit_ltr():
    """When a whole side unloads, |LTR| must be exactly 1."""
    st8 = VehicleState(vx=25.0, roll=0.15)
    loads = vertical_loads(st8, 20.0, PAR)
    assert loads.fl == 0.0 and loads.rl == 0.0
    assert ltr(loads, PAR.mass_total, PAR.gravity) == pytest.approx(1.0)


def test_ltr_signal_unclamped_exceeds_one():
    st8 = VehicleState(vx=25.0, roll=0.15)
    assert ltr_signal(st8, 20.0, PAR) > 1.0


def test_ltr_zero_at_rest():
    loads = vertical_loads(VehicleState(), 0.0, PAR)
    assert ltr(loads, PAR.mass_total, PAR.gravity) == 0.0


def test_ltr_sign_follows_transfer_direction():
    # positive lateral acceleration loads the right side
    st8 = VehicleState(vx=25.0)
    loads = vertical_loads(st8, 5.0, PAR)
    assert ltr(loads, PAR.mass_total, PAR.gravity) > 0


def test_steady_state_ltr_trivials():
    assert steady_state_ltr(0.0, 100.0, PAR) == 0.0
    # invert the formula for the lift-off boundary speed
    radius = 120.0
    v_lift = math.sqrt(PAR.gravity * PAR.track_width * radius / (2 * PAR.cg_height))
    assert steady_state_ltr(v_lift, radius, PAR) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        steady_state_ltr(10.0, -5.0, PAR)


def test_truck_has_lower_liftoff_threshold():
    """The high-CG truck lifts at a gentler lateral acceleration."""
    assert utility_truck().liftoff_accel < sedan().liftoff_accel
