"""Track geometry, terrain profiles, driver and governor behavior."""

import math

import numpy as np
import pytest

from antiroll.plant import (
    Plant,
    PreviewDriver,
    SpeedGovernor,
    VehicleState,
    constant_radius_track,
    flat_terrain,
    riverbed_terrain,
    sedan,
    three_turn_track,
)
from antiroll.plant.track import track_by_name
import antiroll.plant.kernel as kernel
import antiroll.plant.layout as layout

PAR = sedan()


def test_pose_continuity_across_segments():
    track = three_turn_track()
    for s_join in track.cum_lengths[1:-1]:
        xa, ya, ha = track.pose_at(s_join - 1e-6)
        xb, yb, hb = track.pose_at(s_join + 1e-6)
        assert math.hypot(xb - xa, yb - ya) < 1e-4
        assert abs(hb - ha) < 1e-4


def test_project_recovers_centerline_points():
    track = three_turn_track()
    for s in np.linspace(5.0, track.total_length - 5.0, 40):
        x, y, _ = track.pose_at(float(s))
        s_hat, lateral = track.project(x, y, float(s) - 2.0)
        assert abs(s_hat - s) < 1e-6
        assert abs(lateral) < 1e-8


def test_project_lateral_sign():
    track = constant_radius_track(100.0, lead_in=20.0)
    x, y, heading = track.pose_at(10.0)
    # a point to the left of a straight heading has positive lateral
    lx = x - 2.0 * math.sin(heading)
    ly = y + 2.0 * math.cos(heading)
    _, lateral = track.project(lx, ly, 9.0)
    assert lateral == pytest.approx(2.0, abs=1e-9)


def test_mirrored_track_flips_curvature():
    track = three_turn_track()
    mirror = track.mirrored()
    for s in (150.0, 400.0, 800.0):
        assert mirror.curvature_at(s) == pytest.approx(-track.curvature_at(s))
    assert mirror.total_length == pytest.approx(track.total_length)


def test_track_by_name():
    assert track_by_name("three-turn").total_length == \
        pytest.approx(three_turn_track().total_length)
    assert track_by_name("circle:150").curvature_at(500.0) == \
        pytest.approx(1.0 / 150.0)
    with pytest.raises(KeyError):
        track_by_name("nope")


def test_flat_terrain_is_inert():
    terr = flat_terrain()
    assert float(np.abs(terr.elev_curv).max()) == 0.0
    assert float(np.abs(terr.bank).max()) == 0.0


def test_riverbed_terrain_seeded_and_bounded():
    a = riverbed_terrain(seed=7)
    b = riverbed_terrain(seed=7)
    c = riverbed_terrain(seed=8)
    assert np.array_equal(a.elevation, b.elevation)
    assert not np.array_equal(a.elevation, c.elevation)
    assert float(np.abs(a.bank).max()) <= 0.06
    # fade-in ramps from level ground
    assert a.elevation[0] == 0.0
    assert abs(a.elevation[:5]).max() < 0.2


def test_mirror_symmetric_closed_loop():
    """Mirroring the course mirrors steering and LTR to tight tolerance."""
    track = three_turn_track()
    runs = {}
    for name, tr in (("base", track), ("mirror", track.mirrored())):
        plant = Plant(PAR)
        driver = PreviewDriver(tr, PAR)
        gov = SpeedGovernor(PAR)
        x = VehicleState.cruising(PAR, 80 / 3.6).as_array()
        aux = np.zeros(kernel.NAUX)
        steers, ltrs = [], []
        for i in range(800):
            vx = x[layout.VX]
            steer = driver.steering(x[layout.POS_X], x[layout.POS_Y],
                                    x[layout.HEADING], vx, 0.01)
            torq = gov.torques(vx, 80.0, 0.01)
            plant.step_array(x, math.radians(steer) / PAR.steer_ratio,
                             torq, 0.01, aux)
            steers.append(steer)
            ltrs.append(aux[kernel.AUX_LTR])
        runs[name] = (np.array(steers), np.array(ltrs))
    assert np.allclose(runs["base"][0], -runs["mirror"][0], atol=1e-6)
    assert np.allclose(runs["base"][1], -runs["mirror"][1], atol=1e-6)


def test_governor_holds_target_speed():
    plant = Plant(PAR)
    gov = SpeedGovernor(PAR)
    s = VehicleState.cruising(PAR, 90 / 3.6)
    from antiroll.plant.model import ActuatorCommand
    for i in range(600):
        torq = gov.torques(s.vx, 100.0, 0.01)
        s, _ = plant.step(s, ActuatorCommand(steer_rad=0.0, wheel_torques=torq),
                          0.01)
    assert s.vx * 3.6 == pytest.approx(100.0, abs=0.5)


def test_driver_settles_on_circle():
    track = constant_radius_track(150.0, laps=3.0)
    plant = Plant(PAR)
    driver = PreviewDriver(track, PAR)
    gov = SpeedGovernor(PAR)
    x = VehicleState.cruising(PAR, 20.0).as_array()
    aux = np.zeros(kernel.NAUX)
    radii = []
    for i in range(3000):
        vx = x[layout.VX]
        steer = driver.steering(x[layout.POS_X], x[layout.POS_Y],
                                x[layout.HEADING], vx, 0.01)
        torq = gov.torques(vx, 72.0, 0.01)
        plant.step_array(x, math.radians(steer) / PAR.steer_ratio, torq,
                         0.01, aux)
        if i > 2400:
            radii.append(x[layout.VX] / x[layout.YAW_RATE])
    assert np.mean(radii) == pytest.approx(150.0, rel=0.01)
