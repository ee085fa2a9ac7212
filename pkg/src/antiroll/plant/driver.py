"""Path-following driver: PID on previewed lateral error plus curvature
feedforward.

The driver looks ahead by a speed-scaled preview time, measures the
lateral offset of that preview point from the track centerline, and turns
the steering wheel against it.  The feedforward term supplies the
steady-state steering for the upcoming curvature so the PID only handles
the error, which keeps the loop stable at highway speed with sane gains.
Output is a steering wheel angle in degrees, clamped to the actuator box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .params import VehicleParams
from .track import TrackGeometry


@dataclass(frozen=True)
class DriverGains:
    kp: float = 1.2            # deg per meter of preview error
    ki: float = 0.12           # deg per meter-second of at-vehicle offset
    kd: float = 2.5            # deg per meter/second
    preview_time: float = 0.9      # s
    feedforward: float = 1.0       # scale on the kinematic steering term
    integral_limit: float = 30.0   # deg contribution bound
    steer_limit: float = 200.0     # deg, actuator box


class PreviewDriver:
    """Stateful path follower; one instance per run."""

    def __init__(self, track: TrackGeometry, params: VehicleParams,
                 gains: DriverGains | None = None):
        self.track = track
        self.params = params
        self.gains = gains if gains is not None else DriverGains()
        self._progress = 0.0
        self._integral = 0.0
        self._last_error: float | None = None
        self._build_steer_table()

    def _build_steer_table(self) -> None:
        """Tabulate the steady-state slip-angle correction vs lateral accel.

        A linear understeer gradient badly underestimates the steering a
        nearly saturated tire needs, so the feedforward inverts the actual
        tire curve: for each lateral acceleration find the front and rear
        axle slip angles whose combined force carries it, with lateral
        load transfer applied per axle.  Past the force peak the entry is
        capped at the peak-force slip.
        """
        from .model import magic_formula

        p = self.params
        weight = p.mass_total * p.gravity
        fz_f = weight * p.dist_rear_axle / p.wheelbase
        fz_r = weight * p.dist_front_axle / p.wheelbase

        def axle_force(alpha: float, fz_axle: float, transfer: float) -> float:
            total = 0.0
            for sgn in (1.0, -1.0):
                fz = max(0.5 * fz_axle + sgn * transfer, 0.0)
                _, fy = magic_formula(0.0, alpha, fz, p.tires,
                                      p.mass_total, p.gravity)
                total += fy
            return -total     # positive alpha gives negative fy

        def solve_alpha(need: float, fz_axle: float, transfer: float) -> float:
            lo, hi = 0.0, 0.35
            peak_a, peak_f = 0.0, 0.0
            for k in range(36):
                a = hi * (k + 1) / 36.0
                f = axle_force(a, fz_axle, transfer)
                if f > peak_f:
                    peak_a, peak_f = a, f
            if need >= peak_f:
                return peak_a
            hi = peak_a
            for _ in range(48):
                mid = 0.5 * (lo + hi)
                if axle_force(mid, fz_axle, transfer) < need:
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)

        grid = [0.12 * k for k in range(85)]     # 0 .. 10.1 m/s^2
        corr = []
        for a_y in grid:
            dl = p.mass_total * a_y * p.cg_height / p.track_width
            need_f = p.mass_total * a_y * p.dist_rear_axle / p.wheelbase
            need_r = p.mass_total * a_y * p.dist_front_axle / p.wheelbase
            a_f = solve_alpha(need_f, fz_f, 0.5 * dl * p.front_roll_share)
            a_r = solve_alpha(need_r, fz_r, 0.5 * dl * (1.0 - p.front_roll_share))
            corr.append(a_f - a_r)
        self._ff_grid = grid
        self._ff_corr = corr

    def _slip_correction(self, a_y: float) -> float:
        """Interpolated steady-state (front − rear) slip angle [rad]."""
        mag = abs(a_y)
        grid, corr = self._ff_grid, self._ff_corr
        if mag >= grid[-1]:
            val = corr[-1]
        else:
            j = int(mag / 0.12)
            frac = (mag - grid[j]) / 0.12
            val = corr[j] + frac * (corr[j + 1] - corr[j])
        return math.copysign(val, a_y)

    @property
    def progress(self) -> float:
        return self._progress

    def reset(self) -> None:
        self._progress = 0.0
        self._integral = 0.0
        self._last_error = None

    def steering(self, x: float, y: float, heading: float, vx: float,
                 dt: float) -> float:
        """Steering wheel command [deg] for the current pose."""
        g = self.gains
        s_here, offset_here = self.track.project(
            x, y, self._progress,
            back=10.0, ahead=max(3.0 * vx * dt, 5.0) + 25.0)
        self._progress = s_here

        preview_dist = max(vx, 1.0) * g.preview_time
        px = x + preview_dist * math.cos(heading)
        py = y + preview_dist * math.sin(heading)
        s_prev, lateral = self.track.project(px, py, s_here + preview_dist,
                                             back=preview_dist + 15.0,
                                             ahead=preview_dist + 30.0)

        error = lateral     # positive = preview point left of centerline
        # Integrate the offset at the vehicle, not at the preview point.
        # Zeroing the preview error still leaves the car riding a small
        # constant offset (the chord of the preview segment); integrating
        # the at-vehicle offset pulls that bias out too.
        self._integral += offset_here * dt
        int_term = g.ki * self._integral
        if int_term > g.integral_limit:
            int_term = g.integral_limit
            self._integral = g.integral_limit / g.ki
        elif int_term < -g.integral_limit:
            int_term = -g.integral_limit
            self._integral = -g.integral_limit / g.ki
        if self._last_error is None:
            rate = 0.0
        else:
            rate = (error - self._last_error) / dt
        self._last_error = error

        # steady-state road-wheel angle for the previewed curvature:
        # kinematic term plus the understeer correction at the implied a_y
        kappa = self.track.curvature_at(s_prev)
        a_y_ff = vx * vx * kappa
        ff_rad = (math.atan(self.params.wheelbase * kappa)
                  + self._slip_correction(a_y_ff))
        ff_deg = g.feedforward * math.degrees(ff_rad) * self.params.steer_ratio

        cmd = ff_deg - (g.kp * error + int_term + g.kd * rate)
        if cmd > g.steer_limit:
            cmd = g.steer_limit
        elif cmd < -g.steer_limit:
            cmd = -g.steer_limit
        return cmd


def driver_steering(state, track: TrackGeometry, params: VehicleParams,
                    driver: PreviewDriver, dt: float = 0.01) -> float:
    """Functional wrapper used by the harness loop."""
    return driver.steering(state.x, state.y, state.heading, state.vx, dt)
