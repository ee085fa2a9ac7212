"""Longitudinal speed governor.

Proportional-integral loop from speed error to a total wheel torque,
split evenly across the four wheels.  The integrator uses conditional
anti-windup: it freezes whenever the torque command saturates in the
direction the integrator is pushing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import VehicleParams

KMH = 1.0 / 3.6


@dataclass(frozen=True)
class GovernorGains:
    kp: float = 900.0    # N m per m/s of speed error
    ki: float = 260.0    # N m per m


class SpeedGovernor:
    """Stateful PI speed tracker; one instance per run."""

    def __init__(self, params: VehicleParams, gains: GovernorGains | None = None):
        self.params = params
        self.gains = gains if gains is not None else GovernorGains()
        self._integral = 0.0

    def reset(self) -> None:
        self._integral = 0.0

    def torques(self, vx: float, v_target_kmh: float, dt: float) -> np.ndarray:
        """Per-wheel torque command for one controller period."""
        err = v_target_kmh * KMH - vx
        g = self.gains
        total = g.kp * err + g.ki * self._integral
        lo = -self.params.brake_torque_max
        hi = self.params.drive_torque_max
        saturated_hi = total >= hi and err > 0.0
        saturated_lo = total <= lo and err < 0.0
        if not (saturated_hi or saturated_lo):
            self._integral += err * dt
            total = g.kp * err + g.ki * self._integral
        if total > hi:
            total = hi
        elif total < lo:
            total = lo
        return np.full(4, total / 4.0)


def speed_governor(state, v_target_kmh: float, params: VehicleParams,
                   governor: SpeedGovernor, dt: float = 0.01) -> np.ndarray:
    """Functional wrapper used by the harness loop."""
    return governor.torques(state.vx, v_target_kmh, dt)
