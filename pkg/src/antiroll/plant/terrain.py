"""Terrain profiles sampled along arclength.

A profile carries elevation, its second derivative (what actually loads
the tires at speed), bank angle, and surface friction, each tabulated on
a uniform arclength grid.  The kernel interpolates linearly and holds the
last entry beyond the table end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# sentinel friction value meaning "nominal tire surface"
MU_NOMINAL = -1.0


@dataclass(frozen=True)
class TerrainProfile:
    s_step: float
    elevation: np.ndarray   # [m]
    elev_curv: np.ndarray   # d2z/ds2 [1/m]
    bank: np.ndarray        # [rad], positive pulls the vehicle to +y
    mu: np.ndarray          # absolute friction, MU_NOMINAL = tire default

    def __post_init__(self):
        n = len(self.elevation)
        if n < 2:
            raise ValueError("terrain tables need at least two samples")
        for name in ("elev_curv", "bank", "mu"):
            if len(getattr(self, name)) != n:
                raise ValueError("terrain tables must share one grid")
        if self.s_step <= 0:
            raise ValueError("s_step must be positive")
        if np.any((self.mu <= 0) & (self.mu != MU_NOMINAL)):
            raise ValueError("friction must be positive (or the nominal sentinel)")

    @property
    def length(self) -> float:
        return self.s_step * (len(self.elevation) - 1)

    def mu_scale(self, nominal_mu: float) -> np.ndarray:
        """Friction table relative to a tire's nominal surface."""
        return np.where(self.mu == MU_NOMINAL, 1.0, self.mu / nominal_mu)


def flat_terrain() -> TerrainProfile:
    zeros = np.zeros(2)
    return TerrainProfile(
        s_step=1e9,
        elevation=zeros,
        elev_curv=zeros,
        bank=zeros,
        mu=np.full(2, MU_NOMINAL),
    )


def riverbed_terrain(seed: int, length: float = 1500.0,
                     elev_amp: float = 1.0, bank_amp: float = 0.05,
                     mu: float = 0.80, s_step: float = 1.0,
                     fade_in: float = 60.0) -> TerrainProfile:
    """Seeded band-limited rough-ground profile.

    Elevation is a sum of random-phase sinusoids with wavelengths between
    25 and 140 m; bank uses longer waves.  Amplitudes ramp in over
    ``fade_in`` meters so runs start on clean ground.  ``elev_amp`` and
    ``bank_amp`` scale the respective peak amplitudes.
    """
    rng = np.random.default_rng(seed)
    n = int(round(length / s_step)) + 1
    s = np.arange(n) * s_step

    def wave_sum(n_comp, lam_lo, lam_hi, amp_of_lam):
        z = np.zeros(n)
        zpp = np.zeros(n)
        lams = np.exp(rng.uniform(np.log(lam_lo), np.log(lam_hi), n_comp))
        phases = rng.uniform(0.0, 2.0 * np.pi, n_comp)
        for lam, ph in zip(lams, phases):
            k = 2.0 * np.pi / lam
            a = amp_of_lam(lam)
            z += a * np.sin(k * s + ph)
            zpp += -a * k * k * np.sin(k * s + ph)
        return z, zpp

    elev, elev_curv = wave_sum(
        10, 25.0, 140.0, lambda lam: elev_amp * 0.012 * lam ** 0.9)
    bank_raw, _ = wave_sum(
        8, 45.0, 220.0, lambda lam: 1.0)
    bank = bank_amp * bank_raw / max(1e-9, np.max(np.abs(bank_raw)))

    ramp = np.clip(s / max(fade_in, s_step), 0.0, 1.0)
    return TerrainProfile(
        s_step=s_step,
        elevation=elev * ramp,
        elev_curv=elev_curv * ramp,
        bank=bank * ramp,
        mu=np.full(n, float(mu)),
    )
