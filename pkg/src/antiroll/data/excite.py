"""Seeded excitation noise for data-collection inputs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ExcitationConfig:
    """Per-channel white-noise levels plus the generator seed.

    For the vehicle input channels the stds are in degrees (steering
    wheel) and km/h (speed target).
    """

    stds: tuple[float, ...]
    seed: int = 0

    def __post_init__(self):
        if any(s < 0 for s in self.stds):
            raise ValueError("noise levels must be nonnegative")


def inject_excitation(u_ref: np.ndarray, cfg: ExcitationConfig) -> np.ndarray:
    """Reference plus seeded Gaussian dither, channel by channel."""
    u = np.atleast_2d(np.asarray(u_ref, dtype=float))
    if u.shape[1] != len(cfg.stds):
        raise ValueError(
            f"{len(cfg.stds)} noise levels for {u.shape[1]} channels")
    rng = np.random.default_rng(cfg.seed)
    noise = rng.standard_normal(u.shape) * np.asarray(cfg.stds)
    return u + noise
