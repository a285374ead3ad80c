"""Incoming-field descriptions.

A field supplies the Dirichlet data ``v`` for the scattered field, so the
sound-soft incident wave is ``-v``.
"""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PlaneWave:
    """``amplitude * exp(i kappa d.x)`` with unit direction ``d``."""

    direction: tuple
    amplitude: complex = 1.0

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        nrm = np.linalg.norm(d)
        if d.ndim != 1 or d.size not in (2, 3) or not np.isfinite(nrm) or nrm == 0:
            raise ValueError(f"plane-wave direction must be a nonzero 2D or 3D vector, got {self.direction!r}")
        object.__setattr__(self, "direction", tuple(float(x) for x in d / nrm))

    def evaluate(self, points, kernel):
        pts = np.atleast_2d(points)
        d = np.asarray(self.direction)
        if d.size != pts.shape[1]:
            raise ValueError(f"direction is {d.size}D but points are {pts.shape[1]}D")
        return self.amplitude * np.exp(1j * kernel.kappa * (pts @ d))

    def scaled(self, alpha):
        return PlaneWave(self.direction, self.amplitude * alpha)


@dataclass(frozen=True, eq=False)
class Monopoles:
    """Sum of point sources ``sum_j c_j phi(x - y_j)``; may be empty (zero field)."""

    locations: np.ndarray
    strengths: np.ndarray

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float)
        if loc.size == 0:
            loc = loc.reshape(0, loc.shape[-1] if loc.ndim == 2 else 2)
        loc = np.atleast_2d(loc)
        c = np.atleast_1d(np.asarray(self.strengths, dtype=complex))
        if loc.ndim != 2 or len(c) != len(loc) or c.ndim != 1:
            raise ValueError(f"need one strength per location, got {len(c)} for {len(loc)}")
        if not (np.all(np.isfinite(loc)) and np.all(np.isfinite(c))):
            raise ValueError("monopole locations and strengths must be finite")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "strengths", c)

    def evaluate(self, points, kernel):
        pts = np.atleast_2d(points)
        if len(self.strengths) == 0:
            return np.zeros(len(pts), dtype=complex)
        return kernel.apply(pts, self.locations, self.strengths)

    def scaled(self, alpha):
        return Monopoles(self.locations, self.strengths * alpha)

    def subset(self, mask):
        return Monopoles(self.locations[mask], self.strengths[mask])
