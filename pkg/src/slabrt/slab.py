"""Slab geometry, boundary conditions and the particle state."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class BoundaryCondition(str, enum.Enum):
    """Pair of wall conditions, written ``<at x_n=0>-<at x_n=H>``."""

    NEUMANN_NEUMANN = "neumann-neumann"
    DIRICHLET_DIRICHLET = "dirichlet-dirichlet"
    DIRICHLET_NEUMANN = "dirichlet-neumann"
    NEUMANN_DIRICHLET = "neumann-dirichlet"


@dataclass(frozen=True)
class SlabConfig:
    """Slab 0 < x_n < H with source point ``x0`` = (x⊥, x_n)."""

    H: float
    bc: BoundaryCondition
    x0: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "bc", BoundaryCondition(self.bc))
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        if not (math.isfinite(self.H) and self.H > 0.0):
            raise ValueError("slab thickness H must be finite and > 0")
        if len(self.x0) != 3 or not all(math.isfinite(v) for v in self.x0):
            raise ValueError("x0 must be a finite 3-vector")
        if not (0.0 < self.x0[2] < self.H):
            raise ValueError(f"source normal coordinate x0_n = {self.x0[2]!r} must satisfy 0 < x0_n < H = {self.H!r}")

    @property
    def x0n(self) -> float:
        return self.x0[2]


@dataclass
class Particle:
    position: np.ndarray
    K: np.ndarray
    weight: float
    time: float = 0.0
    n_scatters: int = 0
    n_reflections: int = 0
    extra: dict = field(default_factory=dict, repr=False)

    @property
    def k(self) -> float:
        return float(np.sqrt(np.dot(self.K, self.K)))
