from typing import Optional

import numpy as np

from wavelab.logic.grid import make_grid
from wavelab.logic.reaction import bistable_profile, kpp_profile, make_field
from wavelab.models.grid import Grid, NodalField
from wavelab.models.reaction import ReactionField, ReactionProfile


def build_field(profile: Optional[ReactionProfile] = None, width: float = 10.0, delta: float = 1.0) -> ReactionField:
    return make_field(profile or kpp_profile(), width, delta)


def build_grid(rf: ReactionField, L: float = 40.0, h: float = 0.1) -> Grid:
    return make_grid(L, h, rf)


def kpp_setup(width: float = 10.0, delta: float = 1.0, L: float = 40.0, h: float = 0.1) -> tuple[ReactionField, Grid]:
    rf = build_field(kpp_profile(), width, delta)
    return rf, build_grid(rf, L, h)


def bistable_setup(width: float = 30.0, delta: float = 1.0, L: float = 120.0, h: float = 0.2, theta: float = 0.2) -> tuple[ReactionField, Grid]:
    rf = build_field(bistable_profile(theta), width, delta)
    return rf, build_grid(rf, L, h)


def random_interior_field(grid: Grid, rng: np.random.Generator, low: float = 0.05, high: float = 0.95) -> NodalField:
    """Uniform values in [low, high] with zero Dirichlet ends."""
    values = rng.uniform(low, high, grid.n)
    values[0] = values[-1] = 0.0
    return NodalField(grid=grid, values=values)


def random_bumps(grid: Grid, rng: np.random.Generator, count: int = 3, reach: float = 0.6) -> NodalField:
    """Sum of smooth compactly supported bumps inside the central ``reach`` share of the domain."""
    z = grid.shifted
    half = 0.5 * reach * (grid.z_max - grid.z_min)
    values = np.zeros(grid.n)
    for _ in range(count):
        center = rng.uniform(-0.5 * half, 0.5 * half)
        radius = rng.uniform(1.0, 0.5 * half)
        inside = np.abs(z - center) < radius
        values[inside] += rng.uniform(0.1, 1.0) * np.cos(0.5 * np.pi * (z[inside] - center) / radius) ** 2
    return NodalField(grid=grid, values=values)
