from typing import Optional

from wavelab.logic.evolution import gaussian_ic
from wavelab.logic.grid import make_grid
from wavelab.logic.reaction import make_field, parse_profile
from wavelab.models.config import ExperimentConfig
from wavelab.models.grid import Grid, NodalField
from wavelab.models.reaction import ReactionField, ReactionProfile


def build_problem(cfg: ExperimentConfig, delta: Optional[float] = None, profile: Optional[ReactionProfile] = None) -> tuple[ReactionField, Grid]:
    """Reaction field and grid of one run: patch of width l centred at 0 on a domain of length L."""
    rf = make_field(profile or parse_profile(cfg.profile), cfg.l, cfg.delta if delta is None else delta)
    return rf, make_grid(cfg.L, cfg.h, rf)


def standard_datum(grid: Grid, cfg: ExperimentConfig, amplitude: Optional[float] = None) -> NodalField:
    """amplitude * exp(-((z - patch centre) / l)²)."""
    return gaussian_ic(grid, cfg.amplitude if amplitude is None else amplitude, grid.origin, cfg.l)
