import numpy as np

from wavelab.handlers.utils.observability import logger
from wavelab.logic.evolution import classify_longtime, evolve
from wavelab.logic.grid import diff_central
from wavelab.logic.lab.experiment import build_problem, standard_datum
from wavelab.logic.reaction import NodalReaction, parse_profile
from wavelab.models.config import ExperimentConfig
from wavelab.models.exceptions import ConfigError
from wavelab.models.grid import NodalField
from wavelab.models.lab import ShapeRow, ShapeStudy
from wavelab.models.reaction import ProfileKind, ReactionField

SHAPE_DELTAS = (0.001, 1.0, 10.0)
SHAPE_SPEEDS = (0.0, 0.4, 0.8)


def shape_descriptors(u: NodalField, rf: ReactionField) -> tuple[float, float, float]:
    """Mass behind the patch, share of mass outside it and max |u_z|."""
    reaction = NodalReaction(rf, u.grid)
    quad = np.full(u.grid.n, u.grid.h)
    quad[0] = quad[-1] = 0.5 * u.grid.h
    outside = quad * (1.0 - reaction.fraction) * u.values
    behind = u.grid.nodes < rf.center
    total = float(np.dot(quad, u.values))
    back_tail = float(np.sum(outside[behind]))
    outside_fraction = float(np.sum(outside)) / total if total > 0 else 0.0
    steepness = float(np.max(np.abs(diff_central(u).values)))
    return back_tail, outside_fraction, steepness


def shape_grid(cfg: ExperimentConfig) -> ExperimentConfig:
    """The configuration with the study's delta and speed lists filled in where the file leaves them unset."""
    updates: dict[str, object] = {}
    if 'delta_list' not in cfg.model_fields_set:
        updates['delta_list'] = list(SHAPE_DELTAS)
    if 'c_list' not in cfg.model_fields_set:
        updates['c_list'] = list(SHAPE_SPEEDS)
    if not updates:
        return cfg
    return ExperimentConfig.model_validate({**cfg.model_dump(exclude_unset=True), **updates})


def run_shape_study(cfg: ExperimentConfig) -> ShapeStudy:
    """Final bistable profiles on the delta_list x c_list grid with their shape descriptors.

    Unset lists default to delta in {0.001, 1, 10} and c in {0, 0.4, 0.8}.
    """
    profile = parse_profile(cfg.profile)
    if profile.kind != ProfileKind.BISTABLE:
        raise ConfigError(f'shape study needs a bistable profile, got {cfg.profile!r}')
    cfg = shape_grid(cfg)
    rows = []
    for delta in cfg.delta_list:
        rf, grid = build_problem(cfg, delta=delta, profile=profile)
        u0 = standard_datum(grid, cfg)
        for c in cfg.c_list:
            final, diagnostics = evolve(u0, c, rf, cfg.scheme_config())
            verdict = classify_longtime(diagnostics, cfg.thresholds())
            back_tail, outside_fraction, steepness = shape_descriptors(final, rf)
            logger.info('front shape', extra={'delta': delta, 'c': c, 'verdict': verdict.kind.value, 'back_tail_mass': back_tail})
            rows.append(
                ShapeRow(
                    delta=delta,
                    c=c,
                    verdict=verdict.kind,
                    back_tail_mass=back_tail,
                    outside_fraction=outside_fraction,
                    edge_steepness=steepness,
                    profile=final,
                )
            )
    return ShapeStudy(rows=rows)
