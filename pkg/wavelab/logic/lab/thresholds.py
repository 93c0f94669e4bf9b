from typing import Optional

from wavelab.handlers.utils.observability import logger
from wavelab.logic.energy import min_energy_sign_bisect, minimize, plateau_seed
from wavelab.logic.lab.experiment import build_problem
from wavelab.logic.lab.sweep import run_sweep
from wavelab.logic.spectral import c_lin, c_upper_kpp, ground_state
from wavelab.logic.stationary import continue_in_c
from wavelab.models.config import ExperimentConfig
from wavelab.models.energy import Classification
from wavelab.models.exceptions import BracketInvalidError, NumericalError, OrderingViolationError
from wavelab.models.grid import Grid
from wavelab.models.lab import ThresholdReport, ThresholdRow
from wavelab.models.reaction import ReactionField

ORDERING_SLACK = 0.05


def _energy_threshold(cfg: ExperimentConfig, rf: ReactionField, grid: Grid) -> Optional[float]:
    try:
        return min_energy_sign_bisect(rf, cfg.c_lo, cfg.c_hi, cfg.bisect_tol, grid, cfg.minimize_options(tol=1e-6))
    except BracketInvalidError as exc:
        logger.info('no energy sign change in the speed bracket', extra={'delta': rf.delta, 'reason': str(exc)})
        return None


def _branch_fold(cfg: ExperimentConfig, rf: ReactionField, grid: Grid) -> Optional[float]:
    """Fold of the branch continued from the energy minimiser at c_lo; c_max when the branch never folds."""
    seed = minimize(plateau_seed(grid, rf), cfg.c_lo, rf, cfg.minimize_options(raise_on_cap=False, record_history=False))
    if seed.classification != Classification.WAVE:
        return None
    try:
        branch = continue_in_c(seed.minimizer, cfg.c_lo, cfg.c_step, cfg.c_max, rf)
    except NumericalError as exc:
        logger.warning('branch continuation failed', extra={'delta': rf.delta, 'reason': str(exc)})
        return None
    if not branch.entries:
        return None
    return branch.fold_estimate if branch.fold_estimate is not None else branch.entries[-1].c


def threshold_row(cfg: ExperimentConfig, delta: float) -> ThresholdRow:
    rf, grid = build_problem(cfg, delta=delta)
    eig = ground_state(rf, grid)
    sweep_cfg = ExperimentConfig.model_validate({**cfg.model_dump(exclude_unset=True), 'delta': delta})
    row = ThresholdRow(
        delta=delta,
        energy_lower=_energy_threshold(cfg, rf, grid),
        branch_fold=_branch_fold(cfg, rf, grid),
        dynamic=run_sweep(sweep_cfg).estimated_critical_speed,
        majorant_upper=c_upper_kpp(rf, grid),
        lambda0=eig.lambda0,
        c_lin=c_lin(eig.lambda0),
    )
    logger.info('speed thresholds', extra={'delta': delta, **row.model_dump(), 'gaps': row.gaps()})
    return row


def run_threshold_comparison(cfg: ExperimentConfig) -> ThresholdReport:
    """Energy, branch, dynamic and majorant speeds per delta; only energy <= majorant (+0.05) is enforced."""
    rows = [threshold_row(cfg, delta) for delta in cfg.delta_list]
    for row in rows:
        if row.energy_lower is not None and row.energy_lower > row.majorant_upper + ORDERING_SLACK:
            raise OrderingViolationError(f'energy threshold {row.energy_lower:.4f} exceeds the majorant bound {row.majorant_upper:.4f} at delta={row.delta}')
    return ThresholdReport(profile=cfg.profile, rows=rows)
