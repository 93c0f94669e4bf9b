import numpy as np

from wavelab.handlers.utils.observability import logger
from wavelab.logic.energy import minimize, plateau_seed
from wavelab.logic.evolution import classify_longtime, evolve
from wavelab.logic.lab.experiment import build_problem, standard_datum
from wavelab.logic.reaction import multistable_profile
from wavelab.models.config import ExperimentConfig
from wavelab.models.evolution import VerdictKind
from wavelab.models.grid import Grid, NodalField
from wavelab.models.lab import BistabilityCase, BistabilityReport
from wavelab.models.reaction import ReactionField

DEMO_HORIZON = 300.0
DEMO_SPEEDS = (0.0, 0.2)
TINY_AMPLITUDE = 1e-3
LOWER_LEVEL = 1.0
LIMIT_GAP = 0.2
# a shelf is a run of nodes within this distance of a stable level, at least one length unit long
SHELF_TOL = 0.05


def _has_shelf(u: NodalField, level: float) -> bool:
    near = np.abs(u.values - level) < SHELF_TOL
    needed = max(2, int(round(1.0 / u.grid.h)))
    run = longest = 0
    for flag in near:
        run = run + 1 if flag else 0
        longest = max(longest, run)
    return longest >= needed


def demo_problem(cfg: ExperimentConfig) -> tuple[ReactionField, Grid]:
    """The quintic habitat every case runs on."""
    return build_problem(cfg, profile=multistable_profile())


def run_bistability_case(cfg: ExperimentConfig, c: float) -> BistabilityCase:
    rf, grid = demo_problem(cfg)
    profile = rf.profile
    scheme = cfg.scheme_config()
    thresholds = cfg.thresholds()
    low_amplitude, high_amplitude = cfg.amplitudes[0], cfg.amplitudes[-1]

    low, low_diag = evolve(standard_datum(grid, cfg, low_amplitude), c, rf, scheme)
    high, high_diag = evolve(standard_datum(grid, cfg, high_amplitude), c, rf, scheme)
    _, tiny_diag = evolve(standard_datum(grid, cfg, TINY_AMPLITUDE), c, rf, scheme)
    verdict_low = classify_longtime(low_diag, thresholds).kind
    verdict_high = classify_longtime(high_diag, thresholds).kind
    verdict_tiny = classify_longtime(tiny_diag, thresholds).kind
    energy_low = low_diag.samples[-1].E
    energy_high = high_diag.samples[-1].E

    options = cfg.minimize_options(raise_on_cap=False, record_history=False)
    lower = minimize(plateau_seed(grid, rf, height=LOWER_LEVEL), c, rf, options.model_copy(update={'cap': LOWER_LEVEL}))
    upper = minimize(plateau_seed(grid, rf), c, rf, options)

    clauses = {
        'both_persist': verdict_low == VerdictKind.PERSIST and verdict_high == VerdictKind.PERSIST,
        'distinct_limits': abs(high.sup_norm - low.sup_norm) > LIMIT_GAP,
        'energy_order': energy_high < energy_low < 0.0,
        'tiny_extinct': verdict_tiny == VerdictKind.EXTINCT,
    }
    case = BistabilityCase(
        c=c,
        verdict_low=verdict_low,
        verdict_high=verdict_high,
        verdict_tiny=verdict_tiny,
        sup_low=low.sup_norm,
        sup_high=high.sup_norm,
        energy_low=energy_low,
        energy_high=energy_high,
        variational_lower=lower.energy.value,
        variational_upper=upper.energy.value,
        staircase=_has_shelf(high, LOWER_LEVEL) and _has_shelf(high, profile.upper_cap),
        clauses=clauses,
        profile_low=low,
        profile_high=high,
    )
    logger.info(
        'multistable case',
        extra={'c': c, 'sup_low': case.sup_low, 'sup_high': case.sup_high, 'energy_low': energy_low, 'energy_high': energy_high, 'clauses': clauses},
    )
    return case


def run_bistability_demo(cfg: ExperimentConfig, strict: bool = True) -> BistabilityReport:
    """Two stable levels of the quintic profile reached from two amplitudes, plus extinction of a tiny datum.

    Runs T=300 over c in {0, 0.2} unless the configuration sets T or c_list. Only the c=0 clauses
    are asserted; at c>0 the upper level may be transient in the moving frame.
    """
    updates: dict[str, object] = {}
    if 'T' not in cfg.model_fields_set:
        updates['T'] = DEMO_HORIZON
    if 'c_list' not in cfg.model_fields_set:
        updates['c_list'] = list(DEMO_SPEEDS)
    if updates:
        cfg = ExperimentConfig.model_validate({**cfg.model_dump(exclude_unset=True), **updates})
    report = BistabilityReport(cases=[run_bistability_case(cfg, c) for c in cfg.c_list])
    if strict:
        report.raise_for_failure()
    return report
