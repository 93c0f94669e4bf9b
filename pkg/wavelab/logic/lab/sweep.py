import math
import time
from concurrent.futures import ProcessPoolExecutor
from itertools import repeat
from typing import Optional

from wavelab.handlers.utils.observability import logger
from wavelab.logic.evolution import classify_longtime, evolve
from wavelab.logic.lab.experiment import build_problem, standard_datum
from wavelab.models.config import ExperimentConfig
from wavelab.models.evolution import VerdictKind
from wavelab.models.exceptions import NumericalError
from wavelab.models.lab import SweepResult, SweepRow

# Persist, then at most one Undecided band, then Extinct
_VERDICT_RANK = {VerdictKind.PERSIST: 0, VerdictKind.UNDECIDED: 1, VerdictKind.EXTINCT: 2}


def run_speed(cfg: ExperimentConfig, c: float) -> SweepRow:
    """Evolve the Gaussian datum at frame speed c and classify the outcome; numerical failures end up in the row."""
    start = time.perf_counter()
    try:
        rf, grid = build_problem(cfg)
        _, diagnostics = evolve(standard_datum(grid, cfg), c, rf, cfg.scheme_config())
        verdict = classify_longtime(diagnostics, cfg.thresholds())
    except NumericalError as exc:
        logger.error('sweep run failed', extra={'c': c, 'error': str(exc)})
        return SweepRow(c=c, verdict=VerdictKind.UNDECIDED, P_final=math.nan, E_final=math.nan, runtime=time.perf_counter() - start, error=str(exc))
    final = diagnostics.samples[-1]
    logger.info('sweep verdict', extra={'c': c, 'verdict': verdict.kind.value, 'P_final': final.P, 'sup': final.sup_norm})
    return SweepRow(c=c, verdict=verdict.kind, P_final=final.P, E_final=final.E, runtime=time.perf_counter() - start)


def _run_speeds(cfg: ExperimentConfig, speeds: list[float]) -> list[SweepRow]:
    if cfg.workers > 1 and len(speeds) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(run_speed, repeat(cfg), speeds))
    return [run_speed(cfg, c) for c in speeds]


def monotonicity_violations(rows: list[SweepRow]) -> list[str]:
    """Places where the verdict sequence, ordered by c, steps back towards persistence."""
    ranked = [row for row in rows if row.error is None]
    violations = []
    for earlier, later in zip(ranked, ranked[1:]):
        if _VERDICT_RANK[later.verdict] < _VERDICT_RANK[earlier.verdict]:
            violations.append(f'{earlier.verdict.value} at c={earlier.c:g} followed by {later.verdict.value} at c={later.c:g}')
    return violations


def _first_transition(rows: list[SweepRow]) -> Optional[tuple[float, float]]:
    ranked = [row for row in rows if row.error is None]
    for earlier, later in zip(ranked, ranked[1:]):
        if earlier.verdict == VerdictKind.PERSIST and later.verdict != VerdictKind.PERSIST:
            return earlier.c, later.c
    return None


def run_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Sweep c_list, then bisect the first Persist to non-Persist transition down to bisect_tol."""
    speeds = sorted(set(cfg.c_list))
    logger.info('sweep started', extra={'profile': cfg.profile, 'delta': cfg.delta, 'speeds': len(speeds), 'workers': cfg.workers})
    rows = _run_speeds(cfg, speeds)

    bracket = _first_transition(rows)
    if bracket is None:
        logger.info('no persistence boundary inside the speed list', extra={'first': speeds[0], 'last': speeds[-1]})
    else:
        lo, hi = bracket
        while hi - lo > cfg.bisect_tol:
            mid = 0.5 * (lo + hi)
            row = run_speed(cfg, mid)
            rows.append(row)
            if row.verdict == VerdictKind.PERSIST:
                lo = mid
            else:
                hi = mid
            logger.info('critical speed bracket', extra={'lo': lo, 'hi': hi})
        bracket = (lo, hi)

    rows.sort(key=lambda row: row.c)
    violations = monotonicity_violations(rows)
    for violation in violations:
        logger.warning('non-monotone verdicts', extra={'violation': violation})
    return SweepResult(
        rows=rows,
        estimated_critical_speed=None if bracket is None else 0.5 * (bracket[0] + bracket[1]),
        bracket=bracket,
        monotone=not violations,
        violations=violations,
    )
