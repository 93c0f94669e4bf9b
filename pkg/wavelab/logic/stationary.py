import math
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from wavelab.handlers.utils.observability import logger
from wavelab.logic.energy import energy
from wavelab.logic.grid import apply_transport_diffusion, l2c_distance, transport_diffusion_bands, weighted_l2_sq
from wavelab.logic.reaction import NodalReaction
from wavelab.models.energy import WAVE_THRESHOLD
from wavelab.models.exceptions import NegativeSolutionError, NewtonDivergedError, NumericalError
from wavelab.models.grid import NodalField
from wavelab.models.reaction import ReactionField
from wavelab.models.stationary import DecayRates, DecayReport, NewtonOptions, NewtonResult, WaveBranch, WaveEntry

FOLD_STEP = 1e-4
DECAY_SLACK = 1e-6
# absolute floor relative to sup u, below which exterior values are treated as round-off
DECAY_FLOOR = 1e-12
# relative L²_c change between consecutive branch profiles reported as a jump
BRANCH_JUMP = 0.5


def decay_rates(c: float, delta: float) -> DecayRates:
    """Roots of lambda² + lambda c = delta."""
    root = math.sqrt(c * c + 4.0 * delta)
    plus = 0.5 * (-c + root)
    minus = -0.5 * (c + root)
    return DecayRates(lambda_plus=plus, lambda_minus=minus)


def discrete_decay_rates(c: float, delta: float, h: float) -> DecayRates:
    """Exterior rates of the fitted finite-difference operator; they tend to decay_rates as h -> 0."""
    kappa = math.acosh(math.cosh(0.5 * c * h) + 0.5 * delta * h * h) / h
    return DecayRates(lambda_plus=-0.5 * c + kappa, lambda_minus=-0.5 * c - kappa)


def stationary_residual(values: np.ndarray, c: float, reaction: NodalReaction) -> np.ndarray:
    """A u + f(z, u) on interior nodes, zero at the Dirichlet ends."""
    residual = apply_transport_diffusion(values, reaction.grid.h, c) + reaction.f(values)
    residual[0] = residual[-1] = 0.0
    return residual


def _newton_direction(values: np.ndarray, residual: np.ndarray, c: float, reaction: NodalReaction) -> np.ndarray:
    lower, main, upper = transport_diffusion_bands(values.size - 2, reaction.grid.h, c)
    bands = np.zeros((3, values.size - 2))
    bands[0, 1:] = upper
    bands[1, :] = main + reaction.df_du(values)[1:-1]
    bands[2, :-1] = lower
    step = np.zeros_like(values)
    try:
        step[1:-1] = solve_banded((1, 1), bands, -residual[1:-1])
    except (LinAlgError, ValueError) as exc:
        raise NewtonDivergedError(f'singular Jacobian at c={c}: {exc}') from exc
    return step


def newton_trace(u_init: NodalField, c: float, rf: ReactionField, opts: Optional[NewtonOptions] = None) -> NewtonResult:
    """Damped Newton on the discrete travelling-wave equation, keeping the residual history."""
    opts = opts or NewtonOptions()
    reaction = NodalReaction(rf, u_init.grid)
    values = np.array(u_init.values, dtype=float)
    values[0] = values[-1] = 0.0
    residual = stationary_residual(values, c, reaction)
    norm = float(np.max(np.abs(residual)))
    history = [norm]

    iterations = 0
    while norm > opts.tol:
        if iterations >= opts.max_iter:
            raise NewtonDivergedError(f'no convergence in {opts.max_iter} iterations at c={c}, residual {norm:.3e}')
        step = _newton_direction(values, residual, c, reaction)
        damping = 1.0
        for _ in range(opts.max_halvings + 1):
            trial = values + damping * step
            trial_residual = stationary_residual(trial, c, reaction)
            trial_norm = float(np.max(np.abs(trial_residual)))
            if np.isfinite(trial_norm) and trial_norm < norm:
                break
            damping *= 0.5
        else:
            raise NewtonDivergedError(f'step halving exhausted at c={c}, residual {norm:.3e}')
        values, residual, norm = trial, trial_residual, trial_norm
        history.append(norm)
        iterations += 1

    # one more full step usually lands at round-off level
    if iterations > 0:
        polished = values + _newton_direction(values, residual, c, reaction)
        polished_norm = float(np.max(np.abs(stationary_residual(polished, c, reaction))))
        if polished_norm < norm:
            values, norm = polished, polished_norm
            history.append(norm)
            iterations += 1

    if float(np.min(values)) < -opts.negative_tol:
        raise NegativeSolutionError(f'converged profile dips to {float(np.min(values)):.3e} at c={c}')
    logger.debug('newton converged', extra={'c': c, 'iterations': iterations, 'residual': norm})
    return NewtonResult(profile=u_init.with_values(values), residuals=history, iterations=iterations)


def newton_solve(u_init: NodalField, c: float, rf: ReactionField, opts: Optional[NewtonOptions] = None) -> NodalField:
    return newton_trace(u_init, c, rf, opts).profile


def verify_decay(u: NodalField, c: float, rf: ReactionField) -> DecayReport:
    """Compare the exterior of u with exponentials anchored at the patch edges."""
    if not rf.has_patch or u.sup_norm == 0.0:
        return DecayReport(left_ok=True, right_ok=True, worst_margin=0.0)
    rates = discrete_decay_rates(c, rf.delta, u.grid.h)
    z = u.grid.nodes
    values = u.values
    floor = DECAY_FLOOR * u.sup_norm
    left_edge = int(np.argmin(np.abs(z - rf.patch[0])))
    right_edge = int(np.argmin(np.abs(z - rf.patch[1])))

    left = slice(0, left_edge)
    left_bound = values[left_edge] * np.exp(rates.lambda_plus * (z[left] - z[left_edge])) * (1.0 + DECAY_SLACK) + floor
    right = slice(right_edge + 1, u.grid.n)
    right_bound = values[right_edge] * np.exp(rates.lambda_minus * (z[right] - z[right_edge])) * (1.0 + DECAY_SLACK) + floor

    left_excess = values[left] - left_bound
    right_excess = values[right] - right_bound
    excess = np.concatenate([left_excess, right_excess])
    positions = np.concatenate([z[left], z[right]])
    worst = int(np.argmax(excess)) if excess.size else 0
    worst_margin = float(excess[worst]) if excess.size else 0.0
    report = DecayReport(
        left_ok=bool(np.all(left_excess <= 0.0)),
        right_ok=bool(np.all(right_excess <= 0.0)),
        worst_margin=worst_margin,
        violation_z=float(positions[worst]) if worst_margin > 0.0 else None,
    )
    if not report.ok:
        logger.warning('exterior decay violated', extra={'c': c, 'z': report.violation_z, 'margin': worst_margin})
    return report


def _solve_branch_point(previous: NodalField, c: float, rf: ReactionField, opts: NewtonOptions) -> Optional[NewtonResult]:
    try:
        result = newton_trace(previous, c, rf, opts)
    except NumericalError as exc:
        logger.debug('branch step failed', extra={'c': c, 'reason': str(exc)})
        return None
    if result.profile.sup_norm <= WAVE_THRESHOLD:
        return None
    return result


def _entry(result: NewtonResult, c: float, rf: ReactionField) -> WaveEntry:
    return WaveEntry(
        c=c,
        profile=result.profile,
        residual=result.residual,
        energy=energy(result.profile, c, rf).value,
        decay_ok=verify_decay(result.profile, c, rf).ok,
    )


def continue_in_c(
    seed: NodalField,
    c_start: float,
    c_step: float,
    c_max: float,
    rf: ReactionField,
    opts: Optional[NewtonOptions] = None,
) -> WaveBranch:
    """March c upward from c_start with warm-started Newton; the fold is declared when the step falls below 1e-4."""
    opts = opts or NewtonOptions()
    first = newton_trace(seed, c_start, rf, opts)
    if first.profile.sup_norm <= WAVE_THRESHOLD:
        logger.info('no nontrivial wave at the starting speed', extra={'c': c_start})
        return WaveBranch()

    entries = [_entry(first, c_start, rf)]
    c, step, fold = c_start, c_step, None
    previous = first.profile
    while c < c_max:
        target = min(c + step, c_max)
        result = _solve_branch_point(previous, target, rf, opts)
        if result is None:
            step *= 0.5
            if step < FOLD_STEP:
                fold = c
                logger.info('branch fold detected', extra={'c': c, 'entries': len(entries)})
                break
            continue
        change = l2c_distance(result.profile, previous, target) / max(math.sqrt(weighted_l2_sq(previous, target)), 1e-300)
        if change > BRANCH_JUMP:
            logger.warning('branch jump between consecutive speeds', extra={'from_c': c, 'to_c': target, 'relative_change': change})
        entries.append(_entry(result, target, rf))
        previous = result.profile
        c = target
        step = min(2.0 * step, c_step)
    return WaveBranch(entries=entries, fold_estimate=fold)
