from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from wavelab.handlers.utils.observability import logger
from wavelab.logic.grid import apply_transport_diffusion, check_weight_range
from wavelab.logic.reaction import NodalReaction, max_antiderivative, profile_antiderivative, profile_values
from wavelab.models.energy import WAVE_THRESHOLD, Classification, EnergyReport, MinimizeOptions, MinimizeResult
from wavelab.models.exceptions import BracketInvalidError, NotConvergedError
from wavelab.models.grid import Grid, NodalField
from wavelab.models.reaction import ReactionField

_EPS = float(np.finfo(float).eps)
_MAX_HALVINGS = 60
_LOG_EVERY = 5_000


class VariationalProblem:
    """Discrete E_c written in v = e^{cz/2} u.

    E = sum_edges (e^{-ch/4} v_{i+1} - e^{ch/4} v_i)² / (2h) - sum_i q_i G_i with trapezoid weights q_i, where
    G = (1 - a_i)(-delta v²/2) + a_i e^{cz} F_0(e^{-cz/2} v) and a_i is the patch fraction of node i.
    Its Euclidean gradient is -h (L_v v + g(v)), with L_v v = [v_{i+1} - 2cosh(ch/2) v_i + v_{i-1}] / h²
    and g = e^{cz/2} f(e^{-cz/2} v) on interior nodes.
    """

    def __init__(self, grid: Grid, c: float, rf: ReactionField) -> None:
        check_weight_range(grid, c)
        self.grid = grid
        self.c = c
        self.rf = rf
        self.h = grid.h
        shifted = grid.shifted
        self.half = np.exp(0.5 * c * shifted)
        self.inv_half = np.exp(-0.5 * c * shifted)
        self.reaction = NodalReaction(rf, grid)
        self.mixed = self.reaction.mixed
        self._fraction_in = self.reaction.fraction[self.mixed]
        self._exterior = rf.delta * (1.0 - self.reaction.fraction)
        self._half_in = self.half[self.mixed]
        self._inv_half_in = self.inv_half[self.mixed]
        self.quad = np.full(grid.n, self.h)
        self.quad[0] = self.quad[-1] = 0.5 * self.h
        self._left = np.exp(-0.25 * c * self.h)
        self._right = np.exp(0.25 * c * self.h)
        self._two_cosh = 2.0 * np.cosh(0.5 * c * self.h)

    def kinetic(self, v: np.ndarray) -> float:
        jump = self._left * v[1:] - self._right * v[:-1]
        return float(np.dot(jump, jump) / (2.0 * self.h))

    def potential(self, v: np.ndarray) -> float:
        density = -0.5 * self._exterior * v * v
        u_in = self._inv_half_in * v[self.mixed]
        density[self.mixed] += self._fraction_in * self._half_in * self._half_in * profile_antiderivative(self.rf.profile, u_in)
        return -float(np.dot(self.quad, density))

    def energy(self, v: np.ndarray) -> float:
        return self.kinetic(v) + self.potential(v)

    def gradient(self, v: np.ndarray) -> np.ndarray:
        """-(L_v v + g(v)) on interior nodes, zero at both ends."""
        reaction = -self._exterior * v
        reaction[self.mixed] += self._fraction_in * self._half_in * profile_values(self.rf.profile, self._inv_half_in * v[self.mixed])
        out = np.zeros_like(v)
        out[1:-1] = -((v[2:] - self._two_cosh * v[1:-1] + v[:-2]) / (self.h * self.h) + reaction[1:-1])
        return out

    def l2_norm(self, w: np.ndarray) -> float:
        return float(np.sqrt(np.dot(self.quad, w * w)))

    def report(self, v: np.ndarray, gradient: Optional[np.ndarray] = None) -> EnergyReport:
        kinetic = self.kinetic(v)
        potential = self.potential(v)
        gradient = self.gradient(v) if gradient is None else gradient
        return EnergyReport(value=kinetic + potential, kinetic=kinetic, potential=potential, gradient_l2c_norm=self.l2_norm(gradient))

    def settle_exterior(self, v: np.ndarray) -> np.ndarray:
        """Exact minimiser over the nodes fully outside the patch, patch values held fixed.

        There E_c is the quadratic with -v_{i-1} + (2cosh(ch/2) + delta h²) v_i - v_{i+1} = 0 as its normal
        equations. The solution stays in the box by the discrete maximum principle, so the energy never rises.
        """
        inside = np.flatnonzero(self.mixed)
        if inside.size == 0:
            return v
        out = v.copy()
        diagonal = self._two_cosh + self.rf.delta * self.h * self.h
        for lo, hi in ((1, int(inside[0])), (int(inside[-1]) + 1, self.grid.n - 1)):
            size = hi - lo
            if size <= 0:
                continue
            rhs = np.zeros(size)
            rhs[0] += out[lo - 1]
            rhs[-1] += out[hi]
            bands = np.vstack([np.full(size, -1.0), np.full(size, diagonal), np.full(size, -1.0)])
            out[lo:hi] = solve_banded((1, 1), bands, rhs)
        return out

    def nodewise_stationary(self, v: np.ndarray, projected: np.ndarray, tol: float) -> bool:
        """Max-norm of the projected step read back in u. L²_c alone does not see the region behind the patch."""
        u = v * self.inv_half
        return float(np.max(np.abs(projected * self.inv_half))) <= tol * max(1.0, float(np.max(u)))


def energy(u: NodalField, c: float, rf: ReactionField) -> EnergyReport:
    problem = VariationalProblem(u.grid, c, rf)
    return problem.report(problem.half * u.values)


def energy_gradient(u: NodalField, c: float, rf: ReactionField) -> NodalField:
    """Nodal -(u_zz + c u_z + f(z, u)), the L²_c-gradient of E_c; zero at the Dirichlet ends."""
    values = apply_transport_diffusion(u.values, u.grid.h, c) + NodalReaction(rf, u.grid).f(u.values)
    values[0] = values[-1] = 0.0
    return u.with_values(-values)


def truncate(u: NodalField, M: float) -> NodalField:
    return u.with_values(np.clip(u.values, 0.0, M))


def energy_lower_bound(grid: Grid, c: float, rf: ReactionField) -> float:
    """C_grid with E_c[u] >= -C_grid for every nodal u with values in [0, M]."""
    problem = VariationalProblem(grid, c, rf)
    weight = problem.quad * problem.reaction.fraction * problem.half**2
    return max_antiderivative(rf.profile) * float(np.sum(weight))


def plateau_seed(grid: Grid, rf: ReactionField, height: Optional[float] = None, ramp: float = 1.0) -> NodalField:
    """Constant ``height`` on the patch with linear ramps of width ``ramp`` down to zero."""
    height = rf.profile.upper_cap if height is None else height
    z = grid.nodes
    distance = np.maximum(np.maximum(rf.patch[0] - z, z - rf.patch[1]), 0.0)
    values = height * np.clip(1.0 - distance / ramp, 0.0, 1.0)
    if not rf.has_patch:
        values = np.zeros(grid.n)
    values[0] = values[-1] = 0.0
    return NodalField(grid=grid, values=values)


def classify(u: NodalField) -> Classification:
    return Classification.WAVE if u.sup_norm > WAVE_THRESHOLD else Classification.TRIVIAL


def minimize(u0: NodalField, c: float, rf: ReactionField, opts: Optional[MinimizeOptions] = None) -> MinimizeResult:
    """Projected Barzilai-Borwein descent of E_c over the box [0, cap], Armijo backtracking as fallback."""
    opts = opts or MinimizeOptions()
    problem = VariationalProblem(u0.grid, c, rf)
    h = problem.h
    cap = opts.cap if opts.cap is not None else rf.profile.upper_cap
    upper = cap * problem.half
    upper[0] = upper[-1] = 0.0

    v = np.clip(problem.half * u0.values, 0.0, upper)
    value = problem.energy(v)
    gradient = problem.gradient(v)
    alpha = 0.25 * h * h
    alpha_max = 1e12
    history = [value] if opts.record_history else []
    converged = stopped_on_negative = False
    tolerance = opts.tol
    iterations = 0

    while iterations < opts.max_iter:
        tolerance = opts.tol * max(1.0, problem.l2_norm(v))
        projected = np.clip(v - gradient, 0.0, upper) - v
        if problem.l2_norm(projected) <= tolerance:
            if not problem.nodewise_stationary(v, projected, opts.tol):
                v = np.clip(problem.settle_exterior(v), 0.0, upper)
                value, gradient = problem.energy(v), problem.gradient(v)
                projected = np.clip(v - gradient, 0.0, upper) - v
                if opts.record_history:
                    history[-1] = value
            if problem.l2_norm(projected) <= tolerance and problem.nodewise_stationary(v, projected, opts.tol):
                converged = True
                break

        step = alpha
        for _ in range(_MAX_HALVINGS):
            trial = np.clip(v - step * gradient, 0.0, upper)
            move = trial - v
            trial_value = problem.energy(trial)
            if trial_value <= value + opts.armijo * h * float(np.dot(gradient, move)) + 4.0 * _EPS * abs(value):
                break
            step *= 0.5
        else:
            logger.warning('line search stagnated', extra={'c': c, 'iteration': iterations, 'energy': value})
            break

        trial_gradient = problem.gradient(trial)
        curvature = float(np.dot(move, trial_gradient - gradient))
        alpha = float(np.dot(move, move)) / curvature if curvature > 0 else 10.0 * step
        alpha = min(max(alpha, 1e-12 * h * h), alpha_max)
        v, value, gradient = trial, trial_value, trial_gradient
        iterations += 1
        if opts.record_history:
            history.append(value)
        if iterations % _LOG_EVERY == 0:
            logger.debug('descent progress', extra={'c': c, 'iteration': iterations, 'energy': value})
        if opts.stop_on_negative_energy and value < 0 and float(np.max(v * problem.inv_half)) > WAVE_THRESHOLD:
            stopped_on_negative = True
            break

    if not converged:
        v = np.clip(problem.settle_exterior(v), 0.0, upper)
        value, gradient = problem.energy(v), problem.gradient(v)
        if opts.record_history:
            history[-1] = value
    minimizer = NodalField(grid=u0.grid, values=np.clip(v * problem.inv_half, 0.0, cap))
    projected = np.clip(v - gradient, 0.0, upper) - v
    result = MinimizeResult(
        minimizer=minimizer,
        energy=problem.report(v, projected),
        iterations=iterations,
        converged=converged,
        classification=classify(minimizer),
        tolerance=tolerance,
        stopped_on_negative=stopped_on_negative,
        energy_history=history,
    )
    logger.debug(
        'minimize finished',
        extra={'c': c, 'iterations': iterations, 'converged': converged, 'energy': result.energy.value, 'classification': result.classification.value},
    )
    if not converged and not stopped_on_negative and opts.raise_on_cap:
        raise NotConvergedError(f'descent stopped after {iterations} iterations at c={c}', result=result)
    return result


def _has_negative_minimum(seed: NodalField, c: float, rf: ReactionField, opts: MinimizeOptions) -> tuple[bool, MinimizeResult]:
    result = minimize(seed, c, rf, opts.model_copy(update={'stop_on_negative_energy': True, 'raise_on_cap': False, 'record_history': False}))
    negative = result.energy.value < 0 and result.classification == Classification.WAVE
    if not negative and not result.converged:
        logger.warning('no sign certificate before the iteration cap, counted as non-negative', extra={'c': c, 'energy': result.energy.value})
    return negative, result


def min_energy_sign_bisect(
    rf: ReactionField,
    c_lo: float,
    c_hi: float,
    tol: float,
    grid: Grid,
    opts: Optional[MinimizeOptions] = None,
    warm_start: bool = False,
) -> float:
    """Bisect the speed at which the minimised energy from the standard plateau seed stops being negative."""
    opts = opts or MinimizeOptions(tol=1e-6)
    seed = plateau_seed(grid, rf)
    lo_negative, lo_result = _has_negative_minimum(seed, c_lo, rf, opts)
    if c_lo == c_hi:
        if lo_negative:
            return c_lo
        raise BracketInvalidError(f'degenerate bracket at c={c_lo} has non-negative minimal energy')
    hi_negative, _ = _has_negative_minimum(seed, c_hi, rf, opts)
    if not lo_negative or hi_negative:
        raise BracketInvalidError(f'need negative minimal energy at c_lo={c_lo} and none at c_hi={c_hi} (got {lo_negative}, {hi_negative})')

    lo, hi = c_lo, c_hi
    start = lo_result.minimizer
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        negative, result = _has_negative_minimum(start if warm_start else seed, mid, rf, opts)
        logger.info('energy sign bracket', extra={'lo': lo, 'hi': hi, 'mid': mid, 'negative': negative, 'energy': result.energy.value})
        if negative:
            lo = mid
            start = result.minimizer
        else:
            hi = mid
    return 0.5 * (lo + hi)
