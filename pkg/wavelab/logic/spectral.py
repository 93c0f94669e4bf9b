import math
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, eigvalsh_tridiagonal, solveh_banded
from scipy.optimize import brentq

from wavelab.handlers.utils.observability import logger
from wavelab.logic.grid import from_v
from wavelab.logic.reaction import NodalReaction
from wavelab.models.exceptions import IterationFailure, NoBoundStateError
from wavelab.models.grid import Grid, NodalField
from wavelab.models.reaction import ReactionField
from wavelab.models.spectral import EigenResult

EIGEN_TOL = 1e-13
RESIDUAL_TOL = 1e-10
MAX_INVERSE_ITERATIONS = 50
# sweeps before the residual test; the far tails of phi need them to be accurate relative to their size
MIN_INVERSE_ITERATIONS = 6
# continuum gap below which a square-well bound state is reported as absent
CONTINUUM_GAP = 1e-12


def _tridiagonal(potential: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of -D² + V on interior nodes (Dirichlet ends)."""
    inv_h2 = 1.0 / (h * h)
    diagonal = 2.0 * inv_h2 + potential[1:-1]
    off = np.full(diagonal.size - 1, -inv_h2)
    return diagonal, off


def _apply(diagonal: np.ndarray, off: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = diagonal * x
    out[:-1] += off * x[1:]
    out[1:] += off * x[:-1]
    return out


def ground_state_of_potential(potential: np.ndarray, grid: Grid) -> EigenResult:
    """Smallest eigenpair of -d²/dz² + V: Sturm bisection for the value, shifted inverse iteration for the vector."""
    diagonal, off = _tridiagonal(potential, grid.h)
    lambda0 = float(eigvalsh_tridiagonal(diagonal, off, select='i', select_range=(0, 0), lapack_driver='stebz', tol=EIGEN_TOL)[0])

    shift = lambda0 - 1e-6 * max(1.0, abs(lambda0))
    bands = np.zeros((2, diagonal.size))
    bands[0, 1:] = off
    bands[1, :] = diagonal - shift
    x = np.ones(diagonal.size)
    residual = math.inf
    for sweep in range(1, MAX_INVERSE_ITERATIONS + 1):
        try:
            x = solveh_banded(bands, x)
        except LinAlgError as exc:
            raise IterationFailure(f'shifted operator not positive definite: {exc}', shift) from exc
        x /= float(np.max(np.abs(x)))
        residual = float(np.max(np.abs(_apply(diagonal, off, x) - lambda0 * x)))
        if residual <= RESIDUAL_TOL and sweep >= MIN_INVERSE_ITERATIONS:
            break
    else:
        raise IterationFailure(f'inverse iteration stagnated at residual {residual:.3e}', shift)

    eigenfunction = np.zeros(grid.n)
    eigenfunction[1:-1] = np.abs(x)
    logger.debug('ground state', extra={'lambda0': lambda0, 'residual': residual, 'n': grid.n})
    return EigenResult(lambda0=lambda0, eigenfunction=NodalField(grid=grid, values=eigenfunction), residual=residual)


def ground_state(rf: ReactionField, grid: Grid) -> EigenResult:
    """Principal eigenpair of -d²/dz² - f_u(z, 0), potentials averaged over each node's cell."""
    return ground_state_of_potential(-NodalReaction(rf, grid).linear_potential(), grid)


def rayleigh_quotient(phi: NodalField, rf: ReactionField, c: float = 0.0) -> float:
    """Discrete form of inf (phi'² + (c²/4 - f_u(z,0)) phi²) / phi² evaluated at phi."""
    h = phi.grid.h
    values = phi.values
    potential = c * c / 4.0 - NodalReaction(rf, phi.grid).linear_potential()
    slope = np.diff(values) / h
    numerator = h * float(np.dot(slope, slope)) + h * float(np.dot(potential[1:-1], values[1:-1] ** 2))
    return numerator / (h * float(np.dot(values[1:-1], values[1:-1])))


def moving_frame_eigenfunction(eig: EigenResult, c: float) -> NodalField:
    """phi_c = e^{-cz/2} phi, max-normalised; the principal eigenfunction of the moving-frame linearisation."""
    phi_c = from_v(eig.eigenfunction, c)
    return phi_c.with_values(phi_c.values / phi_c.sup_norm)


def square_well_oracle(a: float, delta: float, l: float) -> float:  # noqa: E741
    """Even ground state of -phi'' + V phi = lambda phi, V = -a on a width-l well and +delta outside."""
    if l <= 0 or a <= 0 or delta <= 0:
        raise NoBoundStateError(f'no bound state for a={a}, delta={delta}, l={l}')

    def matching(lam: float) -> float:
        k = math.sqrt(max(a + lam, 0.0))
        kappa = math.sqrt(max(delta - lam, 0.0))
        return k * math.sin(0.5 * k * l) - kappa * math.cos(0.5 * k * l)

    lower = -a
    upper = min(delta, -a + (math.pi / l) ** 2)
    if matching(upper) <= 0.0:
        raise NoBoundStateError(f'matching condition does not change sign on ({lower}, {upper})')
    lam = brentq(matching, lower, upper, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    if delta - lam < CONTINUUM_GAP:
        raise NoBoundStateError(f'bound state merges with the continuum (delta - lambda = {delta - lam:.3e})')
    return float(lam)


def lambda_c(lambda0: float, c: float) -> float:
    return lambda0 + 0.25 * c * c


def c_lin(lambda0: float) -> Optional[float]:
    return 2.0 * math.sqrt(-lambda0) if lambda0 < 0 else None


def c_upper_kpp(rf: ReactionField, grid: Grid) -> float:
    """2 sqrt(-lambda0) for the KPP majorant potential, 0 when that eigenvalue is non-negative."""
    result = ground_state_of_potential(-NodalReaction(rf, grid).majorant_potential(), grid)
    speed = c_lin(result.lambda0)
    logger.debug('majorant speed bound', extra={'lambda0': result.lambda0, 'c_upper': speed})
    return 0.0 if speed is None else speed
