from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from wavelab.models.exceptions import ConfigError, WeightOverflowError
from wavelab.models.grid import Grid, NodalField, WeightedNorms
from wavelab.models.reaction import ReactionField

# largest admissible c*|z|/2; keeps e^{cz} and v² inside double range
SAFE_EXPONENT = 300.0


def make_grid(L: float, h: float, rf: Optional[ReactionField] = None) -> Grid:
    """Grid of length L and spacing h centred on the patch, with a node on each patch edge."""
    intervals = int(round(L / h))
    if intervals < 2 or abs(intervals * h - L) > 1e-9 * L:
        raise ConfigError(f'L={L} is not an integer multiple of h={h}')
    center = rf.center if rf is not None else 0.0
    edges: tuple[float, ...] = ()
    if rf is not None and rf.has_patch:
        edges = rf.patch
        for edge in edges:
            offset = (edge - (center - 0.5 * L)) / h
            if abs(offset - round(offset)) > 1e-6:
                raise ConfigError(f'patch edge {edge} does not fall on a node of spacing {h}')
    return Grid(z_min=center - 0.5 * L, z_max=center + 0.5 * L, n=intervals + 1, origin=center, edges=edges)


def check_weight_range(grid: Grid, c: float) -> None:
    exponent = 0.5 * c * float(np.max(np.abs(grid.shifted)))
    if exponent > SAFE_EXPONENT:
        raise WeightOverflowError(f'c*|z|/2 = {exponent:.1f} exceeds {SAFE_EXPONENT}; shrink the domain or the speed')


def half_weight(grid: Grid, c: float) -> np.ndarray:
    """e^{c z / 2} on the shifted nodes."""
    check_weight_range(grid, c)
    return np.exp(0.5 * c * grid.shifted)


def to_v(u: NodalField, c: float) -> NodalField:
    return u.with_values(half_weight(u.grid, c) * u.values)


def from_v(v: NodalField, c: float) -> NodalField:
    check_weight_range(v.grid, c)
    return v.with_values(np.exp(-0.5 * c * v.grid.shifted) * v.values)


def diff_central(u: NodalField) -> NodalField:
    """Second-order central differences, one-sided second order at both ends."""
    return u.with_values(np.gradient(u.values, u.grid.h, edge_order=2))


def integrate(u: NodalField) -> float:
    return float(trapezoid(u.values, dx=u.grid.h))


def weighted_l2_sq(u: NodalField, c: float) -> float:
    v = to_v(u, c).values
    return float(trapezoid(v * v, dx=u.grid.h))


def weighted_gradient_sq(u: NodalField, c: float) -> float:
    """Quadrature of e^{cz} u_z², evaluated as (v_z - c v / 2)²."""
    v = to_v(u, c)
    slope = diff_central(v).values - 0.5 * c * v.values
    return float(trapezoid(slope * slope, dx=u.grid.h))


def weighted_h1_sq(u: NodalField, c: float) -> float:
    return weighted_l2_sq(u, c) + weighted_gradient_sq(u, c)


def weighted_inner(u: NodalField, w: NodalField, c: float) -> float:
    return float(trapezoid(to_v(u, c).values * to_v(w, c).values, dx=u.grid.h))


def norms(u: NodalField, c: float) -> WeightedNorms:
    l2_sq = weighted_l2_sq(u, c)
    return WeightedNorms(c=c, l2_sq=l2_sq, h1_sq=l2_sq + weighted_gradient_sq(u, c))


def l2c_distance(a: NodalField, b: NodalField, c: float) -> float:
    return float(np.sqrt(weighted_l2_sq(a.with_values(a.values - b.values), c)))


def h1c_distance(a: NodalField, b: NodalField, c: float) -> float:
    return float(np.sqrt(weighted_h1_sq(a.with_values(a.values - b.values), c)))


def zero_field(grid: Grid) -> NodalField:
    return NodalField(grid=grid, values=np.zeros(grid.n))


def transport_diffusion_bands(n_interior: int, h: float, c: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sub, main and super diagonals of the fitted operator A ≈ d²/dz² + c d/dz on interior nodes.

    A u_i = [e^{ch/2}(u_{i+1} - u_i) - e^{-ch/2}(u_i - u_{i-1})] / h², the flux form of e^{-cz}(e^{cz} u_z)_z.
    """
    inv_h2 = 1.0 / (h * h)
    upper = np.full(n_interior - 1, np.exp(0.5 * c * h) * inv_h2)
    lower = np.full(n_interior - 1, np.exp(-0.5 * c * h) * inv_h2)
    main = np.full(n_interior, -2.0 * np.cosh(0.5 * c * h) * inv_h2)
    return lower, main, upper


def apply_transport_diffusion(values: np.ndarray, h: float, c: float) -> np.ndarray:
    """A u on interior nodes with Dirichlet-zero ends; the returned array has zero end entries."""
    out = np.zeros_like(values)
    forward = np.exp(0.5 * c * h) * (values[2:] - values[1:-1])
    backward = np.exp(-0.5 * c * h) * (values[1:-1] - values[:-2])
    out[1:-1] = (forward - backward) / (h * h)
    return out
