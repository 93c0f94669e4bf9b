import numpy as np
import pytest
from pydantic import ValidationError

from tests.utils import build_field, random_bumps
from wavelab.logic.grid import (
    apply_transport_diffusion,
    check_weight_range,
    diff_central,
    from_v,
    make_grid,
    to_v,
    transport_diffusion_bands,
    weighted_gradient_sq,
    weighted_l2_sq,
    zero_field,
)
from wavelab.logic.reaction import kpp_profile
from wavelab.models.exceptions import ConfigError, WeightOverflowError
from wavelab.models.grid import Grid, NodalField


def test_make_grid_puts_nodes_on_patch_edges():
    # Given: the default domain and patch
    rf = build_field(kpp_profile(), width=30.0)
    grid = make_grid(300.0, 0.1, rf)
    assert grid.n == 3001
    assert grid.origin == 0.0
    nodes = grid.nodes
    assert -15.0 in nodes
    assert 15.0 in nodes


def test_make_grid_rejects_incommensurate_spacing():
    # Given: L not a multiple of h
    with pytest.raises(ConfigError):
        make_grid(10.0, 0.3)


def test_make_grid_rejects_edges_between_nodes():
    # Given: a patch of width 30.05 on a 0.1 grid
    rf = build_field(kpp_profile(), width=30.05)
    with pytest.raises(ConfigError):
        make_grid(300.0, 0.1, rf)


def test_grid_needs_ordered_bounds():
    # Given: z_max below z_min
    with pytest.raises(ValidationError):
        Grid(z_min=1.0, z_max=0.0, n=10)


def test_field_must_match_grid():
    # Given: a field with the wrong number of values
    grid = make_grid(10.0, 1.0)
    with pytest.raises(ValidationError):
        NodalField(grid=grid, values=np.zeros(5))
    with pytest.raises(ValidationError):
        NodalField(grid=grid, values=np.full(grid.n, np.nan))


def test_weight_transform_round_trip():
    # Given: a field supported in [-40, 40] on [-150, 150] at c = 2
    rng = np.random.default_rng(5)
    grid = make_grid(300.0, 0.1)
    values = np.where(np.abs(grid.nodes) <= 40.0, rng.uniform(0.0, 1.0, grid.n), 0.0)
    u = NodalField(grid=grid, values=values)
    back = from_v(to_v(u, 2.0), 2.0)
    assert np.max(np.abs(back.values - values)) <= 1e-12


def test_zero_speed_transform_is_identity():
    # Given: c = 0
    grid = make_grid(20.0, 0.5)
    u = NodalField(grid=grid, values=np.linspace(0.0, 1.0, grid.n))
    np.testing.assert_array_equal(to_v(u, 0.0).values, u.values)


def test_weighted_l2_of_zero_and_plateau():
    # Given: zero and an indicator of [0, 1] at c = 0
    grid = make_grid(20.0, 0.05)
    assert weighted_l2_sq(zero_field(grid), 1.0) == 0.0
    plateau = NodalField(grid=grid, values=((grid.nodes >= 0.0) & (grid.nodes <= 1.0)).astype(float))
    assert abs(weighted_l2_sq(plateau, 0.0) - 1.0) <= 2.0 * grid.h


def test_weighted_l2_matches_direct_quadrature():
    # Given: a smooth bump at c = 0.5 on a short domain
    grid = make_grid(20.0, 0.05)
    u = NodalField(grid=grid, values=np.exp(-grid.nodes**2))
    direct = float(np.sum(np.exp(0.5 * grid.nodes) * u.values**2) * grid.h)
    assert weighted_l2_sq(u, 0.5) == pytest.approx(direct, rel=1e-10)


def test_weighted_poincare_inequality():
    # Given: random compactly supported fields at several speeds
    rng = np.random.default_rng(17)
    grid = make_grid(40.0, 0.1)
    for c in (0.0, 0.5, 1.0, 2.0):
        for _ in range(25):
            u = random_bumps(grid, rng)
            l2 = weighted_l2_sq(u, c)
            assert 0.25 * c * c * l2 <= weighted_gradient_sq(u, c) + 1e-8 * max(1.0, l2)


def test_diff_central_is_exact_on_linear_functions():
    # Given: u = 3z + 2
    grid = Grid(z_min=-5.0, z_max=5.0, n=101)
    u = NodalField(grid=grid, values=3.0 * grid.nodes + 2.0)
    np.testing.assert_allclose(diff_central(u).values, 3.0, atol=1e-10)
    constant = NodalField(grid=grid, values=np.full(grid.n, 4.0))
    np.testing.assert_allclose(diff_central(constant).values, 0.0, atol=1e-12)


def test_diff_central_is_second_order():
    # Given: sin on [0, 2] with h = 0.1 and 0.05
    errors = []
    for n in (21, 41):
        grid = Grid(z_min=0.0, z_max=2.0, n=n)
        u = NodalField(grid=grid, values=np.sin(grid.nodes))
        errors.append(float(np.max(np.abs(diff_central(u).values - np.cos(grid.nodes)))))
    assert 3.5 <= errors[0] / errors[1] <= 4.5


def test_transport_diffusion_bands_agree_with_stencil():
    # Given: random values with zero ends
    rng = np.random.default_rng(2)
    h, c = 0.2, 1.3
    values = rng.uniform(0.0, 1.0, 50)
    values[0] = values[-1] = 0.0
    lower, main, upper = transport_diffusion_bands(values.size - 2, h, c)
    interior = values[1:-1]
    banded = main * interior
    banded[:-1] += upper * interior[1:]
    banded[1:] += lower * interior[:-1]
    np.testing.assert_allclose(apply_transport_diffusion(values, h, c)[1:-1], banded, rtol=1e-12, atol=1e-12)


def test_transport_diffusion_annihilates_moving_frame_constants():
    # Given: u = 1 and u = e^{-cz}, both solutions of u'' + c u' = 0
    h, c = 0.1, 0.8
    z = np.arange(-2.0, 2.0 + h / 2, h)
    for values in (np.ones_like(z), np.exp(-c * z)):
        assert np.max(np.abs(apply_transport_diffusion(values, h, c)[1:-1])) <= 1e-9


def test_weight_range_guard():
    # Given: c*|z|/2 = 375 on [-150, 150] at c = 5
    grid = make_grid(300.0, 0.1)
    with pytest.raises(WeightOverflowError):
        check_weight_range(grid, 5.0)
    check_weight_range(grid, 2.0)
