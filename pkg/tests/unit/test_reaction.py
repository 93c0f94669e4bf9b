import numpy as np
import pytest
from pydantic import ValidationError
from scipy.integrate import quad

from tests.utils import build_field, build_grid
from wavelab.logic import reaction
from wavelab.logic.reaction import (
    NodalReaction,
    bistable_profile,
    custom_profile,
    eval_df_du,
    eval_f,
    eval_F,
    kpp_majorant_slope,
    kpp_profile,
    linearization_at_zero,
    lipschitz_estimate,
    majorant_slope_value,
    monostable_profile,
    multistable_profile,
    parse_profile,
    patch_fraction,
    positive_mass,
)
from wavelab.models.exceptions import ConfigError, MaximizationFailure
from wavelab.models.reaction import ProfileKind, ReactionProfile


def test_zero_density_has_zero_reaction():
    # Given: every catalog profile with a patch of width 30
    for profile in (kpp_profile(), monostable_profile(), bistable_profile(), multistable_profile()):
        rf = build_field(profile, width=30.0)
        assert eval_f(rf, 0.0, 0.0) == 0.0
        assert eval_f(rf, 100.0, 0.0) == 0.0


def test_exterior_is_linear_decay():
    # Given: a KPP patch (-15, 15) with delta = 1
    rf = build_field(kpp_profile(), width=30.0, delta=1.0)
    assert eval_f(rf, 20.0, 0.5) == -0.5
    assert eval_F(rf, 20.0, 1.0) == -0.5
    assert eval_df_du(rf, 20.0, 0.7) == -1.0


def test_exterior_exactness_on_many_points():
    # Given: random exterior points and densities
    rng = np.random.default_rng(7)
    rf = build_field(bistable_profile(), width=30.0, delta=2.5)
    z = np.concatenate([rng.uniform(-100.0, -15.001, 200), rng.uniform(15.001, 100.0, 200)])
    u = rng.uniform(0.0, 1.0, z.size)
    np.testing.assert_array_equal(eval_f(rf, z, u) + rf.delta * u, 0.0)


def test_patch_values_follow_the_profile():
    # Given: a KPP and a bistable patch
    kpp = build_field(kpp_profile(), width=30.0)
    bistable = build_field(bistable_profile(0.2), width=30.0)
    assert eval_f(kpp, 0.0, 0.5) == pytest.approx(0.25)
    assert eval_F(kpp, 0.0, 1.0) == pytest.approx(1.0 / 6.0)
    assert eval_f(bistable, 0.0, 0.2) == pytest.approx(0.0, abs=1e-15)
    assert eval_df_du(kpp, 0.0, 0.0) == pytest.approx(1.0)
    assert eval_df_du(bistable, 0.0, 0.0) == pytest.approx(-0.2)


def test_patch_is_closed():
    # Given: the patch edges themselves
    rf = build_field(kpp_profile(), width=30.0)
    assert eval_f(rf, -15.0, 0.5) == pytest.approx(0.25)
    assert eval_f(rf, 15.0, 0.5) == pytest.approx(0.25)


def test_antiderivative_matches_reaction():
    # Given: random samples away from u = 0, where the extension by zero has a kink
    rng = np.random.default_rng(11)
    eps = 1e-6
    for profile in (kpp_profile(), bistable_profile(), multistable_profile()):
        rf = build_field(profile, width=30.0, delta=0.7)
        z = rng.uniform(-30.0, 30.0, 300)
        u = rng.uniform(1e-3, profile.upper_cap, 300)
        slope = (np.asarray(eval_F(rf, z, u + eps)) - np.asarray(eval_F(rf, z, u - eps))) / (2.0 * eps)
        assert np.all(np.abs(slope - np.asarray(eval_f(rf, z, u))) <= 1e-6 * (1.0 + u * u))


def test_antiderivative_against_quadrature():
    # Given: the bistable profile integrated numerically
    rf = build_field(bistable_profile(0.2), width=30.0)
    expected, _ = quad(lambda s: float(eval_f(rf, 0.0, s)), 0.0, 0.8)
    assert eval_F(rf, 0.0, 0.8) == pytest.approx(expected, rel=1e-12)


def test_linearization_at_zero():
    # Given: KPP, monostable and bistable patches
    z = np.array([-40.0, 0.0, 40.0])
    np.testing.assert_allclose(linearization_at_zero(build_field(kpp_profile(), 30.0, 2.0))(z), [-2.0, 1.0, -2.0])
    np.testing.assert_allclose(linearization_at_zero(build_field(monostable_profile(), 30.0, 2.0))(z), [-2.0, 0.0, -2.0])
    np.testing.assert_allclose(linearization_at_zero(build_field(bistable_profile(0.2), 30.0, 2.0))(z), [-2.0, -0.2, -2.0])


def test_majorant_slopes():
    # Given: the catalog profiles
    assert majorant_slope_value(kpp_profile()) == pytest.approx(1.0)
    assert majorant_slope_value(bistable_profile(0.2)) == pytest.approx(0.16)
    assert majorant_slope_value(monostable_profile()) == pytest.approx(0.25)


def test_majorant_dominates_linearization():
    # Given: every catalog profile
    z = np.linspace(-40.0, 40.0, 161)
    for profile in (kpp_profile(), monostable_profile(), bistable_profile(), multistable_profile()):
        rf = build_field(profile, width=30.0)
        assert np.all(kpp_majorant_slope(rf)(z) >= linearization_at_zero(rf)(z))


def test_majorant_of_sampled_ratio():
    # Given: a dense sample of f_0(s)/s
    profile = multistable_profile()
    s = np.linspace(1e-6, profile.upper_cap, 200_001)
    ratio = np.asarray(eval_f(build_field(profile, 30.0), 0.0, s)) / s
    assert majorant_slope_value(profile) == pytest.approx(float(np.max(ratio)), abs=1e-8)


def test_positive_mass():
    # Given: bistable theta = 0.2 and KPP
    assert positive_mass(bistable_profile(0.2)) == pytest.approx(0.05)
    assert positive_mass(kpp_profile()) == pytest.approx(1.0 / 6.0)
    assert positive_mass(custom_profile([0.0])) == 0.0


def test_lipschitz_estimate_is_stable():
    # Given: KPP with delta = 1, sampled coarse and fine
    rf = build_field(kpp_profile(), width=30.0, delta=1.0)
    assert lipschitz_estimate(rf) == pytest.approx(1.0)
    assert lipschitz_estimate(rf, samples=101) == pytest.approx(lipschitz_estimate(rf, samples=20_001))
    assert lipschitz_estimate(build_field(kpp_profile(), width=30.0, delta=5.0)) == 5.0


def test_profile_rejects_nonzero_constant():
    # Given: f_0(0) = 1
    with pytest.raises(ValidationError):
        ReactionProfile(kind=ProfileKind.CUSTOM, coefficients=(1.0, -1.0), upper_cap=1.0)


def test_profile_rejects_growth_above_cap():
    # Given: f_0(u) = u², positive everywhere above the cap
    with pytest.raises(ValidationError):
        ReactionProfile(kind=ProfileKind.CUSTOM, coefficients=(0.0, 0.0, 1.0), upper_cap=1.0)


def test_bistable_profile_needs_matching_threshold():
    # Given: bistable coefficients for theta = 0.2 declared with theta = 0.3
    with pytest.raises(ValidationError):
        ReactionProfile(kind=ProfileKind.BISTABLE, coefficients=(0.0, -0.2, 1.2, -1.0), theta=0.3, upper_cap=1.0)


def test_parse_profile_catalog():
    # Given: catalog names
    assert parse_profile('kpp').kind == ProfileKind.KPP
    assert parse_profile('bistable').theta == pytest.approx(0.2)
    assert parse_profile('bistable:0.3').theta == pytest.approx(0.3)
    assert parse_profile('multistable5').upper_cap == pytest.approx(1.5)
    assert parse_profile('poly:[0, 1, -1]').coefficients == (0.0, 1.0, -1.0)
    assert parse_profile('poly:[0, -1]').upper_cap == 1.0


def test_parse_profile_rejects_unknown_and_invalid():
    # Given: an unknown name and an invalid polynomial
    with pytest.raises(ConfigError):
        parse_profile('logistic')
    with pytest.raises(ConfigError):
        parse_profile('poly:[1, 1]')
    with pytest.raises(ConfigError):
        parse_profile('poly:not-json')


def test_patch_fraction_on_edges():
    # Given: a grid with nodes on both patch edges
    rf = build_field(kpp_profile(), width=10.0)
    grid = build_grid(rf, L=40.0, h=0.1)
    fraction = patch_fraction(rf, grid)
    z = grid.nodes
    assert fraction[np.argmin(np.abs(z - 5.0))] == pytest.approx(0.5)
    assert fraction[np.argmin(np.abs(z + 5.0))] == pytest.approx(0.5)
    assert fraction[np.argmin(np.abs(z))] == 1.0
    assert fraction[0] == 0.0


def test_nodal_reaction_matches_pointwise_away_from_edges():
    # Given: a random density on the grid
    rng = np.random.default_rng(3)
    rf = build_field(bistable_profile(), width=10.0, delta=1.5)
    grid = build_grid(rf, L=40.0, h=0.1)
    reaction = NodalReaction(rf, grid)
    u = rng.uniform(0.0, 1.0, grid.n)
    pure = (reaction.fraction == 0.0) | (reaction.fraction == 1.0)
    np.testing.assert_allclose(reaction.f(u)[pure], np.asarray(eval_f(rf, grid.nodes, u))[pure], atol=1e-15)


def test_negative_density_is_inert_inside_and_decays_linearly_outside():
    # Given: a bistable patch (-15, 15) with delta = 2 and u = -0.1
    rf = build_field(bistable_profile(), width=30.0, delta=2.0)
    assert eval_f(rf, 0.0, -0.1) == 0.0
    assert eval_f(rf, 20.0, -0.1) == pytest.approx(0.2)
    nodal = NodalReaction(rf, build_grid(rf, L=80.0, h=0.2))
    values = nodal.f(np.full(nodal.grid.n, -0.1))
    assert np.all(values[nodal.fraction == 1.0] == 0.0)
    assert np.allclose(values[nodal.fraction == 0.0], 0.2)


def test_majorant_fails_when_stationary_points_are_lost(mocker):
    # Given: root finding that returns nothing for the bistable ratio, whose maximum is interior
    mocker.patch.object(reaction.P, 'polyroots', return_value=np.array([]))
    with pytest.raises(MaximizationFailure):
        majorant_slope_value(bistable_profile(0.2))
