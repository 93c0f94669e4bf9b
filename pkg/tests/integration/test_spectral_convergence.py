import pytest

from tests.utils import kpp_setup
from wavelab.logic.spectral import ground_state, square_well_oracle

STEPS = (0.2, 0.1, 0.05)


@pytest.fixture(scope='module')
def eigenvalues():
    values = []
    for h in STEPS:
        rf, grid = kpp_setup(width=30.0, L=120.0, h=h)
        values.append(ground_state(rf, grid).lambda0)
    return values


def test_ground_state_converges_at_second_order(eigenvalues):
    # Given: the KPP square well refined twice
    coarse, middle, fine = eigenvalues
    ratio = (coarse - middle) / (middle - fine)
    assert 3.5 <= ratio <= 4.5


def test_extrapolated_ground_state_matches_the_oracle(eigenvalues):
    # Given: the closed-form square-well eigenvalue
    oracle = square_well_oracle(1.0, 1.0, 30.0)
    _, middle, fine = eigenvalues
    assert abs(fine - oracle) <= 3e-4
    assert abs((4.0 * fine - middle) / 3.0 - oracle) <= 5e-5
