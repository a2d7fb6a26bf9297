"""Pair potential: frozen values, derivative consistency, cutoff behavior."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mesochain.errors import PotentialDomainError
from mesochain.potentials import (
    PowerLawPotential,
    force_magnitude,
    potential_energy_scalar,
)

POT = PowerLawPotential(c_r=100.0, p=2.0, x_star=1.0)


def fd_gradient(pot, xi, step=1e-7):
    return (pot.energy(xi + step) - pot.energy(xi - step)) / (2.0 * step)


class TestEnergy:
    def test_zero_at_cutoff(self):
        assert potential_energy_scalar(POT, 1.0) == pytest.approx(0.0, abs=1e-14)

    def test_zero_beyond_cutoff(self):
        assert potential_energy_scalar(POT, 2.0) == 0.0

    def test_reference_value_inside(self):
        # frozen from direct evaluation: 100*(-1/0.5 - 0.5 + 2) = -50
        assert potential_energy_scalar(POT, 0.5) == pytest.approx(-50.0, rel=1e-12)

    def test_nonpositive_argument_rejected(self):
        with pytest.raises(PotentialDomainError):
            potential_energy_scalar(POT, 0.0)
        with pytest.raises(PotentialDomainError):
            POT.energy(np.array([0.5, -1.0]))


class TestGradient:
    def test_zero_at_cutoff(self):
        assert force_magnitude(POT, 1.0) == pytest.approx(0.0, abs=1e-12)

    def test_matches_finite_difference_09(self):
        expected = fd_gradient(POT, 0.9)
        assert expected == pytest.approx(23.456790123456788, rel=1e-6)
        assert force_magnitude(POT, 0.9) == pytest.approx(expected, abs=1e-6)

    def test_matches_finite_difference_05(self):
        expected = fd_gradient(POT, 0.5)
        assert expected == pytest.approx(300.0, rel=1e-6)
        assert force_magnitude(POT, 0.5) == pytest.approx(expected, abs=1e-4)

    def test_continuous_at_cutoff(self):
        just_inside = force_magnitude(POT, 1.0 - 1e-9)
        assert just_inside == pytest.approx(0.0, abs=1e-6)

    def test_nonpositive_argument_rejected(self):
        with pytest.raises(PotentialDomainError):
            force_magnitude(POT, -0.1)


@given(
    xi=st.floats(min_value=0.05, max_value=3.0),
    c_r=st.floats(min_value=1.0, max_value=500.0),
    p=st.floats(min_value=1.2, max_value=4.0),
    x_star=st.floats(min_value=0.5, max_value=2.0),
)
@settings(max_examples=200, deadline=None)
def test_gradient_nonnegative_and_fd_consistent(xi, c_r, p, x_star):
    pot = PowerLawPotential(c_r=c_r, p=p, x_star=x_star)
    grad = pot.gradient(xi)
    assert grad >= 0.0
    if xi > x_star:
        assert grad == 0.0
    elif abs(xi - x_star) > 1e-4:  # fd straddles the kink otherwise
        fd = fd_gradient(pot, xi, step=1e-6 * xi)
        assert grad == pytest.approx(fd, rel=1e-4, abs=1e-8 * c_r)


@given(
    c_r=st.floats(min_value=1.0, max_value=500.0),
    p=st.floats(min_value=1.2, max_value=4.0),
    x_star=st.floats(min_value=0.5, max_value=2.0),
)
@settings(max_examples=100, deadline=None)
def test_energy_and_gradient_vanish_at_cutoff(c_r, p, x_star):
    pot = PowerLawPotential(c_r=c_r, p=p, x_star=x_star)
    assert pot.energy(x_star) == pytest.approx(0.0, abs=1e-10 * c_r)
    assert pot.gradient(x_star) == pytest.approx(0.0, abs=1e-10 * c_r)


def test_parameter_validation():
    with pytest.raises(ValueError):
        PowerLawPotential(c_r=-1.0)
    with pytest.raises(ValueError):
        PowerLawPotential(p=1.0)
    with pytest.raises(ValueError):
        PowerLawPotential(x_star=0.0)
