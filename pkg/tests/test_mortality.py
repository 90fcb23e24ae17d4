import math

import numpy as np
import pytest
from scipy.integrate import quad

from va_engine.mortality import (
    ConstantForce,
    GompertzMakeham,
    MortalityModel,
    aging_rate_bound,
    force_of_mortality,
    life_expectancy,
    survival_probability,
)


def test_force_at_issue_matches_hand_value(mort):
    assert mort.force(0.0) == pytest.approx(0.0001 + 0.00035 * 1.075**50, rel=1e-14)


def test_force_is_vectorised_and_increasing(mort):
    t = np.linspace(0, 10, 11)
    mu = force_of_mortality(mort, t)
    assert mu.shape == t.shape
    assert np.all(np.diff(mu) > 0)


def test_negative_time_rejected(mort):
    with pytest.raises(ValueError):
        mort.force(-0.1)
    with pytest.raises(ValueError):
        mort.survival(-1.0, 1.0)


def test_survival_zero_horizon_is_one(mort):
    assert survival_probability(mort, 3.0, 0.0) == 1.0


def test_survival_matches_numerical_hazard_integral(mort):
    for t, s in [(0.0, 1.0), (2.5, 7.5), (9.0, 0.01)]:
        H, _ = quad(lambda u: mort.force(t + u), 0, s, epsabs=1e-14)
        assert mort.survival(t, s) == pytest.approx(math.exp(-H), rel=1e-12)


def test_survival_multiplicative(mort):
    assert mort.survival(0, 7) == pytest.approx(mort.survival(0, 3) * mort.survival(3, 4), rel=1e-13)


def test_constant_force_survival():
    m = MortalityModel(law=ConstantForce(0.02))
    assert m.survival(4.0, 5.0) == pytest.approx(math.exp(-0.1), rel=1e-14)
    assert aging_rate_bound(m, 10.0) == 0.0


def test_aging_rate_bound_holds(mort):
    t = np.linspace(0, 10, 1001)
    lam = mort.aging_rate_bound(10.0)
    assert lam == pytest.approx(math.log(1.075))
    assert np.all(mort.force_derivative(t) <= lam * mort.force(t))


def test_hazard_factor_scales_force(mort):
    m = MortalityModel(hazard_factor=0.38)
    assert m.force(2.0) == pytest.approx(1.38 * mort.force(2.0), rel=1e-14)


@pytest.mark.parametrize("bad", [dict(A=-1e-4), dict(B=0.0), dict(C=1.0)])
def test_invalid_gompertz_rejected(bad):
    with pytest.raises(ValueError):
        GompertzMakeham(**bad)


def test_invalid_hazard_factor_rejected():
    with pytest.raises(ValueError):
        MortalityModel(hazard_factor=-1.0)


@pytest.mark.parametrize("factor", ["0", "-0.38", "0.38"])
def test_life_expectancy_matches_frozen_oracle(frozen, factor):
    m = MortalityModel(hazard_factor=float(factor))
    assert life_expectancy(m) == pytest.approx(frozen["life_expectancy"][factor], abs=1e-6)


def test_life_expectancy_past_max_age_is_zero():
    assert MortalityModel(eta=125.0).life_expectancy() == 0.0
