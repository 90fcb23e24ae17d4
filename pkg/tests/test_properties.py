import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from va_engine.boundary import boundary_residuals, picard_solve
from va_engine.contract import ContractSpec, ExponentialPenalty, check_assumptions, f_function
from va_engine.lognormal import GbmLaw, call_value, kernel_integral, partial_mean, tail_prob
from va_engine.mortality import MortalityModel
from va_engine.pricer import value_w

pos = st.floats(0.05, 5.0)
horizon = st.floats(0.01, 15.0)
drift = st.floats(-0.1, 0.1)
vol = st.floats(0.05, 0.6)
SLOW = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])


@given(pos, horizon, drift, vol, st.floats(0.01, 5.0), st.floats(0.01, 5.0))
def test_tail_probability_bounds_and_order(z, s, a, sig, lvl1, lvl2):
    law = GbmLaw(z, s, a, sig)
    lo, hi = sorted((lvl1, lvl2))
    p_lo, p_hi = tail_prob(law, lo), tail_prob(law, hi)
    assert 0.0 <= p_hi <= p_lo <= 1.0
    assert partial_mean(law, hi) >= hi * p_hi * (1 - 1e-12)


@given(pos, horizon, drift, vol)
def test_call_above_intrinsic_forward(z, s, a, sig):
    law = GbmLaw(z, s, a, sig)
    assert call_value(law) >= max(law.mean - 1.0, 0.0) - 1e-12


@given(pos, horizon, drift, vol, st.floats(0.0, 3.0), st.floats(0.0, 0.1), st.floats(-0.05, 0.05))
def test_kernel_is_linear_in_drivers(z, s, a, sig, b, mu, f):
    law = GbmLaw(z, s, a, sig)
    both = kernel_integral(law, b, mu, f)
    assert both == pytest.approx(kernel_integral(law, b, mu, 0.0) + kernel_integral(law, b, 0.0, f), abs=1e-14)


@given(st.floats(0, 20), st.floats(0, 10), st.floats(0, 10), st.floats(-0.5, 0.5), st.floats(20, 80))
def test_survival_is_multiplicative(t, s1, s2, factor, eta):
    m = MortalityModel(eta=eta, hazard_factor=factor)
    p = m.survival(t, s1 + s2)
    assert 0.0 < p <= 1.0
    assert p == pytest.approx(m.survival(t, s1) * m.survival(t + s1, s2), rel=1e-12)


@given(st.floats(0.0, 10.0), st.floats(0.0, 0.05), st.floats(0.0, 0.06))
def test_driver_closed_form(t, K, c):
    spec = ContractSpec(c=c, penalty=ExponentialPenalty(K))
    m = MortalityModel()
    k = -math.expm1(-K * (10 - t))
    expected = m.force(t) * k + (K - c) * math.exp(-K * (10 - t))
    assert f_function(spec, m, t) == pytest.approx(expected, abs=1e-15)


configs = st.fixed_dictionaries(
    {
        "c": st.floats(0.015, 0.045),
        "K": st.floats(0.005, 0.03),
        "sigma": st.floats(0.12, 0.35),
        "g": st.floats(0.0, 0.03),
        "eta": st.floats(40.0, 70.0),
    }
)


def _solve(cfg, n=60):
    spec = ContractSpec(c=cfg["c"], sigma=cfg["sigma"], g=cfg["g"], penalty=ExponentialPenalty(cfg["K"]))
    m = MortalityModel(eta=cfg["eta"])
    assume(check_assumptions(spec, m).ok)
    return spec, m, picard_solve(spec, m, n, scheme="gauss-seidel")


@SLOW
@given(configs)
def test_boundary_invariants(cfg):
    spec, m, b = _solve(cfg)
    v = b.values
    assert v[-1] == 1.0
    assert np.all(v >= 0)
    assert np.all(v[:-1] <= b.h[:-1] + 1e-12)
    assert np.all(v[b.times < b.t_star] == 0.0)
    support = np.flatnonzero(v > 0)
    if support.size:
        assert np.all(v[support[0]:] > 0)
    assert np.all(np.diff(b.beta) >= -1e-6)
    res = boundary_residuals(b, spec, m)
    on = v[:-1] > 0
    if on.any():
        assert np.max(np.abs(res[on])) <= 1e-4


@pytest.fixture(scope="module")
def solved(bench, mort, bench_boundary):
    return bench, mort, bench_boundary


@SLOW
@given(st.floats(0.0, 9.9), st.floats(0.3, 3.0), st.floats(0.3, 3.0))
def test_w_monotone_and_lipschitz(solved, t, z1, z2):
    spec, m, b = solved
    lo, hi = sorted((z1, z2))
    w_lo, w_hi = value_w(t, np.array([lo, hi]), b, spec, m)
    assert w_lo >= 0
    assert w_lo <= w_hi + 1e-9
    a = abs(spec.alpha)
    lip = math.exp(a * spec.T) * (1 + float(np.max(m.force(b.times))) * spec.T)
    assert w_hi - w_lo <= lip * (hi - lo) + 1e-9


@SLOW
@given(st.floats(0.0, 9.9), st.floats(0.3, 3.0), st.floats(0.3, 3.0))
def test_w_midpoint_convex(solved, t, z1, z2):
    spec, m, b = solved
    w = value_w(t, np.array([z1, 0.5 * (z1 + z2), z2]), b, spec, m)
    assert w[1] <= 0.5 * (w[0] + w[2]) + 1e-6
