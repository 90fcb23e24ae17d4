import math

import numpy as np
import pytest

from va_engine.boundary import picard_solve
from va_engine.contract import ContractSpec, ExponentialPenalty
from va_engine.pricer import (
    BracketError,
    fair_fee,
    price_V0,
    surrender_option_value,
    value_u,
    value_v,
    value_w,
)


@pytest.fixture(scope="module")
def bench_price(bench, mort, bench_boundary):
    return price_V0(bench, mort, bench_boundary)


def test_terminal_condition(bench, mort, bench_boundary):
    z = np.array([0.3, 1.0, 1.7])
    np.testing.assert_allclose(value_w(10.0, z, bench_boundary, bench, mort), np.maximum(z - 1, 0))


def test_zero_in_stopping_region(bench, mort, bench_boundary):
    for j in (20, 100, 180):
        t = bench_boundary.times[j]
        b = bench_boundary.values[j]
        z = np.linspace(0.3 * b, b, 5)
        assert np.all(value_w(t, z, bench_boundary, bench, mort) <= 1e-3)


def test_positive_in_continuation_region(bench, mort, bench_boundary):
    assert value_w(0.0, 1.0, bench_boundary, bench, mort) > 0


def test_input_validation(bench, mort, bench_boundary):
    with pytest.raises(ValueError):
        value_w(10.5, 1.0, bench_boundary, bench, mort)
    with pytest.raises(ValueError):
        value_w(1.0, 0.0, bench_boundary, bench, mort)
    with pytest.raises(ValueError):
        value_v(1.0, -5.0, bench_boundary, bench, mort)


def test_off_grid_time(bench, mort, bench_boundary):
    w1 = value_w(3.01, 1.0, bench_boundary, bench, mort)
    w0 = value_w(3.0, 1.0, bench_boundary, bench, mort)
    w2 = value_w(3.05, 1.0, bench_boundary, bench, mort)
    assert min(w0, w2) - 1e-4 <= w1 <= max(w0, w2) + 1e-4


def test_v_terminal_payoff(bench, mort, bench_boundary):
    x = np.array([50.0, 100.0, 180.0])
    np.testing.assert_allclose(value_v(10.0, x, bench_boundary, bench, mort), np.maximum(100.0, x))


def test_v_value_matching_on_surrender_curve(bench, mort, bench_boundary):
    for j in (0, 60, 120, 190):
        t = bench_boundary.times[j]
        ell = bench.x0 * math.exp(bench.g * t) / bench_boundary.values[j]
        k = float(bench.penalty.value(t, bench.T))
        assert value_v(t, ell, bench_boundary, bench, mort) == pytest.approx((1 - k) * ell, abs=1e-3 * ell)


def test_v_at_issue_is_price(bench, mort, bench_boundary, bench_price):
    assert value_v(0.0, bench.x0, bench_boundary, bench, mort) == pytest.approx(bench_price.V0, rel=1e-12)
    assert value_u(0.0, 1.0, bench_boundary, bench, mort) * bench.x0 == pytest.approx(bench_price.V0, rel=1e-12)


def test_price_invariants(bench, bench_price):
    p = bench_price
    assert p.V0 >= p.U0 >= 0
    assert p.V_SO == pytest.approx(p.V0 - p.U0)
    k0 = float(bench.penalty.value(0.0, bench.T))
    assert p.V0 == pytest.approx(bench.x0 * (p.w01 + 1 - k0))
    assert p.diagnostics["route_gap"] <= 0.005 * bench.x0
    assert p.diagnostics["residual_max"] <= 1e-4


def test_routes_agree_closely(bench_price):
    assert bench_price.diagnostics["route_gap"] < 1e-3


@pytest.mark.parametrize("K", [0.025, 0.03])
def test_no_surrender_incentive(mort, K):
    spec = ContractSpec(penalty=ExponentialPenalty(K))
    b = picard_solve(spec, mort, 100, scheme="gauss-seidel")
    p = price_V0(spec, mort, b)
    assert p.V0 == p.U0
    assert surrender_option_value(spec, mort, b) == 0.0


def test_price_decreases_in_fee_increases_in_guarantee(mort):
    vals_c, vals_g = [], []
    for c in (0.02, 0.03, 0.04):
        s = ContractSpec(c=c)
        vals_c.append(price_V0(s, mort, picard_solve(s, mort, 100, scheme="gauss-seidel")).V0)
    for g in (0.0, 0.01, 0.02):
        s = ContractSpec(g=g)
        vals_g.append(price_V0(s, mort, picard_solve(s, mort, 100, scheme="gauss-seidel")).V0)
    assert vals_c[0] > vals_c[1] > vals_c[2]
    assert vals_g[0] < vals_g[1] < vals_g[2]


def test_fair_fee_zeroes_excess(bench, mort):
    res = fair_fee(bench, mort, n=100)
    assert 0.001 < res.c < 0.10
    assert abs(res.residual) < 0.05
    assert float(res) == res.c


def test_fair_fee_homogeneous_in_x0(mort):
    a = fair_fee(ContractSpec(), mort, n=100).c
    b = fair_fee(ContractSpec(x0=1000.0), mort, n=100).c
    assert a == b


def test_fair_fee_rises_with_guarantee(mort):
    a = fair_fee(ContractSpec(g=0.0), mort, n=100).c
    b = fair_fee(ContractSpec(g=0.01), mort, n=100).c
    assert b > a


def test_fair_fee_bracket_error(bench, mort):
    with pytest.raises(BracketError) as info:
        fair_fee(bench, mort, (0.05, 0.10), n=60)
    (lo, v_lo), (hi, v_hi) = info.value.endpoints
    assert lo == 0.05 and v_lo < bench.x0


def test_fair_fee_bracket_validation(bench, mort):
    with pytest.raises(ValueError):
        fair_fee(bench, mort, (0.05, 0.01))
