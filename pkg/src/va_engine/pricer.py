"""Value functions, the contract price and fair-fee calibration.

``w(t, z)`` is the early-surrender premium over the surrender benefit in
inverse-moneyness units; ``u = w + 1 - k`` and ``v(t, x) = x u(t, x0 e^{gt}/x)``.
The time-zero price is computed two ways:

* route (a): ``x0 (w(0, 1) + 1 - k(0))`` under the fund-numeraire measure;
* route (b): the risk-neutral representation with truncated moments of ``X``
  over the surrender curve ``l(t) = x0 e^{gt} / b(t)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid

from .boundary import Boundary, boundary_residuals, picard_solve
from .contract import ContractSpec, f_function
from .lognormal import GbmLaw, call_value, european_value_U0, kernel_integral, norm_cdf
from .mortality import MortalityModel

__all__ = [
    "PricingResult",
    "FairFeeResult",
    "PricingError",
    "BracketError",
    "value_w",
    "value_u",
    "value_v",
    "price_V0",
    "surrender_option_value",
    "fair_fee",
    "REFINE",
]

log = logging.getLogger(__name__)

# sub-panels per boundary panel in the time integrals (b linear in between)
REFINE = 4
ROUTE_TOL = 0.005
NEG_TOL = 1e-6
_GL2 = 0.5 / math.sqrt(3.0)


class PricingError(RuntimeError):
    pass


class BracketError(ValueError):
    def __init__(self, lo, hi, v_lo, v_hi, x0):
        super().__init__(
            f"fee bracket ({lo:g}, {hi:g}) does not straddle par {x0:g}: V0 = {v_lo:.6g}, {v_hi:.6g}"
        )
        self.endpoints = ((lo, v_lo), (hi, v_hi))


@dataclass(frozen=True)
class PricingResult:
    V0: float
    U0: float
    V_SO: float
    w01: float
    boundary: Boundary
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FairFeeResult:
    c: float
    V0: float
    residual: float
    evaluations: int
    history: list = field(default_factory=list)

    def __float__(self):
        return self.c


def _fine_times(boundary: Boundary, refine: int) -> np.ndarray:
    return np.linspace(0.0, boundary.grid.T, boundary.grid.n * refine + 1)


def value_w(t: float, z, boundary: Boundary, spec: ContractSpec, mortality: MortalityModel,
            refine: int = REFINE):
    """Premium ``w(t, z)`` from the early-surrender-premium representation.

    The time integral runs over the boundary grid on ``[t, T]`` with each panel
    split into ``refine`` trapezoid sub-panels; the first sub-panel uses two
    Gauss-Legendre points so the result stays continuous in ``z``.
    Vectorised over ``z``.
    """
    T = spec.T
    if t < 0 or t > T * (1 + 1e-12):
        raise ValueError(f"t must lie in [0, {T}]")
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z_arr <= 0):
        raise ValueError("z must be positive")
    t = min(float(t), T)
    tau = T - t
    if tau <= 1e-14:
        out = np.maximum(z_arr - 1.0, 0.0)
        return float(out[0]) if np.ndim(z) == 0 else out

    a, sig, c = spec.alpha, spec.sigma, spec.c
    zc = z_arr[:, None]

    def integrand(s):
        u = np.minimum(t + s, T)
        k = kernel_integral(GbmLaw(zc, s[None, :], a, sig), boundary(u)[None, :],
                            mortality.force(u)[None, :], np.asarray(f_function(spec, mortality, u))[None, :])
        return np.exp(-c * s) * mortality.survival(t, s) * k

    tf = _fine_times(boundary, refine)
    nodes = np.concatenate([[t], tf[tf > t + 1e-12]])
    h0 = nodes[1] - nodes[0]
    s_gl = np.array([0.5 - _GL2, 0.5 + _GL2]) * h0
    total = 0.5 * h0 * integrand(s_gl).sum(axis=1)
    if nodes.size > 2:
        s_tr = nodes[1:] - t
        total = total + trapezoid(integrand(s_tr), s_tr, axis=1)
    total = total + math.exp(-c * tau) * mortality.survival(t, tau) * call_value(GbmLaw(z_arr, tau, a, sig))
    out = np.maximum(total, 0.0)
    return float(out[0]) if np.ndim(z) == 0 else out


def value_u(t, z, boundary, spec, mortality, refine: int = REFINE):
    return value_w(t, z, boundary, spec, mortality, refine) + 1.0 - float(spec.penalty.value(t, spec.T))


def value_v(t, x, boundary, spec, mortality, refine: int = REFINE):
    """Contract value at ``t`` given account value ``x`` (currency)."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0):
        raise ValueError("account value must be positive")
    z = spec.x0 * math.exp(spec.g * t) / x_arr
    return x_arr * value_u(t, z, boundary, spec, mortality, refine)


def _price_route_b(boundary: Boundary, spec: ContractSpec, mortality: MortalityModel, refine: int) -> float:
    """Risk-neutral price from truncated moments of ``X`` above and below the surrender curve."""
    x0, sig, T = spec.x0, spec.sigma, spec.T
    q = spec.r - spec.c
    s = _fine_times(boundary, refine)
    b = boundary(s)
    G = x0 * np.exp(spec.g * s)
    mu = mortality.force(s)
    f = np.asarray(f_function(spec, mortality, s))
    disc = np.exp(-spec.r * s) * mortality.survival(0.0, s)
    mean = x0 * np.exp(q * s)

    ss = s[1:]
    vol = sig * np.sqrt(ss)

    def above(level):
        """``(P(X > level), E[X 1{X > level}])`` with ``level`` possibly infinite."""
        fin = np.isfinite(level)
        lv = np.where(fin & (level > 0), level, 1.0)
        d2 = (np.log(x0 / lv) + (q - 0.5 * sig**2) * ss) / vol
        p = np.where(fin, norm_cdf(d2), 0.0)
        m = np.where(fin, mean[1:] * norm_cdf(d2 + vol), 0.0)
        return p, m

    with np.errstate(divide="ignore"):
        ell = np.where(b[1:] > 0, G[1:] / np.where(b[1:] > 0, b[1:], 1.0), np.inf)
    p_l, m_l = above(ell)
    p_g, m_g = above(G[1:])
    # E[max(G, X) 1{X < l}]: below G pays G, between G and l pays X
    low = np.where(
        ell <= G[1:],
        G[1:] * (1.0 - p_l),
        G[1:] * (1.0 - p_g) + (m_g - m_l),
    )
    running = np.empty_like(s)
    running[1:] = (mu[1:] - f[1:]) * m_l + mu[1:] * low
    # deterministic start: X_0 = x0 against l(0) = x0 / b(0)
    ind0 = 0.5 if b[0] == 1.0 else float(b[0] > 1.0)
    running[0] = (mu[0] - f[0]) * x0 * ind0 + mu[0] * x0 * (1.0 - ind0)
    integral = trapezoid(disc * running, s)

    volT = sig * math.sqrt(T)
    dT = (math.log(x0 / G[-1]) + (q - 0.5 * sig**2) * T) / volT
    terminal = G[-1] * norm_cdf(-dT) + mean[-1] * norm_cdf(dT + volT)
    return float(disc[-1] * terminal + integral)


def price_V0(spec: ContractSpec, mortality: MortalityModel, boundary: Boundary,
             refine: int = REFINE) -> PricingResult:
    """Time-zero price with surrender option, its European part and the option value.

    An empty surrender region means the optimal policy is to hold to maturity,
    so both routes reduce to the European value, which is returned exactly.

    Raises:
        PricingError: if the two pricing routes disagree by more than 0.5% of ``x0``
            or the surrender option value is materially negative.
    """
    x0 = spec.x0
    U0 = european_value_U0(spec, mortality)
    k0 = float(spec.penalty.value(0.0, spec.T))
    w01 = value_w(0.0, 1.0, boundary, spec, mortality, refine)
    route_a = x0 * (w01 + 1.0 - k0)
    route_b = _price_route_b(boundary, spec, mortality, refine)
    gap = abs(route_a - route_b)
    support = boundary.values[:-1] > 0
    res = boundary_residuals(boundary, spec, mortality)
    diagnostics = {
        "n": boundary.grid.n,
        "iterations": boundary.iterations,
        "final_sup_change": boundary.final_sup_change,
        "residual_max": float(np.max(np.abs(res[support]))) if support.any() else 0.0,
        "route_a": route_a,
        "route_b": route_b,
        "route_gap": gap,
        "empty_region": boundary.empty,
    }
    if gap > ROUTE_TOL * x0:
        raise PricingError(f"pricing routes disagree: a={route_a:.6f}, b={route_b:.6f}")

    V0 = U0 if boundary.empty else route_a
    v_so = V0 - U0
    if v_so < -NEG_TOL * x0:
        raise PricingError(f"negative surrender option value {v_so:.3g}")
    if v_so < 0:
        # quadrature noise below the tolerance
        V0, v_so = U0, 0.0
    return PricingResult(V0=V0, U0=U0, V_SO=v_so, w01=w01, boundary=boundary, diagnostics=diagnostics)


def surrender_option_value(spec: ContractSpec, mortality: MortalityModel, boundary: Boundary) -> float:
    return price_V0(spec, mortality, boundary).V_SO


def fair_fee(
    spec: ContractSpec,
    mortality: MortalityModel,
    bracket: Tuple[float, float] = (0.001, 0.10),
    *,
    n: int = 200,
    eps: float = 1e-2,
    tol: float = 1e-4,
    scheme: str = "gauss-seidel",
    backend: Optional[str] = None,
) -> FairFeeResult:
    """Fee rate ``c`` at which the contract price equals the premium ``x0``.

    Bisection on ``c -> V0(c) - x0``; every evaluation re-solves the boundary.
    The ``c`` field of ``spec`` is ignored.

    Raises:
        BracketError: when ``V0 - x0`` has the same sign at both bracket ends.
    """
    lo, hi = bracket
    if not 0 <= lo < hi:
        raise ValueError("fee bracket must satisfy 0 <= lo < hi")
    history = []

    def excess(c):
        s = spec.replace(c=c)
        b = picard_solve(s, mortality, n, eps, scheme=scheme, backend=backend)
        v = price_V0(s, mortality, b).V0
        history.append((c, v))
        return v - spec.x0

    f_lo, f_hi = excess(lo), excess(hi)
    if not (f_lo > 0 > f_hi):
        raise BracketError(lo, hi, f_lo + spec.x0, f_hi + spec.x0, spec.x0)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = excess(mid)
        if f_mid > 0:
            lo = mid
        else:
            hi = mid
    c_star = 0.5 * (lo + hi)
    s = spec.replace(c=c_star)
    v = price_V0(s, mortality, picard_solve(s, mortality, n, eps, scheme=scheme, backend=backend)).V0
    history.append((c_star, v))
    log.info("fair fee %.5f after %d evaluations", c_star, len(history))
    return FairFeeResult(c=c_star, V0=v, residual=v - spec.x0, evaluations=len(history), history=history)
