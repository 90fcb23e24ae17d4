"""Contract and market parameters, the surrender penalty and derived drivers.

The key derived quantity is the driver

    f(t) = k(t) (c + mu(t)) - k'(t) - c,

whose first negative time ``t_star`` opens the surrender region, and the
threshold ``h(t) = (1 - f(t)/mu(t))^+`` that caps the optimal boundary.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np
from scipy.interpolate import CubicSpline

from .mortality import MortalityModel

__all__ = [
    "ExponentialPenalty",
    "PiecewiseCubicPenalty",
    "ContractSpec",
    "AssumptionReport",
    "penalty",
    "penalty_derivative",
    "f_function",
    "f_derivative",
    "t_star",
    "h_threshold",
    "check_assumptions",
]

log = logging.getLogger(__name__)

CHECK_GRID = 10_000
SIGN_TOL = 1e-12
STRICT_NEG = 1e-14


@dataclass(frozen=True)
class ExponentialPenalty:
    """``k(t) = 1 - exp(-K (T - t))``."""

    K: float

    def __post_init__(self):
        if self.K < 0:
            raise ValueError(f"surrender charge intensity must be >= 0, got {self.K}")

    def value(self, t, T):
        return -np.expm1(-self.K * (T - np.asarray(t, dtype=float)))

    def derivative(self, t, T):
        return -self.K * np.exp(-self.K * (T - np.asarray(t, dtype=float)))

    def second_derivative(self, t, T):
        return -self.K**2 * np.exp(-self.K * (T - np.asarray(t, dtype=float)))


@dataclass(frozen=True)
class PiecewiseCubicPenalty:
    """C2 cubic spline through ``(t, k)`` knots.

    The knots must start at 0 and end at the maturity with ``k = 0`` there;
    the interpolant is rejected unless it is non-increasing with values in
    ``[0, 1]``.
    """

    knots: Tuple[Tuple[float, float], ...]
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        knots = tuple(sorted((float(a), float(b)) for a, b in self.knots))
        object.__setattr__(self, "knots", knots)
        if len(knots) < 2:
            raise ValueError("need at least two penalty knots")
        ts = np.array([k[0] for k in knots])
        ks = np.array([k[1] for k in knots])
        if np.any(np.diff(ts) <= 0):
            raise ValueError("penalty knot times must be strictly increasing")
        if ts[0] != 0.0:
            raise ValueError("first penalty knot must be at t=0")
        if ks[-1] != 0.0:
            raise ValueError(f"penalty must vanish at maturity, got k(T)={ks[-1]}")
        spline = CubicSpline(ts, ks) if len(knots) > 2 else CubicSpline(ts, ks, bc_type="natural")
        dense = np.linspace(ts[0], ts[-1], CHECK_GRID)
        vals = spline(dense)
        if np.any(spline(dense, 1) > SIGN_TOL):
            raise ValueError("interpolated penalty is not non-increasing")
        if np.any(vals < -SIGN_TOL) or np.any(vals > 1 + SIGN_TOL):
            raise ValueError("interpolated penalty leaves [0, 1]")
        object.__setattr__(self, "_spline", spline)

    @property
    def maturity(self) -> float:
        return self.knots[-1][0]

    def value(self, t, T):
        return self._spline(np.asarray(t, dtype=float))

    def derivative(self, t, T):
        return self._spline(np.asarray(t, dtype=float), 1)

    def second_derivative(self, t, T):
        return self._spline(np.asarray(t, dtype=float), 2)


Penalty = Union[ExponentialPenalty, PiecewiseCubicPenalty]


@dataclass(frozen=True)
class ContractSpec:
    """Market and contract parameters; defaults are the benchmark contract."""

    T: float = 10.0
    r: float = 0.05
    sigma: float = 0.20
    c: float = 0.025
    g: float = 0.0
    x0: float = 100.0
    penalty: Penalty = ExponentialPenalty(0.014)

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError(f"maturity must be positive, got T={self.T}")
        if self.sigma <= 0:
            raise ValueError(f"volatility must be positive, got sigma={self.sigma}")
        for name in ("r", "c", "g"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.x0 <= 0:
            raise ValueError(f"initial account value must be positive, got x0={self.x0}")
        if isinstance(self.penalty, PiecewiseCubicPenalty) and not math.isclose(
            self.penalty.maturity, self.T
        ):
            raise ValueError("last penalty knot must sit at the contract maturity")

    @property
    def alpha(self) -> float:
        """Drift of the inverse-moneyness process under the fund-numeraire measure."""
        return self.g + self.c - self.r

    def replace(self, **changes) -> "ContractSpec":
        from dataclasses import replace

        return replace(self, **changes)


def _check_t(spec: ContractSpec, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > spec.T * (1 + 1e-12)):
        raise ValueError(f"t must lie in [0, {spec.T}]")
    return np.minimum(t, spec.T)


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def penalty(p: Penalty, spec: ContractSpec, t):
    return _scalar(p.value(_check_t(spec, t), spec.T))


def penalty_derivative(p: Penalty, spec: ContractSpec, t):
    return _scalar(p.derivative(_check_t(spec, t), spec.T))


def f_function(spec: ContractSpec, mortality: MortalityModel, t):
    t = _check_t(spec, t)
    k = spec.penalty.value(t, spec.T)
    kd = spec.penalty.derivative(t, spec.T)
    return _scalar(k * (spec.c + mortality.force(t)) - kd - spec.c)


def f_derivative(spec: ContractSpec, mortality: MortalityModel, t):
    t = _check_t(spec, t)
    p = spec.penalty
    k, kd, kdd = p.value(t, spec.T), p.derivative(t, spec.T), p.second_derivative(t, spec.T)
    return _scalar(kd * (spec.c + mortality.force(t)) + k * mortality.force_derivative(t) - kdd)


def t_star(spec: ContractSpec, mortality: MortalityModel, n_grid: int = CHECK_GRID) -> float:
    """First time the driver turns negative, or ``T`` if it never does."""
    ts = np.linspace(0.0, spec.T, n_grid + 1)
    fs = f_function(spec, mortality, ts)
    neg = np.flatnonzero(fs < 0)
    if neg.size == 0:
        return spec.T
    i = int(neg[0])
    if i == 0:
        return 0.0
    lo, hi = ts[i - 1], ts[i]
    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        if f_function(spec, mortality, mid) < 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def h_threshold(spec: ContractSpec, mortality: MortalityModel, t):
    """Level above which the running reward is positive: ``(1 - f/mu)^+``."""
    mu = mortality.force(_check_t(spec, t))
    if np.any(np.asarray(mu) <= 0):
        raise ValueError("h threshold is undefined where the force of mortality vanishes")
    return _scalar(np.maximum(1.0 - np.asarray(f_function(spec, mortality, t)) / mu, 0.0))


@dataclass
class AssumptionReport:
    """Pass/fail per clause of the standing assumptions on ``k``, ``mu`` and ``f``."""

    clauses: dict
    t_star: float
    notes: list

    @property
    def ok(self) -> bool:
        return all(self.clauses[k] for k in ("penalty", "aging_rate", "single_sign_change")) and (
            self.clauses["clause_i"] or self.clauses["clause_ii"]
        )

    def lines(self):
        out = [f"{name}: {'pass' if v else 'fail'}" for name, v in self.clauses.items()]
        out.append(f"t_star: {self.t_star:.6f}")
        out.extend(self.notes)
        return out


def check_assumptions(spec: ContractSpec, mortality: MortalityModel, n_grid: int = CHECK_GRID) -> AssumptionReport:
    T = spec.T
    ts = np.linspace(0.0, T, n_grid + 1)
    p = spec.penalty
    notes = []

    k = p.value(ts, T)
    kd = p.derivative(ts, T)
    penalty_ok = bool(
        np.all(kd <= SIGN_TOL)
        and abs(float(p.value(T, T))) <= 1e-15
        and np.all(k >= -SIGN_TOL)
        and np.all(k <= 1 + SIGN_TOL)
    )
    if not penalty_ok:
        notes.append("penalty must be non-increasing, within [0,1], and vanish at maturity")

    mu = mortality.force(ts)
    mud = mortality.force_derivative(ts)
    lam = mortality.aging_rate_bound(T)
    aging_ok = bool(np.all(mud <= lam * mu + SIGN_TOL))

    f = f_function(spec, mortality, ts)
    ts_star = t_star(spec, mortality, n_grid)
    after = ts > ts_star
    before = ts < ts_star
    # f >= 0 before t*, strictly negative after it; t* itself is an infimum
    sign_ok = bool(np.all(f[before] >= -STRICT_NEG) and np.all(f[after] < -STRICT_NEG))
    if not sign_ok:
        notes.append("driver f must change sign at most once, from positive to negative")

    fd = f_derivative(spec, mortality, ts)
    if after.any():
        clause_i = bool(np.all(mud[after] <= SIGN_TOL) and np.all(fd[after] <= SIGN_TOL))
        clause_ii = bool(np.all(mud[after] > 0) and np.all(fd[after] - mu[after] * f[after] <= SIGN_TOL))
    else:
        clause_i = clause_ii = True
        notes.append("t_star = T: surrender region is empty")

    report = AssumptionReport(
        clauses={
            "penalty": penalty_ok,
            "aging_rate": aging_ok,
            "single_sign_change": sign_ok,
            "clause_i": clause_i,
            "clause_ii": clause_ii,
        },
        t_star=ts_star,
        notes=notes,
    )
    if not report.ok:
        log.warning("standing assumptions violated: %s", "; ".join(report.lines()))
    return report
