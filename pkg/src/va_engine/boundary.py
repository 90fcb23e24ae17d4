"""Optimal surrender boundary via Picard iteration on the boundary integral equation.

The boundary ``b(t)`` lives in inverse-moneyness units ``z = x0 e^{gt} / X_t``;
surrender is optimal when ``Z_t <= b(t)``.  On a uniform grid ``t_j = j T/n``
each node solves

    e^{-c(T-t_j)} p(T-t_j; t_j) E[(Z^theta_{T-t_j} - 1)^+]
      + sum_{i>j} w_i e^{-c(t_i-t_j)} p(t_i-t_j; t_j) K(theta, t_i - t_j, b(t_i)) = 0

for ``theta`` by bisection, where ``K`` is the closed-form kernel of
:func:`va_engine.lognormal.kernel_integral`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import kernels
from .contract import ContractSpec, f_function, t_star as _t_star
from .lognormal import GbmLaw, call_value, kernel_integral
from .mortality import MortalityModel

__all__ = [
    "TimeGrid",
    "Boundary",
    "NonConvergenceError",
    "lambda_cap",
    "residual",
    "picard_solve",
    "surrender_curve",
    "RULES",
    "SCHEMES",
]

log = logging.getLogger(__name__)

RULES = ("trapezoid", "right")
SCHEMES = ("jacobi", "gauss-seidel")
MAX_SWEEPS = 500
# bracket cap where mu = 0 and f < 0 (threshold is +inf there)
_H_INF = 1e3


@dataclass(frozen=True)
class TimeGrid:
    T: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"time grid needs n >= 2 steps, got {self.n}")
        if self.T <= 0:
            raise ValueError("time grid needs T > 0")

    @property
    def dt(self) -> float:
        return self.T / self.n

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n + 1)


@dataclass(frozen=True)
class Boundary:
    """Discretised optimal surrender boundary with solver diagnostics."""

    grid: TimeGrid
    values: np.ndarray
    t_star: float
    lambda_cap: float
    iterations: int
    final_sup_change: float
    h: np.ndarray
    history: List[float] = field(default_factory=list)
    rule: str = "trapezoid"
    scheme: str = "jacobi"

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def beta(self) -> np.ndarray:
        """``e^{Lambda t} b(t)``, non-decreasing in theory."""
        return np.exp(self.lambda_cap * self.times) * self.values

    def __call__(self, t):
        """Linear interpolation of ``b`` between grid nodes."""
        return np.interp(t, self.times, self.values)

    @property
    def empty(self) -> bool:
        """True when no grid node before maturity lies in the surrender region."""
        return not np.any(self.values[:-1] > 0)


class NonConvergenceError(RuntimeError):
    def __init__(self, message, last_iterate, history):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.history = history


def lambda_cap(spec: ContractSpec, mortality: MortalityModel) -> float:
    """Growth-rate bound ``Lambda`` making ``e^{Lambda t} b(t)`` non-decreasing."""
    T = spec.T
    ts = np.linspace(0.0, T, 2001)
    mu_max = float(np.max(mortality.force(ts)))
    c1 = mortality.aging_rate_bound(T) + mu_max
    a = abs(spec.alpha)
    c0 = a * math.exp(a * T)
    return max(c1 + spec.c + c0 - f_function(spec, mortality, T), 0.0)


def _threshold(mu, f):
    with np.errstate(divide="ignore", invalid="ignore"):
        h = np.maximum(1.0 - f / mu, 0.0)
    degenerate = mu <= 0
    return np.where(degenerate, np.where(f < 0, _H_INF, np.where(f > 0, 0.0, 1.0)), h)


def residual(j: int, theta: float, b_current, spec: ContractSpec, mortality: MortalityModel,
             n: Optional[int] = None, rule: str = "trapezoid") -> float:
    """Left side of the discretised boundary equation at node ``j`` for level ``theta``.

    ``b_current`` is either a :class:`Boundary` or an array of ``n + 1`` node
    values.  This is the readable reference version; the solver runs the
    vectorised kernels in :mod:`va_engine.kernels`.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    if rule not in RULES:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    b = np.asarray(b_current.values if isinstance(b_current, Boundary) else b_current, dtype=float)
    n = len(b) - 1 if n is None else n
    grid = TimeGrid(spec.T, n)
    if not 0 <= j < n:
        raise ValueError(f"node index must be in [0, {n})")
    t = grid.times
    dt = grid.dt
    a, sig, c = spec.alpha, spec.sigma, spec.c
    tj = t[j]
    sT = spec.T - tj
    out = math.exp(-c * sT) * mortality.survival(tj, sT) * call_value(GbmLaw(theta, sT, a, sig))
    for i in range(j + 1, n + 1):
        s = t[i] - tj
        w = dt * (0.5 if (rule == "trapezoid" and i == n) else 1.0)
        k = kernel_integral(GbmLaw(theta, s, a, sig), b[i], mortality.force(t[i]), f_function(spec, mortality, t[i]))
        out += w * math.exp(-c * s) * mortality.survival(tj, s) * k
    if rule == "trapezoid":
        # s -> 0 end of the time integral: Z sits on the boundary, crossing probability 1/2
        out += 0.25 * dt * (mortality.force(tj) * max(theta - 1.0, 0.0) + f_function(spec, mortality, tj))
    return float(out)


@dataclass
class _Plan:
    hcap: np.ndarray
    arrays: tuple


def _plan(spec: ContractSpec, mortality: MortalityModel, grid: TimeGrid, rule: str) -> _Plan:
    n, dt = grid.n, grid.dt
    t = grid.times
    a, sig, c = spec.alpha, spec.sigma, spec.c
    mu = np.asarray(mortality.force(t), dtype=float)
    f = np.asarray(f_function(spec, mortality, t), dtype=float)

    S = t[None, :] - t[:-1, None]
    valid = S > 0
    Ss = np.where(valid, S, 1.0)
    W = np.where(valid, dt * np.exp(-c * Ss) * mortality.survival(np.broadcast_to(t[:-1, None], Ss.shape), Ss), 0.0)
    if rule == "trapezoid":
        W[:, -1] *= 0.5
    vs = sig * np.sqrt(Ss)
    m2 = (a - 0.5 * sig**2) * Ss
    gs = np.exp(a * Ss)

    sT = spec.T - t[:-1]
    termc = np.exp(-c * sT) * mortality.survival(t[:-1], sT)
    vT = sig * np.sqrt(sT)
    m2T = (a - 0.5 * sig**2) * sT
    gT = np.exp(a * sT)
    half = np.full(n, 0.25 * dt if rule == "trapezoid" else 0.0)
    arrays = tuple(
        np.ascontiguousarray(x, dtype=np.float64) for x in (W, vs, m2, gs, mu, f, termc, vT, m2T, gT, half)
    )
    return _Plan(hcap=np.ascontiguousarray(_threshold(mu, f)[:-1]), arrays=arrays)


def picard_solve(
    spec: ContractSpec,
    mortality: MortalityModel,
    grid: TimeGrid | int = 200,
    eps: float = 1e-2,
    *,
    rule: str = "trapezoid",
    scheme: str = "jacobi",
    polish: bool = True,
    max_sweeps: int = MAX_SWEEPS,
    backend: Optional[str] = None,
) -> Boundary:
    """Solve the boundary integral equation by Picard iteration.

    Starts from ``b0(t) = (1 + (t/T)^2) / 2`` and sweeps until the sup-norm
    change drops below ``eps``; with ``polish`` it keeps sweeping until the
    change drops below ``eps / 100``.  ``scheme="jacobi"`` solves every node
    from the previous iterate; ``"gauss-seidel"`` marches backward from
    maturity reusing freshly solved nodes and reaches the same fixed point
    in a couple of sweeps.

    Raises:
        NonConvergenceError: after ``max_sweeps`` sweeps without meeting the tolerance.
    """
    if not isinstance(grid, TimeGrid):
        grid = TimeGrid(spec.T, int(grid))
    if eps <= 0:
        raise ValueError("eps must be positive")
    if rule not in RULES:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown sweep scheme {scheme!r}")
    kern = kernels if backend is None else kernels.backend(backend)

    plan = _plan(spec, mortality, grid, rule)
    t = grid.times
    b = 0.5 * (1.0 + (t / spec.T) ** 2)
    b[-1] = 1.0
    history: List[float] = []
    targets = [eps, eps / 100.0] if polish else [eps]
    for tol in targets:
        while True:
            if len(history) >= max_sweeps:
                raise NonConvergenceError(
                    f"Picard iteration did not reach {tol:g} after {max_sweeps} sweeps", b, history
                )
            nb = kern.picard_sweep(b, plan.hcap, *plan.arrays, gauss_seidel=(scheme == "gauss-seidel"))
            nb[-1] = 1.0
            change = float(np.max(np.abs(nb - b)))
            history.append(change)
            b = nb
            if change < tol:
                break
    log.debug("picard converged in %d sweeps (last change %.3g)", len(history), history[-1])

    h = np.append(plan.hcap, _threshold(np.asarray(mortality.force(spec.T)), np.asarray(f_function(spec, mortality, spec.T))))
    return Boundary(
        grid=grid,
        values=b,
        t_star=_t_star(spec, mortality),
        lambda_cap=lambda_cap(spec, mortality),
        iterations=len(history),
        final_sup_change=history[-1],
        h=h,
        history=history,
        rule=rule,
        scheme=scheme,
    )


def boundary_residuals(boundary: Boundary, spec: ContractSpec, mortality: MortalityModel,
                       backend: Optional[str] = None) -> np.ndarray:
    """Residual at every node ``j < n`` evaluated at the boundary's own values."""
    kern = kernels if backend is None else kernels.backend(backend)
    plan = _plan(spec, mortality, boundary.grid, boundary.rule)
    theta = np.maximum(boundary.values[:-1], 1e-300)
    return kern.residuals(theta, boundary.values, *plan.arrays)


def surrender_curve(boundary: Boundary, spec: ContractSpec):
    """Surrender threshold in account-value units, ``x0 e^{gt} / b(t)``.

    Nodes with ``b = 0`` carry ``inf``: surrender is never optimal there.
    """
    t = boundary.times
    with np.errstate(divide="ignore"):
        ell = np.where(boundary.values > 0, spec.x0 * np.exp(spec.g * t) / boundary.values, np.inf)
    return list(zip(t.tolist(), ell.tolist()))
