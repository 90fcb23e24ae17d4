"""Closed-form log-normal machinery.

Every ``y``-integral in the boundary equation is a piecewise-affine payoff
against a log-normal density, so it reduces to truncated moments and normal
CDFs.  Functions broadcast over numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.special import erfc

from .contract import ContractSpec
from .mortality import MortalityModel

__all__ = [
    "GbmLaw",
    "norm_cdf",
    "density_phi",
    "tail_prob",
    "partial_mean",
    "call_value",
    "kernel_integral",
    "european_value_U0",
]

_SQRT2 = math.sqrt(2.0)


def norm_cdf(x):
    """Standard normal CDF through ``erfc`` (accurate in both tails)."""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / _SQRT2)


@dataclass(frozen=True)
class GbmLaw:
    """Law of ``Z_s`` where ``dZ = drift Z dt + sigma Z dW`` and ``Z_0 = z``."""

    z: float
    s: float
    drift: float
    sigma: float

    def __post_init__(self):
        if np.any(np.asarray(self.z) <= 0) or np.any(np.asarray(self.s) <= 0) or self.sigma <= 0:
            raise ValueError("GbmLaw needs z > 0, s > 0 and sigma > 0")

    @property
    def vol(self):
        return self.sigma * np.sqrt(self.s)

    @property
    def mean(self):
        return self.z * np.exp(self.drift * self.s)

    def _d2(self, a):
        with np.errstate(divide="ignore"):
            return (np.log(self.z) - np.log(a) + (self.drift - 0.5 * self.sigma**2) * self.s) / self.vol


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def density_phi(law: GbmLaw, y):
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("density is supported on y > 0")
    var = law.sigma**2 * law.s
    m = (law.drift - 0.5 * law.sigma**2) * law.s
    return _out(np.exp(-((np.log(y / law.z) - m) ** 2) / (2 * var)) / (np.sqrt(2 * np.pi * var) * y))


def tail_prob(law: GbmLaw, a):
    """``P(Z_s > a)``; ``a = 0`` gives 1."""
    a = np.asarray(a, dtype=float)
    pos = a > 0
    d2 = law._d2(np.where(pos, a, 1.0))
    return _out(np.where(pos, norm_cdf(d2), 1.0))


def partial_mean(law: GbmLaw, a):
    """``E[Z_s 1{Z_s > a}]``."""
    a = np.asarray(a, dtype=float)
    pos = a > 0
    d1 = law._d2(np.where(pos, a, 1.0)) + law.vol
    return _out(law.mean * np.where(pos, norm_cdf(d1), 1.0))


def call_value(law: GbmLaw):
    """``E[(Z_s - 1)^+]``."""
    return _out(partial_mean(law, 1.0) - tail_prob(law, 1.0))


def kernel_integral(law: GbmLaw, b_level, mu_t, f_t):
    """``E[(mu_t (Z_s - 1)^+ + f_t) 1{Z_s > b_level}]``."""
    b_level = np.asarray(b_level, dtype=float)
    if np.any(b_level < 0):
        raise ValueError("boundary level must be non-negative")
    m = np.maximum(b_level, 1.0)
    return _out(mu_t * (partial_mean(law, m) - tail_prob(law, m)) + f_t * tail_prob(law, b_level))


def _guarantee_bracket(spec: ContractSpec, t):
    """``E^Q[max(x0 e^{gt}, X_t)] / x0``."""
    a = spec.alpha
    sig = spec.sigma
    rt = np.sqrt(t)
    return np.exp(spec.g * t) * norm_cdf((sig / 2 + a / sig) * rt) + np.exp((spec.r - spec.c) * t) * norm_cdf(
        (sig / 2 - a / sig) * rt
    )


def european_value_U0(spec: ContractSpec, mortality: MortalityModel, n_steps: int = 2000) -> float:
    """Value of the contract without surrender: death benefit plus maturity benefit."""
    n_steps += n_steps % 2
    t = np.linspace(0.0, spec.T, n_steps + 1)
    surv = mortality.survival(0.0, t)
    bracket = _guarantee_bracket(spec, t)
    death = simpson(np.exp(-spec.r * t) * surv * mortality.force(t) * bracket, x=t)
    maturity = np.exp(-spec.r * spec.T) * surv[-1] * bracket[-1]
    return float(spec.x0 * (death + maturity))
