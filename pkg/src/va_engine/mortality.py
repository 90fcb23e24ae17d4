"""Deterministic force-of-mortality models and survival probabilities.

Time ``t`` is measured in years since contract issue; the model carries the
age at issue ``eta`` so that ``force(t)`` is the hazard at attained age
``eta + t``.  A proportional-hazard factor ``hazard_factor`` scales the whole
force by ``1 + hazard_factor``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.integrate import simpson

__all__ = [
    "GompertzMakeham",
    "ConstantForce",
    "MortalityModel",
    "force_of_mortality",
    "survival_probability",
    "aging_rate_bound",
    "life_expectancy",
    "MAX_AGE",
]

MAX_AGE = 120.0


@dataclass(frozen=True)
class GompertzMakeham:
    """Hazard ``A + B * C**age``."""

    A: float = 0.0001
    B: float = 0.00035
    C: float = 1.075

    def __post_init__(self):
        if self.A < 0 or self.B <= 0 or self.C <= 1:
            raise ValueError(
                f"Gompertz-Makeham needs A >= 0, B > 0, C > 1 (got A={self.A}, B={self.B}, C={self.C})"
            )


@dataclass(frozen=True)
class ConstantForce:
    mu0: float

    def __post_init__(self):
        if self.mu0 < 0:
            raise ValueError(f"constant force must be non-negative, got {self.mu0}")


Law = Union[GompertzMakeham, ConstantForce]


@dataclass(frozen=True)
class MortalityModel:
    """Force of mortality for a policyholder aged ``eta`` at issue.

    Args:
        law: parametric hazard as a function of attained age.
        eta: age at issue in years.
        hazard_factor: proportional-hazard shift; the force is multiplied by
            ``1 + hazard_factor``.  Must exceed -1.
    """

    law: Law = GompertzMakeham()
    eta: float = 50.0
    hazard_factor: float = 0.0

    def __post_init__(self):
        if self.hazard_factor <= -1:
            raise ValueError(f"hazard_factor must be > -1, got {self.hazard_factor}")
        if self.eta < 0:
            raise ValueError(f"eta must be non-negative, got {self.eta}")

    @property
    def scale(self) -> float:
        return 1.0 + self.hazard_factor

    def force(self, t):
        """Hazard rate at ``t`` years after issue (vectorised)."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("force of mortality is defined for t >= 0 only")
        law = self.law
        if isinstance(law, ConstantForce):
            out = np.full_like(t, self.scale * law.mu0)
        else:
            out = self.scale * (law.A + law.B * law.C ** (self.eta + t))
        return out if out.ndim else float(out)

    def force_derivative(self, t):
        t = np.asarray(t, dtype=float)
        law = self.law
        if isinstance(law, ConstantForce):
            out = np.zeros_like(t)
        else:
            out = self.scale * law.B * math.log(law.C) * law.C ** (self.eta + t)
        return out if out.ndim else float(out)

    def cumulative_hazard(self, t, s):
        """``int_0^s force(t + u) du`` in closed form."""
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        law = self.law
        if isinstance(law, ConstantForce):
            out = self.scale * law.mu0 * s
        else:
            lnc = math.log(law.C)
            # expm1 keeps precision for small s
            out = self.scale * (law.A * s + law.B * law.C ** (self.eta + t) * np.expm1(s * lnc) / lnc)
        return out if out.ndim else float(out)

    def survival(self, t, s):
        """Probability ``_s p_t`` of surviving ``s`` more years given alive at ``t``."""
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        if np.any(t < 0) or np.any(s < 0):
            raise ValueError("survival probability needs t >= 0 and s >= 0")
        out = np.exp(-self.cumulative_hazard(t, s))
        return out if np.ndim(out) else float(out)

    def aging_rate_bound(self, T: float) -> float:
        """A constant ``lam >= 0`` with ``force'(t) <= lam * force(t)`` on ``[0, T]``."""
        if isinstance(self.law, ConstantForce):
            return 0.0
        # force'/force = B lnC C^a / (A + B C^a) <= lnC, attained when A = 0
        return math.log(self.law.C)

    def life_expectancy(self, max_age: float = MAX_AGE, step: float = 1.0 / 365.0) -> float:
        """Curtate-free expected remaining lifetime, truncated at ``max_age``."""
        horizon = max_age - self.eta
        if horizon <= 0:
            return 0.0
        n = int(math.ceil(horizon / step))
        n += n % 2  # Simpson wants an even number of panels
        s = np.linspace(0.0, horizon, n + 1)
        return float(simpson(self.survival(0.0, s), x=s))


def force_of_mortality(model: MortalityModel, t):
    return model.force(t)


def survival_probability(model: MortalityModel, t, s):
    return model.survival(t, s)


def aging_rate_bound(model: MortalityModel, T: float) -> float:
    return model.aging_rate_bound(T)


def life_expectancy(model: MortalityModel, max_age: float = MAX_AGE) -> float:
    return model.life_expectancy(max_age=max_age)
