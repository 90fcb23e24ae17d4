"""Independent oracles: Monte Carlo optimal stopping under both measures and
a Bermudan dynamic-programming solver.

Normals come from a counter-based Philox4x32-10 generator keyed by
``(seed, path pair, step)``, so results do not depend on how paths are split
across threads.  ``VA_ENGINE_THREADS`` caps the worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.interpolate import CubicSpline

from .boundary import Boundary
from .contract import ContractSpec, f_function
from .lognormal import GbmLaw, call_value
from .mortality import MortalityModel

__all__ = [
    "McConfig",
    "McEstimate",
    "DpResult",
    "philox4x32",
    "standard_normals",
    "simulate_gbm_paths",
    "mc_stopped_value",
    "mc_value_Q",
    "bermudan_dp_oracle",
    "dp_backward_step",
    "max_workers",
]

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_CHUNK = 8192


def philox4x32(counter, key, rounds: int = 10) -> np.ndarray:
    """Philox4x32 block function, vectorised over the trailing axis of ``counter``.

    Args:
        counter: array of shape ``(4, N)`` with 32-bit words.
        key: pair of 32-bit words.

    Returns:
        ``(4, N)`` uint32 array.
    """
    c = [np.asarray(w, dtype=np.uint64) & _MASK for w in counter]
    k0, k1 = int(key[0]) & 0xFFFFFFFF, int(key[1]) & 0xFFFFFFFF
    for r in range(rounds):
        if r:
            k0 = (k0 + _W0) & 0xFFFFFFFF
            k1 = (k1 + _W1) & 0xFFFFFFFF
        p0 = _M0 * c[0]
        p1 = _M1 * c[2]
        c = [
            (p1 >> _S32) ^ c[1] ^ np.uint64(k0),
            p1 & _MASK,
            (p0 >> _S32) ^ c[3] ^ np.uint64(k1),
            p0 & _MASK,
        ]
    return np.stack(c).astype(np.uint32)


def _uniform53(a, b):
    return ((a >> np.uint32(5)).astype(np.float64) * 67108864.0 + (b >> np.uint32(6))) * (1.0 / 9007199254740992.0)


def standard_normals(seed: int, index, step: int, stream: int = 0) -> np.ndarray:
    """One standard normal per entry of ``index`` at ``step`` (Box-Muller on Philox output)."""
    index = np.asarray(index, dtype=np.uint64)
    ctr = (
        np.full(index.shape, step, dtype=np.uint64),
        index & _MASK,
        index >> _S32,
        np.full(index.shape, stream, dtype=np.uint64),
    )
    x = philox4x32(ctr, (seed & 0xFFFFFFFF, (seed >> 32) & 0xFFFFFFFF))
    u1 = _uniform53(x[0], x[1])
    u2 = _uniform53(x[2], x[3])
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)


@dataclass(frozen=True)
class McConfig:
    n_paths: int = 100_000
    n_steps: int = 200
    seed: int = 20_240_601
    antithetic: bool = True

    def __post_init__(self):
        if self.n_paths < 2:
            raise ValueError("n_paths must be at least 2")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_paths: int
    seed: int


def max_workers() -> int:
    env = os.environ.get("VA_ENGINE_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(8, os.cpu_count() or 1))


def _shocks(config: McConfig, paths: np.ndarray, step: int) -> np.ndarray:
    if config.antithetic:
        xi = standard_normals(config.seed, paths // 2, step)
        return np.where(paths % 2 == 0, xi, -xi)
    return standard_normals(config.seed, paths, step)


def _run(config: McConfig, per_chunk) -> np.ndarray:
    """Evaluate ``per_chunk(paths)`` over contiguous path chunks; order-stable."""
    chunks = [np.arange(a, min(a + _CHUNK, config.n_paths), dtype=np.int64) for a in range(0, config.n_paths, _CHUNK)]
    workers = min(max_workers(), len(chunks))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(per_chunk, chunks))
    else:
        parts = [per_chunk(c) for c in chunks]
    return np.concatenate(parts)


def _estimate(values: np.ndarray, config: McConfig) -> McEstimate:
    if config.antithetic:
        n_pairs = values.size // 2
        units = 0.5 * (values[0 : 2 * n_pairs : 2] + values[1 : 2 * n_pairs : 2])
        if values.size % 2:
            units = np.append(units, values[-1])
    else:
        units = values
    se = float(np.std(units, ddof=1) / math.sqrt(units.size))
    return McEstimate(mean=float(np.mean(values)), std_error=se, n_paths=config.n_paths, seed=config.seed)


def simulate_gbm_paths(z0: float, drift: float, spec: ContractSpec, config: McConfig,
                       sigma: Optional[float] = None) -> np.ndarray:
    """Exact log-normal paths on ``[0, T]``, shape ``(n_paths, n_steps + 1)``.

    ``sigma`` overrides the contract volatility (``0`` gives deterministic paths).
    """
    if z0 <= 0:
        raise ValueError("z0 must be positive")
    sig = spec.sigma if sigma is None else float(sigma)
    dt = spec.T / config.n_steps
    paths = np.arange(config.n_paths, dtype=np.int64)
    out = np.empty((config.n_paths, config.n_steps + 1))
    out[:, 0] = z0
    lz = np.full(config.n_paths, math.log(z0))
    for k in range(config.n_steps):
        lz = lz + (drift - 0.5 * sig**2) * dt + sig * math.sqrt(dt) * _shocks(config, paths, k)
        out[:, k + 1] = np.exp(lz)
    return out


def _schedule(spec: ContractSpec, mortality: MortalityModel, n_steps: int, rate: float):
    t = np.linspace(0.0, spec.T, n_steps + 1)
    return t, np.exp(-rate * t) * mortality.survival(0.0, t), mortality.force(t), np.asarray(f_function(spec, mortality, t))


def mc_stopped_value(boundary: Boundary, spec: ContractSpec, mortality: MortalityModel,
                     config: McConfig = McConfig()) -> McEstimate:
    """Estimate ``w(0, 1)`` by stopping ``Z`` (drift ``alpha``) at the first grid time with ``Z <= b(t)``."""
    n = config.n_steps
    dt = spec.T / n
    t, disc, mu, f = _schedule(spec, mortality, n, spec.c)
    b = np.zeros_like(t) if boundary.empty else boundary(t)
    drift = (spec.alpha - 0.5 * spec.sigma**2) * dt
    vol = spec.sigma * math.sqrt(dt)

    def chunk(paths):
        z = np.ones(paths.size)
        alive = z > b[0]
        prev = disc[0] * (f[0] + mu[0] * np.maximum(z - 1.0, 0.0))
        acc = np.zeros(paths.size)
        for k in range(n):
            z = z * np.exp(drift + vol * _shocks(config, paths, k))
            cur = disc[k + 1] * (f[k + 1] + mu[k + 1] * np.maximum(z - 1.0, 0.0))
            acc += np.where(alive, 0.5 * dt * (prev + cur), 0.0)
            prev = cur
            if k + 1 < n:
                alive &= z > b[k + 1]
        return acc + np.where(alive, disc[n] * np.maximum(z - 1.0, 0.0), 0.0)

    return _estimate(_run(config, chunk), config)


def mc_value_Q(boundary: Boundary, spec: ContractSpec, mortality: MortalityModel,
               config: McConfig = McConfig()) -> McEstimate:
    """Estimate ``V0`` by simulating the account under the risk-neutral measure.

    Surrender happens at the first grid time with ``X >= l(t)``; death is
    integrated out, leaving a running death-benefit term.
    """
    n = config.n_steps
    dt = spec.T / n
    t, disc, mu, _ = _schedule(spec, mortality, n, spec.r)
    b = np.zeros_like(t) if boundary.empty else boundary(t)
    G = spec.x0 * np.exp(spec.g * t)
    keep = 1.0 - np.asarray(spec.penalty.value(t, spec.T))
    drift = (spec.r - spec.c - 0.5 * spec.sigma**2) * dt
    vol = spec.sigma * math.sqrt(dt)

    def stop(k, x):
        # X >= l(t) with l = G/b, written without dividing by b = 0
        return x * b[k] >= G[k]

    def chunk(paths):
        x = np.full(paths.size, spec.x0)
        stopped = stop(0, x)
        acc = np.where(stopped, keep[0] * x, 0.0)
        prev = disc[0] * mu[0] * np.maximum(G[0], x)
        for k in range(n):
            x = x * np.exp(drift + vol * _shocks(config, paths, k))
            cur = disc[k + 1] * mu[k + 1] * np.maximum(G[k + 1], x)
            acc += np.where(stopped, 0.0, 0.5 * dt * (prev + cur))
            prev = cur
            if k + 1 < n:
                now = ~stopped & stop(k + 1, x)
                acc += np.where(now, disc[k + 1] * keep[k + 1] * x, 0.0)
                stopped |= now
        return acc + np.where(stopped, 0.0, disc[n] * np.maximum(G[n], x))

    return _estimate(_run(config, chunk), config)


@dataclass(frozen=True)
class DpResult:
    w01: float
    times: np.ndarray
    boundary: np.ndarray
    z: np.ndarray
    w0: np.ndarray
    n_time: int
    n_space: int


def dp_backward_step(x: np.ndarray, w_next: Optional[np.ndarray], t: float, dt: float, spec: ContractSpec,
                     mortality: MortalityModel, n_gh: int = 32, kink: float = 0.0) -> np.ndarray:
    """Continuation value ``dt H(t, z) + e^{-c dt} p E[w_next(Z_dt)]`` on ``x = ln z``.

    ``w_next=None`` stands for the terminal payoff ``(z - 1)^+`` and uses the
    closed-form call.  Otherwise ``w_next - kink (z - 1)^+`` is integrated by
    Gauss-Hermite quadrature over a cubic spline in ``ln z`` (clamped at the
    grid ends) and the kink part in closed form, so the spline never has to
    follow the corner at ``z = 1`` left by the running reward.
    """
    a, sig = spec.alpha, spec.sigma
    z = np.exp(x)
    call = call_value(GbmLaw(z, dt, a, sig))
    if w_next is None:
        expect = call
    else:
        nodes, weights = hermegauss(n_gh)
        weights = weights / math.sqrt(2.0 * math.pi)
        shift = (a - 0.5 * sig**2) * dt + sig * math.sqrt(dt) * nodes
        q = np.clip(x[:, None] + shift[None, :], x[0], x[-1])
        smooth = w_next - kink * np.maximum(z - 1.0, 0.0)
        expect = CubicSpline(x, smooth)(q) @ weights + kink * call
    disc = math.exp(-spec.c * dt) * mortality.survival(t, dt)
    running = mortality.force(t) * np.maximum(z - 1.0, 0.0) + f_function(spec, mortality, t)
    return dt * running + disc * expect


def bermudan_dp_oracle(
    spec: ContractSpec,
    mortality: MortalityModel,
    n_time: int = 400,
    n_space: int = 801,
    n_gh: int = 32,
    exercise_every: int = 1,
    exercise: bool = True,
) -> DpResult:
    """Backward induction for ``w`` on a log-spaced ``z`` grid.

    The grid spans six standard deviations of ``ln Z_T`` beyond both the start
    ``z = 1`` and the mean.  Surrender is allowed at steps divisible by
    ``exercise_every`` (none when ``exercise`` is false).  The boundary
    estimate at each exercise date is the largest ``z`` where the continuation
    value is non-positive, ``0`` if none; dates without exercise carry ``nan``.
    """
    if n_time < 50 or n_space < 200:
        raise ValueError("DP oracle needs n_time >= 50 and n_space >= 200")
    if n_gh < 16:
        raise ValueError("need at least 16 Gauss-Hermite nodes")
    T, sig, a = spec.T, spec.sigma, spec.alpha
    dt = T / n_time
    width = 6.0 * sig * math.sqrt(T)
    drift_T = (a - 0.5 * sig**2) * T
    lo, hi = min(0.0, drift_T) - width, max(0.0, drift_T) + width
    x = np.linspace(lo, hi, n_space)
    if x[1] - x[0] > sig * math.sqrt(dt):
        raise ValueError("z grid too coarse to resolve a single step; raise n_space")
    z = np.exp(x)

    t = np.linspace(0.0, T, n_time + 1)
    b_est = np.zeros(n_time + 1)
    b_est[-1] = 1.0
    mu = mortality.force(t)
    w_next = None
    for j in range(n_time - 1, -1, -1):
        cont = dp_backward_step(x, w_next, t[j], dt, spec, mortality, n_gh, kink=dt * mu[j + 1])
        if exercise and j % exercise_every == 0:
            b_est[j] = _crossing(z, cont)
            w_next = np.maximum(cont, 0.0)
        else:
            b_est[j] = np.nan
            w_next = cont
    # the corner at z = 1 contributes nothing at z = 1 itself
    w01 = float(CubicSpline(x, w_next - dt * mu[0] * np.maximum(z - 1.0, 0.0))(0.0))
    return DpResult(w01=w01, times=t, boundary=b_est, z=z, w0=w_next, n_time=n_time, n_space=n_space)


def _crossing(z: np.ndarray, cont: np.ndarray) -> float:
    nonpos = np.flatnonzero(cont <= 0.0)
    if nonpos.size == 0:
        return 0.0
    i = int(nonpos[-1])
    if i == z.size - 1:
        return float(z[-1])
    # linear interpolation of the sign change between z[i] and z[i+1]
    c0, c1 = cont[i], cont[i + 1]
    return float(z[i] + (z[i + 1] - z[i]) * (-c0) / (c1 - c0))
