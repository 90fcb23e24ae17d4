"""Pure numpy implementation of the Picard sweep kernels.

Mirrors ``_kernels.pyx`` argument for argument; used when the compiled
extension is unavailable or ``VA_ENGINE_PURE_PYTHON=1``.
"""

import math

import numpy as np
from scipy.special import erfc

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def _ncdf(x):
    return 0.5 * erfc(-x * _INV_SQRT2)


def _residual_rows(rows, theta, b, W, vs, m2, gs, mu, f, termc, vT, m2T, gT, half):
    """Residual of the discretised boundary equation at nodes ``rows`` for levels ``theta``."""
    lt = np.log(theta)
    d2 = (lt + m2T[rows]) / vT[rows]
    out = termc[rows] * (theta * gT[rows] * _ncdf(d2 + vT[rows]) - _ncdf(d2))

    bpos = b > 0.0
    lnb = np.log(np.where(bpos, b, 1.0))
    lnm = np.log(np.maximum(b, 1.0))
    vsr = vs[rows]
    base = lt[:, None] + m2[rows]
    dm = (base - lnm) / vsr
    db = (base - lnb) / vsr
    tail_b = np.where(bpos, _ncdf(db), 1.0)
    kern = mu * (theta[:, None] * gs[rows] * _ncdf(dm + vsr) - _ncdf(dm)) + f * tail_b
    out = out + np.einsum("ij,ij->i", W[rows], kern)
    out = out + half[rows] * (mu[rows] * np.maximum(theta - 1.0, 0.0) + f[rows])
    return out


def residuals(theta, b, W, vs, m2, gs, mu, f, termc, vT, m2T, gT, half):
    rows = np.arange(W.shape[0])
    return _residual_rows(rows, np.asarray(theta, dtype=float), b, W, vs, m2, gs, mu, f, termc, vT, m2T, gT, half)


def _bisect(rows, b, hcap, args, max_iter, xtol):
    lo = np.full(rows.size, 1e-10)
    hi = np.maximum(hcap[rows], 1e-10)
    r_lo = _residual_rows(rows, lo, b, *args)
    r_hi = _residual_rows(rows, hi, b, *args)
    active = np.ones(rows.size, dtype=bool)
    for _ in range(max_iter):
        active &= (hi - lo) >= xtol
        if not active.any():
            break
        idx = np.flatnonzero(active)
        mid = 0.5 * (lo[idx] + hi[idx])
        up = _residual_rows(rows[idx], mid, b, *args) > 0.0
        hi[idx] = np.where(up, mid, hi[idx])
        lo[idx] = np.where(up, lo[idx], mid)
    new = 0.5 * (lo + hi)
    new = np.where(r_hi < 0.0, hcap[rows], new)
    new = np.where(r_lo > 0.0, 0.0, new)
    return np.where(hcap[rows] <= 1e-10, 0.0, new)


def picard_sweep(b_old, hcap, W, vs, m2, gs, mu, f, termc, vT, m2T, gT, half,
                 gauss_seidel=False, max_iter=64, xtol=1e-10):
    """One sweep over nodes ``0..n-1``; node ``n`` is copied through unchanged."""
    args = (W, vs, m2, gs, mu, f, termc, vT, m2T, gT, half)
    n = W.shape[0]
    b_new = np.array(b_old, dtype=float, copy=True)
    if not gauss_seidel:
        b_new[:n] = _bisect(np.arange(n), b_old, hcap, args, max_iter, xtol)
        return b_new
    for j in range(n - 1, -1, -1):
        b_new[j] = _bisect(np.array([j]), b_new, hcap, args, max_iter, xtol)[0]
    return b_new
