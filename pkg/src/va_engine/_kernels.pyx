# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Picard sweep kernels; same interface as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport erfc, log, fmax

cnp.import_array()

cdef double INV_SQRT2 = 0.7071067811865476


cdef inline double ncdf(double x) nogil:
    return 0.5 * erfc(-x * INV_SQRT2)


cdef double residual_at(Py_ssize_t j, double theta, const double[::1] lnb, const double[::1] lnm,
                        const double[::1] b, const double[:, ::1] W, const double[:, ::1] vs,
                        const double[:, ::1] m2, const double[:, ::1] gs, const double[::1] mu,
                        const double[::1] f, const double[::1] termc, const double[::1] vT,
                        const double[::1] m2T, const double[::1] gT, const double[::1] half) nogil:
    cdef Py_ssize_t i, ncol = W.shape[1]
    cdef double lt = log(theta)
    cdef double d2 = (lt + m2T[j]) / vT[j]
    cdef double acc = termc[j] * (theta * gT[j] * ncdf(d2 + vT[j]) - ncdf(d2))
    cdef double base, v, dm, tail_b, kern
    for i in range(j + 1, ncol):
        if W[j, i] == 0.0:
            continue
        v = vs[j, i]
        base = lt + m2[j, i]
        dm = (base - lnm[i]) / v
        if b[i] > 0.0:
            tail_b = ncdf((base - lnb[i]) / v)
        else:
            tail_b = 1.0
        kern = mu[i] * (theta * gs[j, i] * ncdf(dm + v) - ncdf(dm)) + f[i] * tail_b
        acc += W[j, i] * kern
    acc += half[j] * (mu[j] * fmax(theta - 1.0, 0.0) + f[j])
    return acc


def residuals(theta, b, W, vs, m2, gs, mu, f, termc, vT, m2T, gT, half):
    cdef const double[::1] th = np.ascontiguousarray(theta, dtype=np.float64)
    cdef const double[::1] bb = np.ascontiguousarray(b, dtype=np.float64)
    cdef double[::1] lnb = np.log(np.where(np.asarray(bb) > 0, bb, 1.0))
    cdef double[::1] lnm = np.log(np.maximum(bb, 1.0))
    cdef Py_ssize_t j, n = W.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    for j in range(n):
        o[j] = residual_at(j, th[j], lnb, lnm, bb, W, vs, m2, gs, mu, f, termc, vT, m2T, gT, half)
    return out


def picard_sweep(b_old, hcap, W, vs, m2, gs, mu, f, termc, vT, m2T, gT, half,
                 bint gauss_seidel=False, int max_iter=64, double xtol=1e-10):
    cdef Py_ssize_t n = W.shape[0], j, it
    b_new_arr = np.array(b_old, dtype=np.float64, copy=True)
    cdef double[::1] b_new = b_new_arr
    src_arr = b_new_arr if gauss_seidel else np.array(b_old, dtype=np.float64, copy=True)
    cdef double[::1] src = src_arr
    lnb_arr = np.log(np.where(src_arr > 0, src_arr, 1.0))
    lnm_arr = np.log(np.maximum(src_arr, 1.0))
    cdef double[::1] lnb = lnb_arr
    cdef double[::1] lnm = lnm_arr
    cdef const double[::1] hc = np.ascontiguousarray(hcap, dtype=np.float64)
    cdef const double[:, ::1] W_ = W
    cdef const double[:, ::1] vs_ = vs
    cdef const double[:, ::1] m2_ = m2
    cdef const double[:, ::1] gs_ = gs
    cdef const double[::1] mu_ = mu
    cdef const double[::1] f_ = f
    cdef const double[::1] termc_ = termc
    cdef const double[::1] vT_ = vT
    cdef const double[::1] m2T_ = m2T
    cdef const double[::1] gT_ = gT
    cdef const double[::1] half_ = half
    cdef double lo, hi, mid, r_lo, r_hi, val
    with nogil:
        for j in range(n - 1, -1, -1):
            if hc[j] <= 1e-10:
                val = 0.0
            else:
                lo = 1e-10
                hi = hc[j]
                r_lo = residual_at(j, lo, lnb, lnm, src, W_, vs_, m2_, gs_, mu_, f_, termc_, vT_, m2T_, gT_, half_)
                if r_lo > 0.0:
                    val = 0.0
                else:
                    r_hi = residual_at(j, hi, lnb, lnm, src, W_, vs_, m2_, gs_, mu_, f_, termc_, vT_, m2T_, gT_, half_)
                    if r_hi < 0.0:
                        val = hc[j]
                    else:
                        for it in range(max_iter):
                            if hi - lo < xtol:
                                break
                            mid = 0.5 * (lo + hi)
                            if residual_at(j, mid, lnb, lnm, src, W_, vs_, m2_, gs_, mu_, f_, termc_, vT_, m2T_, gT_, half_) > 0.0:
                                hi = mid
                            else:
                                lo = mid
                        val = 0.5 * (lo + hi)
            b_new[j] = val
            if gauss_seidel:
                # src aliases b_new; refresh cached logs for the node just solved
                if val > 0.0:
                    lnb[j] = log(val)
                else:
                    lnb[j] = 0.0
                lnm[j] = log(fmax(val, 1.0))
    return b_new_arr
