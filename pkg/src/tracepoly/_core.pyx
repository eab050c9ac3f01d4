# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels.  Pure-Python twins live in ``_pykernels.py``."""

from libc.math cimport sqrt, floor

import numpy as np


def jacobi_eigh(a_in, double tol=1e-14, int max_sweeps=100):
    """Cyclic Jacobi eigendecomposition of a small symmetric matrix.

    Returns ``(w, v)`` with eigenvalues ascending and eigenvectors as columns.
    """
    cdef double[:, ::1] a = np.array(a_in, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = a.shape[0]
    if a.shape[1] != n:
        raise ValueError("matrix must be square")
    v_arr = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] v = v_arr
    cdef Py_ssize_t p, q, k, sweep
    cdef double off, scale, apq, app, aqq, theta, t, c, s, akp, akq
    for sweep in range(max_sweeps):
        off = 0.0
        scale = 0.0
        for p in range(n):
            scale += a[p, p] * a[p, p]
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if off <= tol * tol * (scale + off) or off == 0.0:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                if theta >= 0:
                    t = 1.0 / (theta + sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + sqrt(1.0 + theta * theta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    akp = a[p, k]
                    akq = a[q, k]
                    a[p, k] = c * akp - s * akq
                    a[q, k] = s * akp + c * akq
                for k in range(n):
                    akp = v[k, p]
                    akq = v[k, q]
                    v[k, p] = c * akp - s * akq
                    v[k, q] = s * akp + c * akq
    w_arr = np.array([a[k, k] for k in range(n)], dtype=np.float64)
    order = np.argsort(w_arr, kind="stable")
    return w_arr[order], v_arr[:, order]


def scan_denominators(lam_in, double beta0_abs, double eps_tilde,
                      long long n_start, long long n_stop):
    """First ``n`` in ``[n_start, n_stop)`` admitting an apportionment.

    For each ``n`` the ``n - 1`` unit masses are split by largest remainder of
    ``n * lam``, which minimises ``max |n lam_i - m_i|``.  Returns ``(n, m)`` or
    ``(-1, None)``.
    """
    cdef double[::1] lam = np.ascontiguousarray(lam_in, dtype=np.float64)
    cdef Py_ssize_t k = lam.shape[0]
    cdef double[::1] frac = np.empty(k, dtype=np.float64)
    cdef double[::1] flo = np.empty(k, dtype=np.float64)
    cdef signed char[::1] taken = np.zeros(k, dtype=np.int8)
    cdef long long n, seats, s
    cdef Py_ssize_t i, best
    cdef double q, total_floor, bound, dev, worst, bestf
    for n in range(max(n_start, 1), n_stop):
        bound = n * eps_tilde
        if not (beta0_abs < bound):
            continue
        total_floor = 0.0
        for i in range(k):
            q = n * lam[i]
            flo[i] = floor(q)
            frac[i] = q - flo[i]
            total_floor += flo[i]
            taken[i] = 0
        seats = (n - 1) - <long long>total_floor
        if seats < 0:
            # all quotas integral: one atom must give up a unit
            if not (1.0 < bound):
                continue
            best = 0
            for i in range(k):
                if flo[i] > flo[best]:
                    best = i
            if flo[best] < 1.0:
                continue
            m = np.asarray(flo).astype(np.int64)
            m[best] -= 1
            return n, m
        for s in range(seats):
            best = -1
            bestf = -1.0
            for i in range(k):
                if not taken[i] and frac[i] > bestf:
                    bestf = frac[i]
                    best = i
            taken[best] = 1
        worst = 0.0
        for i in range(k):
            dev = (1.0 - frac[i]) if taken[i] else frac[i]
            if dev > worst:
                worst = dev
        if worst < bound:
            m = np.asarray(flo).astype(np.int64) + np.asarray(taken).astype(np.int64)
            return n, m
    return -1, None


def eval_points(exps_in, coeffs_in, points_in):
    """Evaluate ``sum_t c_t prod_j p_j ** e_tj`` at every row of ``points``."""
    cdef long long[:, ::1] exps = np.ascontiguousarray(exps_in, dtype=np.int64)
    cdef double[::1] coeffs = np.ascontiguousarray(coeffs_in, dtype=np.float64)
    cdef double[:, ::1] pts = np.ascontiguousarray(points_in, dtype=np.float64)
    cdef Py_ssize_t nt = exps.shape[0], w = exps.shape[1], npts = pts.shape[0]
    if pts.shape[1] < w:
        raise ValueError("points have fewer coordinates than the polynomial needs")
    out_arr = np.zeros(npts, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t r, t, j, e
    cdef double acc, term, base
    for r in range(npts):
        acc = 0.0
        for t in range(nt):
            term = coeffs[t]
            for j in range(w):
                e = exps[t, j]
                if e:
                    base = pts[r, j]
                    while e:
                        term *= base
                        e -= 1
            acc += term
        out[r] = acc
    return out_arr
