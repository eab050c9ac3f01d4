"""Pure-Python/numpy twins of the compiled kernels in ``_core.pyx``.

Same signatures and results; used when the extension is not built.
"""

from __future__ import annotations

import math

import numpy as np


def jacobi_eigh(a_in, tol: float = 1e-14, max_sweeps: int = 100):
    a = [list(map(float, row)) for row in np.asarray(a_in, dtype=np.float64)]
    n = len(a)
    if any(len(row) != n for row in a):
        raise ValueError("matrix must be square")
    v = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    for _ in range(max_sweeps):
        scale = sum(a[p][p] ** 2 for p in range(n))
        off = sum(a[p][q] ** 2 for p in range(n) for q in range(p + 1, n))
        if off == 0.0 or off <= tol * tol * (scale + off):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                if apq == 0.0:
                    continue
                theta = (a[q][q] - a[p][p]) / (2.0 * apq)
                if theta >= 0:
                    t = 1.0 / (theta + math.sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + math.sqrt(1.0 + theta * theta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for row in a:
                    akp, akq = row[p], row[q]
                    row[p] = c * akp - s * akq
                    row[q] = s * akp + c * akq
                rp, rq = a[p], a[q]
                for k in range(n):
                    akp, akq = rp[k], rq[k]
                    rp[k] = c * akp - s * akq
                    rq[k] = s * akp + c * akq
                for row in v:
                    akp, akq = row[p], row[q]
                    row[p] = c * akp - s * akq
                    row[q] = s * akp + c * akq
    w = np.array([a[k][k] for k in range(n)], dtype=np.float64)
    order = np.argsort(w, kind="stable")
    return w[order], np.array(v, dtype=np.float64).reshape(n, n)[:, order]


def scan_denominators(lam_in, beta0_abs: float, eps_tilde: float, n_start: int, n_stop: int,
                      chunk: int = 65536):
    lam = np.ascontiguousarray(lam_in, dtype=np.float64)
    k = lam.shape[0]
    start = max(int(n_start), 1)
    while start < n_stop:
        ns = np.arange(start, min(start + chunk, n_stop), dtype=np.int64)
        bound = ns * eps_tilde
        q = ns[:, None] * lam[None, :]
        flo = np.floor(q)
        frac = q - flo
        seats = (ns - 1) - flo.sum(axis=1).astype(np.int64)
        # rank fractions descending (stable, lowest index first on ties)
        order = np.argsort(-frac, axis=1, kind="stable")
        rank = np.empty_like(order)
        np.put_along_axis(rank, order, np.arange(k)[None, :].repeat(len(ns), 0), axis=1)
        taken = rank < np.maximum(seats, 0)[:, None]
        dev = np.where(taken, 1.0 - frac, frac).max(axis=1)
        dev = np.where(seats < 0, 1.0, dev)
        ok = (beta0_abs < bound) & (dev < bound)
        ok &= (seats >= 0) | (flo.max(axis=1) >= 1.0)
        hits = np.flatnonzero(ok)
        if hits.size:
            i = hits[0]
            m = flo[i].astype(np.int64) + taken[i].astype(np.int64)
            if seats[i] < 0:
                m[int(np.argmax(flo[i]))] -= 1
            return int(ns[i]), m
        start += chunk
    return -1, None


def eval_points(exps_in, coeffs_in, points_in):
    exps = np.asarray(exps_in, dtype=np.int64)
    coeffs = np.asarray(coeffs_in, dtype=np.float64)
    pts = np.asarray(points_in, dtype=np.float64)
    w = exps.shape[1] if exps.ndim == 2 else 0
    if pts.shape[1] < w:
        raise ValueError("points have fewer coordinates than the polynomial needs")
    out = np.zeros(pts.shape[0], dtype=np.float64)
    for t in range(exps.shape[0]):
        term = np.full(pts.shape[0], coeffs[t])
        for j in range(w):
            e = int(exps[t, j])
            if e:
                term = term * pts[:, j] ** e
        out += term
    return out
