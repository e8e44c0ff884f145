# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled mixture-evaluation kernels (see _kernels_py.py for the contract)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, ceil, exp, floor, log, sqrt

cnp.import_array()

IMPLEMENTATION = "compiled"

cdef double LOG_2PI = 1.8378770664093453
# Log-sum-exp terms this far below the running maximum are dropped; the
# relative error is below K * exp(-45) for K components.
cdef double DROP = 45.0


def gm_logpdf_points(double[:, ::1] points, double[:, ::1] means,
                     long[::1] cov_index, double[:, :, ::1] chol,
                     double[::1] half_logdet, double[::1] logw):
    cdef Py_ssize_t n_points = points.shape[0]
    cdef Py_ssize_t dim = points.shape[1]
    cdef Py_ssize_t n_comp = means.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n_points)
    cdef double[::1] out_view = out
    cdef double[::1] z = np.empty(dim)
    cdef Py_ssize_t m, k, r, c
    cdef long g
    cdef double norm_const = -0.5 * dim * LOG_2PI
    cdef double run_max, run_sum, term, quad, acc, base, diff

    if dim == 2:
        _logpdf_points_2d(points, means, cov_index, chol, half_logdet, logw, out_view)
        return out

    for m in range(n_points):
        run_max = -INFINITY
        run_sum = 0.0
        for k in range(n_comp):
            base = logw[k]
            if base == -INFINITY:
                continue
            g = cov_index[k]
            base += norm_const - half_logdet[g]
            quad = 0.0
            for r in range(dim):
                acc = points[m, r] - means[k, r]
                for c in range(r):
                    acc -= chol[g, r, c] * z[c]
                z[r] = acc / chol[g, r, r]
                quad += z[r] * z[r]
                # quad only grows: once the term cannot affect the running
                # sum, abandon the substitution early.
                if base - 0.5 * quad < run_max - DROP:
                    quad = -1.0
                    break
            if quad < 0.0:
                continue
            term = base - 0.5 * quad
            if term > run_max:
                if run_max != -INFINITY:
                    run_sum = run_sum * exp(run_max - term) + 1.0
                else:
                    run_sum = 1.0
                run_max = term
            else:
                diff = term - run_max
                if diff > -DROP:
                    run_sum += exp(diff)
        if run_max == -INFINITY:
            out_view[m] = -INFINITY
        else:
            out_view[m] = run_max + log(run_sum)
    return out


cdef void _logpdf_points_2d(double[:, ::1] points, double[:, ::1] means,
                            long[::1] cov_index, double[:, :, ::1] chol,
                            double[::1] half_logdet, double[::1] logw,
                            double[::1] out) noexcept:
    """Dimension-2 specialization (the metric hot path).

    Per point: a branchless pass fills a term buffer (vectorizable), then a
    max scan and a guarded exponential-accumulation pass finish the
    log-sum-exp.
    """
    cdef Py_ssize_t n_points = points.shape[0]
    cdef Py_ssize_t n_comp = means.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] flat = np.empty((7, n_comp))
    cdef double[::1] mx = flat[0]
    cdef double[::1] my = flat[1]
    cdef double[::1] base = flat[2]
    cdef double[::1] inv00 = flat[3]
    cdef double[::1] l10 = flat[4]
    cdef double[::1] inv11 = flat[5]
    cdef double[::1] term = flat[6]
    cdef Py_ssize_t m, k
    cdef long g
    cdef double px, py, z1, z2, run_max, run_sum, diff

    for k in range(n_comp):
        g = cov_index[k]
        mx[k] = means[k, 0]
        my[k] = means[k, 1]
        base[k] = logw[k] - half_logdet[g] - LOG_2PI
        inv00[k] = 1.0 / chol[g, 0, 0]
        l10[k] = chol[g, 1, 0]
        inv11[k] = 1.0 / chol[g, 1, 1]

    for m in range(n_points):
        px = points[m, 0]
        py = points[m, 1]
        for k in range(n_comp):
            z1 = (px - mx[k]) * inv00[k]
            z2 = ((py - my[k]) - l10[k] * z1) * inv11[k]
            term[k] = base[k] - 0.5 * (z1 * z1 + z2 * z2)
        run_max = -INFINITY
        for k in range(n_comp):
            if term[k] > run_max:
                run_max = term[k]
        if run_max == -INFINITY:
            out[m] = -INFINITY
            continue
        run_sum = 0.0
        for k in range(n_comp):
            diff = term[k] - run_max
            if diff > -DROP:
                run_sum += exp(diff)
        out[m] = run_max + log(run_sum)


def accumulate_density_2d(double[:, ::1] means, long[::1] cov_index,
                          double[:, :, ::1] chol, double[::1] half_logdet,
                          double[::1] weights,
                          double x0, double dx, int nx,
                          double y0, double dy, int ny,
                          double radius):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((ny, nx))
    cdef double[:, ::1] out_view = out
    cdef Py_ssize_t n_comp = means.shape[0]
    cdef Py_ssize_t k, i, j
    cdef long g
    cdef Py_ssize_t ix0, ix1, iy0, iy1
    cdef double q_cap = radius * radius
    cdef double w, l00, l10, l11, halfwidth, mx, my, scale, z1, z2, quad, ynode

    for k in range(n_comp):
        w = weights[k]
        if w == 0.0:
            continue
        g = cov_index[k]
        l00 = chol[g, 0, 0]
        l10 = chol[g, 1, 0]
        l11 = chol[g, 1, 1]
        halfwidth = radius * sqrt(l00 * l00 + l10 * l10 + l11 * l11)
        mx = means[k, 0]
        my = means[k, 1]
        ix0 = <Py_ssize_t>ceil((mx - halfwidth - x0) / dx)
        ix1 = <Py_ssize_t>floor((mx + halfwidth - x0) / dx)
        iy0 = <Py_ssize_t>ceil((my - halfwidth - y0) / dy)
        iy1 = <Py_ssize_t>floor((my + halfwidth - y0) / dy)
        if ix0 < 0:
            ix0 = 0
        if ix1 > nx - 1:
            ix1 = nx - 1
        if iy0 < 0:
            iy0 = 0
        if iy1 > ny - 1:
            iy1 = ny - 1
        if ix0 > ix1 or iy0 > iy1:
            continue
        scale = w * exp(-half_logdet[g] - LOG_2PI)
        for i in range(iy0, iy1 + 1):
            ynode = y0 + dy * i
            for j in range(ix0, ix1 + 1):
                z1 = (x0 + dx * j - mx) / l00
                z2 = ((ynode - my) - l10 * z1) / l11
                quad = z1 * z1 + z2 * z2
                if quad <= q_cap:
                    out_view[i, j] += scale * exp(-0.5 * quad)
    return out
