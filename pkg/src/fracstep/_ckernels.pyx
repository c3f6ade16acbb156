# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernel loops in ``_kernels_py``.

Same functions, same signatures, same results to rounding.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1, log1p, pow, fabs

cnp.import_array()

SERIES_SWITCH = 0.5
cdef int _SERIES_MAX = 400


cdef inline double _pow_diff(double r1, double w, double q) nogil:
    return pow(r1, q) * expm1(q * log1p(w / r1))


cdef double _b_int(double r1, double w, double beta) nogil:
    cdef double m = r1 + 0.5 * w
    cdef double x = 0.5 * w / m
    cdef double coef, xp, x2, total, term
    cdef int j
    if x > 0.5:
        return (m * _pow_diff(r1, w, 1.0 - beta) / (1.0 - beta)
                - _pow_diff(r1, w, 2.0 - beta) / (2.0 - beta))
    x2 = x * x
    coef = -beta
    xp = x * x2
    total = coef * xp / 3.0
    j = 1
    while j < _SERIES_MAX:
        coef *= (-beta - j) * (-beta - j - 1) / ((j + 1.0) * (j + 2.0))
        j += 2
        xp *= x2
        term = coef * xp / (j + 2)
        total += term
        if fabs(term) <= 1e-18 * fabs(total):
            break
    return -2.0 * pow(m, 2.0 - beta) * total


def b_integral(r1, w, double beta):
    r1a, wa = np.broadcast_arrays(np.asarray(r1, dtype=float), np.asarray(w, dtype=float))
    cdef const double[::1] rv = np.ascontiguousarray(r1a).ravel()
    cdef const double[::1] wv = np.ascontiguousarray(wa).ravel()
    out = np.empty(rv.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    for i in range(rv.shape[0]):
        ov[i] = _b_int(rv[i], wv[i], beta)
    return out.reshape(r1a.shape)


cdef void _ab_row(const double[::1] t, double theta, double beta, int n,
                  double g2, double g1, double[::1] a, double[::1] b) nogil:
    cdef double tn = t[n] - theta * (t[n] - t[n - 1])
    cdef double r1, tk, tk1
    cdef int k
    for k in range(n - 1):
        # cell k+1 = [t_k, t_{k+1}]
        tk = t[k + 1] - t[k]
        r1 = tn - t[k + 1]
        a[k] = _pow_diff(r1, tk, 1.0 - beta) / (tk * g2)
        tk1 = t[k + 2] - t[k + 1]
        b[k] = 2.0 * _b_int(r1, tk, beta) / (tk * (tk + tk1) * g1)
    tk = t[n] - t[n - 1]
    a[n - 1] = pow((1.0 - theta) * tk, 1.0 - beta) / (tk * g2)


def ab_row(nodes, double theta, double beta, int n, double gamma_2mb, double gamma_1mb):
    cdef const double[::1] t = np.ascontiguousarray(nodes, dtype=float)
    a = np.empty(n)
    b = np.empty(n - 1)
    cdef double[::1] av = a
    cdef double[::1] bv = b if n > 1 else np.empty(1)
    _ab_row(t, theta, beta, n, gamma_2mb, gamma_1mb, av, bv)
    return a, b


cdef void _assemble(const double[::1] a, const double[::1] b, const double[::1] ratios,
                    int n, double[::1] out) nogil:
    cdef int k
    for k in range(n):
        out[k] = a[k]
    for k in range(n - 1):
        out[k] -= b[k]
        out[k + 1] += ratios[k] * b[k]


def assemble_row(a, b, ratios):
    cdef int n = a.shape[0]
    out = np.empty(n)
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=float) if n > 1 else np.empty(1)
    cdef const double[::1] rv = np.ascontiguousarray(ratios, dtype=float) if n > 1 else np.empty(1)
    _assemble(np.ascontiguousarray(a, dtype=float), bv, rv, n, out)
    return out


def alikhanov_table(nodes, double theta, double beta, int nmax, double gamma_2mb, double gamma_1mb):
    cdef const double[::1] t = np.ascontiguousarray(nodes, dtype=float)
    steps = np.diff(np.asarray(nodes, dtype=float))
    ratios_arr = np.ascontiguousarray(steps[:-1] / steps[1:]) if steps.shape[0] > 1 else np.zeros(1)
    cdef double[::1] ratios = ratios_arr
    tab = np.zeros((nmax, nmax))
    cdef double[:, ::1] tv = tab
    cdef double[::1] a = np.empty(nmax)
    cdef double[::1] b = np.empty(max(nmax, 1))
    cdef int n, k
    with nogil:
        for n in range(1, nmax + 1):
            _ab_row(t, theta, beta, n, gamma_2mb, gamma_1mb, a, b)
            for k in range(n):
                tv[n - 1, k] = a[k]
            for k in range(n - 1):
                tv[n - 1, k] -= b[k]
                tv[n - 1, k + 1] += ratios[k] * b[k]
    return tab


def complementary_table(table, int nmax):
    cdef const double[:, ::1] A = np.ascontiguousarray(table, dtype=float)
    P = np.zeros((nmax, nmax))
    cdef double[:, ::1] pv = P
    cdef int n, k, j
    cdef double acc
    with nogil:
        for n in range(1, nmax + 1):
            for k in range(n, 0, -1):
                acc = 0.0
                for j in range(k, n):
                    acc += pv[n - 1, j] * A[j, k - 1]
                pv[n - 1, k - 1] = (1.0 - acc) / A[k - 1, k - 1]
    return P


def soe_cell_weights(s, double tau):
    cdef const double[::1] sv = np.ascontiguousarray(s, dtype=float).ravel()
    cdef Py_ssize_t i, n = sv.shape[0]
    decay = np.empty(n)
    e0 = np.empty(n)
    g = np.empty(n)
    cdef double[::1] dv = decay, ev = e0, gv = g
    cdef double z, d, fac, es, gs
    cdef int j
    with nogil:
        for i in range(n):
            z = sv[i] * tau
            d = exp(-z)
            dv[i] = d
            if z >= 1.0:
                ev[i] = -expm1(-z) / z
                gv[i] = 0.5 * ev[i] - (1.0 - d * (1.0 + z)) / (z * z)
            else:
                fac = 1.0
                es = 1.0
                gs = 0.0
                for j in range(1, 22):
                    fac *= -z / j
                    es += fac / (j + 1)
                    gs += fac * (-j / (2.0 * (j + 1) * (j + 2)))
                ev[i] = es
                gv[i] = gs
            ev[i] *= tau
            gv[i] *= tau * tau
    return decay, e0, g


def soe_update(double[:, ::1] U, const double[::1] decay, const double[::1] e0,
               const double[::1] g, const double[::1] c1, const double[::1] c2):
    cdef Py_ssize_t i, k
    cdef Py_ssize_t ns = U.shape[0], m = U.shape[1]
    cdef double d, e, gg
    with nogil:
        for i in range(ns):
            d = decay[i]
            e = e0[i]
            gg = g[i]
            for k in range(m):
                U[i, k] = d * U[i, k] + e * c1[k] + gg * c2[k]


def soe_history(const double[:, ::1] U, const double[::1] factor):
    cdef Py_ssize_t i, k
    cdef Py_ssize_t ns = U.shape[0], m = U.shape[1]
    out = np.zeros(m)
    cdef double[::1] ov = out
    cdef double f
    with nogil:
        for i in range(ns):
            f = factor[i]
            for k in range(m):
                ov[k] += f * U[i, k]
    return out
