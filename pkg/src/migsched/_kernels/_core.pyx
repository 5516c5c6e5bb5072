# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled round-evaluation kernels; see _plain.py for the reference semantics."""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, pow

cnp.import_array()


cdef inline void _terms(double y, long n, double w_bar,
                        double* h, double* h1, double* exit_mult) nogil:
    cdef double rho = w_bar / y
    cdef double hh = 1.0, hh1 = 0.0, p = 1.0
    cdef long r
    for r in range(1, n):
        p *= rho
        hh += p
        hh1 += r * p
    h[0] = hh
    h1[0] = hh1
    exit_mult[0] = p * rho


def seg_eval(y, rounds, double m0, double w_bar, double k0, double alpha):
    """Energy and times of a segmented schedule; mirrors _plain.seg_eval."""
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef long[::1] nv = np.ascontiguousarray(rounds, dtype=np.int64)
    cdef Py_ssize_t d = yv.shape[0]
    cdef double e_dyn = 0.0, t_pre = 0.0, t_sc = 0.0, vol = m0
    cdef double h, h1, em, yu, t_u
    cdef Py_ssize_t u
    for u in range(d):
        yu = yv[u]
        _terms(yu, nv[u], w_bar, &h, &h1, &em)
        e_dyn += k0 * pow(yu, alpha - 1.0) * vol * h
        t_u = vol * h / yu
        if u < d - 1:
            t_pre += t_u
        else:
            t_sc = t_u
        vol *= em
    return e_dyn, t_pre, t_sc


def seg_eval_grad(y, rounds, double m0, double w_bar, double k0, double alpha):
    """seg_eval plus log-space gradients; mirrors _plain.seg_eval_grad."""
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef long[::1] nv = np.ascontiguousarray(rounds, dtype=np.int64)
    cdef Py_ssize_t d = yv.shape[0]

    e_seg_a = np.empty(d)
    t_seg_a = np.empty(d)
    de_own_a = np.empty(d)
    dt_own_a = np.empty(d)
    g_e_a = np.empty(d)
    g_tpre_a = np.empty(d)
    g_tsc_a = np.empty(d)
    cdef double[::1] e_seg = e_seg_a
    cdef double[::1] t_seg = t_seg_a
    cdef double[::1] de_own = de_own_a
    cdef double[::1] dt_own = dt_own_a
    cdef double[::1] g_e = g_e_a
    cdef double[::1] g_tpre = g_tpre_a
    cdef double[::1] g_tsc = g_tsc_a

    cdef double vol = m0
    cdef double h, h1, em, yu, coef
    cdef Py_ssize_t u
    for u in range(d):
        yu = yv[u]
        _terms(yu, nv[u], w_bar, &h, &h1, &em)
        coef = k0 * pow(yu, alpha - 1.0) * vol
        e_seg[u] = coef * h
        t_seg[u] = vol * h / yu
        de_own[u] = coef * ((alpha - 1.0) * h - h1)
        dt_own[u] = -vol * (h + h1) / yu
        vol *= em

    cdef double e_dyn = 0.0, t_pre = 0.0
    for u in range(d):
        e_dyn += e_seg[u]
        if u < d - 1:
            t_pre += t_seg[u]
    cdef double t_sc = t_seg[d - 1]

    cdef double suff_e = 0.0, suff_tpre = 0.0, n
    for u in range(d - 1, -1, -1):
        n = <double> nv[u]
        if u == d - 1:
            g_e[u] = de_own[u] - n * suff_e
            g_tpre[u] = -n * suff_tpre
            g_tsc[u] = dt_own[u]
        else:
            g_e[u] = de_own[u] - n * suff_e
            g_tpre[u] = dt_own[u] - n * suff_tpre
            g_tsc[u] = -n * t_sc
            suff_tpre += t_seg[u]
        suff_e += e_seg[u]
    return e_dyn, t_pre, t_sc, g_e_a, g_tpre_a, g_tsc_a


def grid_min(vm, te, en, double m0, double fixed_dt, double fixed_tm,
             double delta_dt, double delta_tm):
    """Feasible energy minimum over a tensor grid; mirrors _plain.grid_min."""
    cdef double[:, ::1] vmv = np.ascontiguousarray(vm, dtype=np.float64)
    cdef double[:, ::1] tev = np.ascontiguousarray(te, dtype=np.float64)
    cdef double[:, ::1] env = np.ascontiguousarray(en, dtype=np.float64)
    cdef Py_ssize_t d = vmv.shape[0]
    cdef Py_ssize_t ng = vmv.shape[1]

    idx_a = np.zeros(d, dtype=np.int64)
    wpre_a = np.empty(d + 1)
    spre_a = np.empty(d + 1)
    tpre_a = np.empty(d + 1)
    cdef long[::1] idx = idx_a
    cdef double[::1] wpre = wpre_a
    cdef double[::1] spre = spre_a
    cdef double[::1] tpre = tpre_a

    cdef double best = INFINITY
    cdef long long best_flat = -1, head_flat
    cdef double base_w, base_s, base_t, e, tsc
    cdef Py_ssize_t pos = 0, g, l

    wpre[0] = m0
    spre[0] = 0.0
    tpre[0] = 0.0
    with nogil:
        while True:
            while pos < d - 1:
                g = idx[pos]
                spre[pos + 1] = spre[pos] + wpre[pos] * env[pos, g]
                tpre[pos + 1] = tpre[pos] + wpre[pos] * tev[pos, g]
                wpre[pos + 1] = wpre[pos] * vmv[pos, g]
                pos += 1
            base_w = wpre[d - 1]
            base_s = spre[d - 1]
            base_t = tpre[d - 1]
            for g in range(ng):
                tsc = base_w * tev[d - 1, g]
                if tsc + fixed_dt > delta_dt:
                    continue
                if base_t + tsc + fixed_tm > delta_tm:
                    continue
                e = base_s + base_w * env[d - 1, g]
                if e < best:
                    best = e
                    head_flat = 0
                    for l in range(d - 1):
                        head_flat = head_flat * ng + idx[l]
                    best_flat = head_flat * ng + g
            pos = d - 2
            while pos >= 0 and idx[pos] == ng - 1:
                idx[pos] = 0
                pos -= 1
            if pos < 0:
                break
            idx[pos] += 1
    return int(best_flat), float(best)
