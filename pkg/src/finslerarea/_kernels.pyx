# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Cartan kernel. Same contract as ``_kernels_py.cartan_batch``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, isfinite

cnp.import_array()


cdef inline void _eval(int kind, const double[::1] params, int npar,
                       double y0, double y1, double y2,
                       double b0, double b1, double b2,
                       double* F, double* g) noexcept nogil:
    cdef double s = b0 * y0 + b1 * y1 + b2 * y2
    cdef double phi, dphi, d, eps, p0, p1, p2, sP, Fr, q
    cdef int k
    if kind == 0:
        phi = 0.0
        dphi = 0.0
        for k in range(npar - 1, -1, -1):
            dphi = dphi * s + phi
            phi = phi * s + params[k]
        F[0] = phi
        g[0] = phi * y0 + dphi * (b0 - s * y0)
        g[1] = phi * y1 + dphi * (b1 - s * y1)
        g[2] = phi * y2 + dphi * (b2 - s * y2)
    elif kind == 1:
        if 1.0 - s <= 0.0:
            F[0] = -1.0
            g[0] = 0.0
            g[1] = 0.0
            g[2] = 0.0
            return
        d = 1.0 / (1.0 - s)
        F[0] = d
        g[0] = d * y0 + d * d * (b0 - s * y0)
        g[1] = d * y1 + d * d * (b1 - s * y1)
        g[2] = d * y2 + d * d * (b2 - s * y2)
    else:
        eps = params[0]
        p0 = y0 * y0
        p1 = y1 * y1
        p2 = y2 * y2
        sP = sqrt(p0 * p0 + p1 * p1 + p2 * p2)
        Fr = sqrt(sP + eps)
        F[0] = Fr + s
        q = 1.0 / (2.0 * Fr)
        g[0] = (2.0 * p0 * y0 / sP + 2.0 * eps * y0) * q + b0
        g[1] = (2.0 * p1 * y1 / sP + 2.0 * eps * y1) * q + b1
        g[2] = (2.0 * p2 * y2 / sP + 2.0 * eps * y2) * q + b2


def cartan_batch(Z, drift, int kind, params, int n_nodes, bint with_grad=True):
    if kind < 0 or kind > 2:
        raise ValueError(f"unknown kernel kind {kind}")
    cdef const double[:, ::1] Zv = np.ascontiguousarray(Z, dtype=np.float64)
    cdef const double[:, ::1] Bv = np.ascontiguousarray(drift, dtype=np.float64)
    cdef const double[::1] P = np.ascontiguousarray(np.atleast_1d(params), dtype=np.float64) \
        if len(params) else np.zeros(1)
    cdef int npar = len(params)
    cdef Py_ssize_t T = Zv.shape[0]
    A_arr = np.empty(T)
    G_arr = np.empty((T, 3))
    cdef double[::1] A = A_arr
    cdef double[:, ::1] G = G_arr
    cdef double[::1] cs = np.cos(2.0 * np.pi * np.arange(n_nodes) / n_nodes)
    cdef double[::1] sn = np.sin(2.0 * np.pi * np.arange(n_nodes) / n_nodes)
    cdef Py_ssize_t t
    cdef int k, ax, bad = -1
    cdef double nz, z0, z1, z2, f10, f11, f12, f20, f21, f22, nf
    cdef double y0, y1, y2, F, inv2, I0, c0, c1, c2, zdf, w, a0, a1, a2, amin
    cdef double g[3]
    with nogil:
        for t in range(T):
            z0 = Zv[t, 0]
            z1 = Zv[t, 1]
            z2 = Zv[t, 2]
            nz = sqrt(z0 * z0 + z1 * z1 + z2 * z2)
            z0 /= nz
            z1 /= nz
            z2 /= nz
            a0 = fabs(z0)
            a1 = fabs(z1)
            a2 = fabs(z2)
            ax = 0
            amin = a0
            if a1 < amin:
                ax = 1
                amin = a1
            if a2 < amin:
                ax = 2
            if ax == 0:
                f10 = 1.0 - z0 * z0
                f11 = -z0 * z1
                f12 = -z0 * z2
            elif ax == 1:
                f10 = -z1 * z0
                f11 = 1.0 - z1 * z1
                f12 = -z1 * z2
            else:
                f10 = -z2 * z0
                f11 = -z2 * z1
                f12 = 1.0 - z2 * z2
            nf = sqrt(f10 * f10 + f11 * f11 + f12 * f12)
            f10 /= nf
            f11 /= nf
            f12 /= nf
            f20 = z1 * f12 - z2 * f11
            f21 = z2 * f10 - z0 * f12
            f22 = z0 * f11 - z1 * f10
            I0 = 0.0
            c0 = 0.0
            c1 = 0.0
            c2 = 0.0
            for k in range(n_nodes):
                y0 = cs[k] * f10 + sn[k] * f20
                y1 = cs[k] * f11 + sn[k] * f21
                y2 = cs[k] * f12 + sn[k] * f22
                _eval(kind, P, npar, y0, y1, y2, Bv[t, 0], Bv[t, 1], Bv[t, 2], &F, g)
                if not (F > 0.0 and isfinite(F)):
                    if bad < 0:
                        bad = <int>t
                    F = 1.0
                inv2 = 1.0 / (F * F)
                I0 += inv2
                if with_grad:
                    zdf = (g[0] * z0 + g[1] * z1 + g[2] * z2) * nz
                    w = inv2 / F * zdf
                    c0 += w * y0
                    c1 += w * y1
                    c2 += w * y2
            I0 /= n_nodes
            A[t] = nz / I0
            if with_grad:
                c0 /= n_nodes
                c1 /= n_nodes
                c2 /= n_nodes
                G[t, 0] = (z0 * nz * I0 - 2.0 * c0) / (nz * I0 * I0)
                G[t, 1] = (z1 * nz * I0 - 2.0 * c1) / (nz * I0 * I0)
                G[t, 2] = (z2 * nz * I0 - 2.0 * c2) / (nz * I0 * I0)
    return A_arr, (G_arr if with_grad else None), bad
