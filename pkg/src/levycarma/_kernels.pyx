# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled inner loops: linear state recursion and the Kalman predictor.

Semantics match ``_kernels_py`` exactly; only speed differs.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt, isfinite

cnp.import_array()


def state_recursion(phi, x0, w, Py_ssize_t stride):
    cdef double[:, ::1] P = np.ascontiguousarray(phi, dtype=np.float64)
    cdef double[:, ::1] W = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t n = W.shape[0], N = W.shape[1]
    out = np.empty((n // stride, N))
    cdef double[:, ::1] O = out
    cdef double[::1] x = np.array(x0, dtype=np.float64)
    cdef double[::1] xn = np.empty(N)
    cdef Py_ssize_t k, i, j, r = 0
    cdef double acc
    with nogil:
        for k in range(n):
            for i in range(N):
                acc = 0.0
                for j in range(N):
                    acc = acc + P[i, j] * x[j]
                xn[i] = acc + W[k, i]
            for i in range(N):
                x[i] = xn[i]
            if (k + 1) % stride == 0:
                for i in range(N):
                    O[r, i] = x[i]
                r += 1
    return out


cdef inline int _cholesky(double[:, ::1] S, double[:, ::1] L, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double s
    for i in range(d):
        for j in range(i + 1):
            s = S[i, j]
            for k in range(j):
                s = s - L[i, k] * L[j, k]
            if i == j:
                if not (s > 0.0) or not isfinite(s):
                    return 1
                L[i, i] = sqrt(s)
            else:
                L[i, j] = s / L[j, j]
        for j in range(i + 1, d):
            L[i, j] = 0.0
    return 0


cdef inline void _chol_solve(double[:, ::1] L, double* b, Py_ssize_t d) noexcept nogil:
    # in-place solve of (L L^T) z = b
    cdef Py_ssize_t i, k
    cdef double s
    for i in range(d):
        s = b[i]
        for k in range(i):
            s = s - L[i, k] * b[k]
        b[i] = s / L[i, i]
    for i in range(d - 1, -1, -1):
        s = b[i]
        for k in range(i + 1, d):
            s = s - L[k, i] * b[k]
        b[i] = s / L[i, i]


def kalman_filter(phi, q, c, p0, y):
    cdef double[:, ::1] F = np.ascontiguousarray(phi, dtype=np.float64)
    cdef double[:, ::1] Qm = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[:, ::1] Cm = np.ascontiguousarray(c, dtype=np.float64)
    cdef double[:, ::1] Y = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = Y.shape[0], d = Y.shape[1], N = F.shape[0]
    e_arr = np.zeros((n, d))
    v_arr = np.zeros((n, d, d))
    t_arr = np.zeros(n)
    cdef double[:, ::1] E = e_arr
    cdef double[:, :, ::1] V = v_arr
    cdef double[::1] T = t_arr
    cdef double[:, ::1] P = np.array(p0, dtype=np.float64)
    cdef double[:, ::1] Pn = np.empty((N, N))
    cdef double[:, ::1] FP = np.empty((N, N))
    cdef double[:, ::1] PCt = np.empty((N, d))
    cdef double[:, ::1] M = np.empty((N, d))
    cdef double[:, ::1] K = np.empty((N, d))
    cdef double[:, ::1] S = np.empty((d, d))
    cdef double[:, ::1] L = np.empty((d, d))
    cdef double[::1] x = np.zeros(N)
    cdef double[::1] xn = np.empty(N)
    cdef double[::1] ek = np.empty(d)
    cdef double[::1] a = np.empty(d)
    cdef double[::1] row = np.empty(d)
    cdef Py_ssize_t k, i, j, l
    cdef double s, logdet, quad
    cdef Py_ssize_t status = -1
    with nogil:
        for k in range(n):
            # innovation
            for i in range(d):
                s = Y[k, i]
                for j in range(N):
                    s = s - Cm[i, j] * x[j]
                ek[i] = s
            # P C^T and S = C P C^T
            for i in range(N):
                for j in range(d):
                    s = 0.0
                    for l in range(N):
                        s = s + P[i, l] * Cm[j, l]
                    PCt[i, j] = s
            for i in range(d):
                for j in range(d):
                    s = 0.0
                    for l in range(N):
                        s = s + Cm[i, l] * PCt[l, j]
                    S[i, j] = s
            for i in range(d):
                for j in range(i):
                    s = 0.5 * (S[i, j] + S[j, i])
                    S[i, j] = s
                    S[j, i] = s
            if _cholesky(S, L, d) != 0:
                status = k
                break
            logdet = 0.0
            for i in range(d):
                logdet = logdet + 2.0 * log(L[i, i])
                a[i] = ek[i]
            _chol_solve(L, &a[0], d)
            quad = 0.0
            for i in range(d):
                quad = quad + ek[i] * a[i]
                E[k, i] = ek[i]
                for j in range(d):
                    V[k, i, j] = S[i, j]
            T[k] = 0.5 * (logdet + quad)
            # M = Phi P C^T, K = M S^{-1}
            for i in range(N):
                for j in range(d):
                    s = 0.0
                    for l in range(N):
                        s = s + F[i, l] * PCt[l, j]
                    M[i, j] = s
            for i in range(N):
                for j in range(d):
                    row[j] = M[i, j]
                _chol_solve(L, &row[0], d)
                for j in range(d):
                    K[i, j] = row[j]
            # state update
            for i in range(N):
                s = 0.0
                for l in range(N):
                    s = s + F[i, l] * x[l]
                for j in range(d):
                    s = s + K[i, j] * ek[j]
                xn[i] = s
            for i in range(N):
                x[i] = xn[i]
            # P <- Phi P Phi^T + Q - K M^T
            for i in range(N):
                for j in range(N):
                    s = 0.0
                    for l in range(N):
                        s = s + F[i, l] * P[l, j]
                    FP[i, j] = s
            for i in range(N):
                for j in range(N):
                    s = Qm[i, j]
                    for l in range(N):
                        s = s + FP[i, l] * F[j, l]
                    for l in range(d):
                        s = s - K[i, l] * M[j, l]
                    Pn[i, j] = s
            for i in range(N):
                for j in range(N):
                    P[i, j] = 0.5 * (Pn[i, j] + Pn[j, i])
    return e_arr, v_arr, t_arr, status
