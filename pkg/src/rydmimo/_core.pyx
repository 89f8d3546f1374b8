# cython: language_level=3
"""Compiled estimator inner loops.

Mirrors _kernels_pure exactly: same update order, same stopping tests, same
trace semantics. The problem sizes here are tiny (K ~ 3, I ~ 8..64, P <= 30),
so hand-written loops beat BLAS dispatch overhead; the per-iteration SVD in
the 2d projection goes straight to LAPACK's zgesvd.
"""

import numpy as np

cimport cython
cimport numpy as cnp
from libc.math cimport sqrt
from scipy.linalg.cython_lapack cimport zgesvd

cnp.import_array()

BACKEND_NAME = "ext"

ctypedef double complex zdouble


@cython.boundscheck(False)
@cython.wraparound(False)
def gd_1d(double[:, ::1] D, zdouble[:, ::1] Z, zdouble[:, ::1] S,
          zdouble[:, ::1] G0, double eta, double tol, int max_iters,
          double grad_scale=2.0):
    cdef int I = D.shape[0]
    cdef int P = D.shape[1]
    cdef int K = S.shape[0]
    cdef cnp.ndarray Garr = np.array(G0, dtype=np.complex128, copy=True)
    cdef zdouble[:, ::1] G = Garr
    cdef cnp.ndarray tr = np.empty(max_iters + 1, dtype=np.float64)
    cdef double[::1] trace = tr
    cdef cnp.ndarray Rarr = np.empty((I, P), dtype=np.float64)
    cdef double[:, ::1] R = Rarr
    cdef cnp.ndarray Uarr = np.empty((I, K), dtype=np.complex128)
    cdef zdouble[:, ::1] Upd = Uarr

    cdef int it = 0, i, k, p
    cdef bint converged = False
    cdef double loss, dn, gn, r
    cdef zdouble acc, gnew

    with nogil:
        loss = 0.0
        for i in range(I):
            for p in range(P):
                acc = 0
                for k in range(K):
                    acc = acc + G[i, k] * S[k, p]
                r = D[i, p] - (Z[i, p] * acc).real
                R[i, p] = r
                loss += r * r
        trace[0] = loss
        while it < max_iters:
            dn = 0.0
            gn = 0.0
            for i in range(I):
                for k in range(K):
                    acc = 0
                    for p in range(P):
                        acc = acc + R[i, p] * Z[i, p].conjugate() * S[k, p].conjugate()
                    # grad = -grad_scale * acc; step G - eta*grad
                    gnew = G[i, k] + eta * grad_scale * acc
                    dn += (gnew - G[i, k]).real ** 2 + (gnew - G[i, k]).imag ** 2
                    gn += G[i, k].real ** 2 + G[i, k].imag ** 2
                    Upd[i, k] = gnew
            for i in range(I):
                for k in range(K):
                    G[i, k] = Upd[i, k]
            it += 1
            loss = 0.0
            for i in range(I):
                for p in range(P):
                    acc = 0
                    for k in range(K):
                        acc = acc + G[i, k] * S[k, p]
                    r = D[i, p] - (Z[i, p] * acc).real
                    R[i, p] = r
                    loss += r * r
            trace[it] = loss
            if dn <= tol * gn:
                converged = True
                break
    return Garr, it, tr[: it + 1].copy(), converged


@cython.boundscheck(False)
@cython.wraparound(False)
cdef int _truncate_row(zdouble *row, int I1, int I2, int L,
                       zdouble *asvd, double *s, zdouble *u, zdouble *vt,
                       zdouble *work, int lwork, double *rwork) nogil:
    """Best rank-L approximation of one I1 x I2 slice stored column-major
    in row. Returns the LAPACK info code."""
    cdef int mn = I1 if I1 < I2 else I2
    cdef int m = I1, n = I2, lda = I1, ldu = I1, ldvt = mn, info = 0
    cdef int i, j, l
    cdef char jobs = b'S'
    cdef zdouble acc
    for i in range(I1 * I2):
        asvd[i] = row[i]
    zgesvd(&jobs, &jobs, &m, &n, asvd, &lda, s, u, &ldu, vt, &ldvt,
           work, &lwork, rwork, &info)
    if info != 0:
        return info
    for j in range(I2):
        for i in range(I1):
            acc = 0
            for l in range(L):
                acc = acc + u[i + l * ldu] * s[l] * vt[l + j * ldvt]
            row[j * I1 + i] = acc
    return 0


@cython.boundscheck(False)
@cython.wraparound(False)
def pgd_2d(double[:, ::1] D, zdouble[:, ::1] Z, zdouble[:, ::1] S,
           zdouble[:, ::1] G0, int I1, int I2, int L,
           double eta, double tol, int max_iters, double grad_scale=1.0):
    cdef int P = D.shape[0]
    cdef int M = D.shape[1]
    cdef int K = S.shape[0]
    cdef int mn = I1 if I1 < I2 else I2
    cdef bint project = L < mn
    cdef cnp.ndarray Garr = np.array(G0, dtype=np.complex128, copy=True)
    cdef zdouble[:, ::1] G = Garr
    cdef cnp.ndarray tr = np.empty(max_iters + 1, dtype=np.float64)
    cdef double[::1] trace = tr
    cdef cnp.ndarray Rarr = np.empty((P, M), dtype=np.float64)
    cdef double[:, ::1] R = Rarr
    cdef cnp.ndarray Narr = np.empty((K, M), dtype=np.complex128)
    cdef zdouble[:, ::1] Gn = Narr

    # svd workspace
    cdef cnp.ndarray a_buf = np.empty(I1 * I2, dtype=np.complex128)
    cdef cnp.ndarray s_buf = np.empty(mn, dtype=np.float64)
    cdef cnp.ndarray u_buf = np.empty(I1 * mn, dtype=np.complex128)
    cdef cnp.ndarray vt_buf = np.empty(mn * I2, dtype=np.complex128)
    cdef cnp.ndarray rw_buf = np.empty(5 * mn, dtype=np.float64)
    cdef zdouble[::1] asvd = a_buf
    cdef double[::1] sv = s_buf
    cdef zdouble[::1] uv = u_buf
    cdef zdouble[::1] vtv = vt_buf
    cdef double[::1] rw = rw_buf
    cdef int lwork = -1, info = 0
    cdef zdouble wquery
    cdef int m_ = I1, n_ = I2, lda_ = I1, ldu_ = I1, ldvt_ = mn
    cdef char jobs = b'S'
    if project:
        zgesvd(&jobs, &jobs, &m_, &n_, &asvd[0], &lda_, &sv[0], &uv[0],
               &ldu_, &vtv[0], &ldvt_, &wquery, &lwork, &rw[0], &info)
        lwork = <int> wquery.real
    else:
        lwork = 1
    cdef cnp.ndarray w_buf = np.empty(max(lwork, 1), dtype=np.complex128)
    cdef zdouble[::1] wk = w_buf

    cdef int it = 0, k, p, m
    cdef bint converged = False
    cdef int svd_info = 0
    cdef double loss, dn, gn, r
    cdef zdouble acc, gnew

    with nogil:
        loss = 0.0
        for p in range(P):
            for m in range(M):
                acc = 0
                for k in range(K):
                    acc = acc + S[k, p] * G[k, m]
                r = D[p, m] - (Z[p, m] * acc).real
                R[p, m] = r
                loss += r * r
        trace[0] = loss
        while it < max_iters:
            for k in range(K):
                for m in range(M):
                    acc = 0
                    for p in range(P):
                        acc = acc + S[k, p].conjugate() * R[p, m] * Z[p, m].conjugate()
                    Gn[k, m] = G[k, m] + eta * grad_scale * acc
            if project:
                for k in range(K):
                    svd_info = _truncate_row(&Gn[k, 0], I1, I2, L, &asvd[0],
                                             &sv[0], &uv[0], &vtv[0], &wk[0],
                                             lwork, &rw[0])
                    if svd_info != 0:
                        break
                if svd_info != 0:
                    break
            dn = 0.0
            gn = 0.0
            for k in range(K):
                for m in range(M):
                    gnew = Gn[k, m]
                    dn += (gnew - G[k, m]).real ** 2 + (gnew - G[k, m]).imag ** 2
                    gn += G[k, m].real ** 2 + G[k, m].imag ** 2
                    G[k, m] = gnew
            it += 1
            loss = 0.0
            for p in range(P):
                for m in range(M):
                    acc = 0
                    for k in range(K):
                        acc = acc + S[k, p] * G[k, m]
                    r = D[p, m] - (Z[p, m] * acc).real
                    R[p, m] = r
                    loss += r * r
            trace[it] = loss
            if dn <= tol * gn:
                converged = True
                break
    if svd_info != 0:
        raise np.linalg.LinAlgError(f"zgesvd failed with info={svd_info}")
    return Garr, it, tr[: it + 1].copy(), converged


@cython.boundscheck(False)
@cython.wraparound(False)
def gs_1d(double[:, ::1] Y, zdouble[:, ::1] B, zdouble[:, ::1] S,
          zdouble[:, ::1] pinv, zdouble[:, ::1] G0, double tol, int max_iters):
    cdef int I = Y.shape[0]
    cdef int P = Y.shape[1]
    cdef int K = S.shape[0]
    cdef cnp.ndarray Garr = np.array(G0, dtype=np.complex128, copy=True)
    cdef zdouble[:, ::1] G = Garr
    cdef cnp.ndarray tr = np.empty(max_iters + 1, dtype=np.float64)
    cdef double[::1] trace = tr
    cdef cnp.ndarray Carr = np.empty((I, P), dtype=np.complex128)
    cdef zdouble[:, ::1] C = Carr
    cdef cnp.ndarray Tarr = np.empty((I, P), dtype=np.complex128)
    cdef zdouble[:, ::1] T = Tarr

    cdef int it = 0, i, k, p
    cdef bint converged = False
    cdef double res, new_res, a, d
    cdef zdouble acc, ph

    with nogil:
        res = 0.0
        for i in range(I):
            for p in range(P):
                acc = B[i, p]
                for k in range(K):
                    acc = acc + G[i, k] * S[k, p]
                C[i, p] = acc
                a = sqrt(acc.real ** 2 + acc.imag ** 2)
                d = Y[i, p] - a
                res += d * d
        trace[0] = res
        while it < max_iters:
            for i in range(I):
                for p in range(P):
                    a = sqrt(C[i, p].real ** 2 + C[i, p].imag ** 2)
                    if a > 0.0:
                        ph = C[i, p] / a
                    else:
                        ph = 1.0
                    T[i, p] = Y[i, p] * ph - B[i, p]
            for i in range(I):
                for k in range(K):
                    acc = 0
                    for p in range(P):
                        acc = acc + T[i, p] * pinv[p, k]
                    G[i, k] = acc
            it += 1
            new_res = 0.0
            for i in range(I):
                for p in range(P):
                    acc = B[i, p]
                    for k in range(K):
                        acc = acc + G[i, k] * S[k, p]
                    C[i, p] = acc
                    a = sqrt(acc.real ** 2 + acc.imag ** 2)
                    d = Y[i, p] - a
                    new_res += d * d
            trace[it] = new_res
            if new_res - res <= tol * res and res - new_res <= tol * res:
                res = new_res
                converged = True
                break
            res = new_res
    return Garr, it, tr[: it + 1].copy(), converged
