# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; semantics match ``_kernels_py`` exactly."""
import numpy as np

from libc.math cimport log2, NAN
from libc.stdlib cimport calloc, free
from libc.string cimport memset

BACKEND = "cython"


cdef inline double plogp(double p) noexcept nogil:
    if p > 0.0:
        return p * log2(p)
    return 0.0


cdef inline Py_ssize_t ipow(Py_ssize_t b, Py_ssize_t e) noexcept nogil:
    cdef Py_ssize_t r = 1
    while e > 0:
        r *= b
        e -= 1
    return r


def bank_offsets(int x_size, int y_size, int n):
    out = np.zeros(n + 1, dtype=np.intp)
    for i in range(n):
        out[i + 1] = out[i] + x_size ** i * y_size ** i * x_size
    return out


def di_terms(kernel, s0w, int n, bank1, bank2, idx1, idx2, bint per_state):
    cdef const double[:, :, :, :, ::1] K = np.ascontiguousarray(kernel, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(s0w, dtype=np.float64)
    cdef const double[:, ::1] L1 = np.ascontiguousarray(bank1, dtype=np.float64)
    cdef const double[:, ::1] L2 = np.ascontiguousarray(bank2, dtype=np.float64)
    cdef const Py_ssize_t[::1] I1 = np.ascontiguousarray(idx1, dtype=np.intp)
    cdef const Py_ssize_t[::1] I2 = np.ascontiguousarray(idx2, dtype=np.intp)
    cdef Py_ssize_t S = K.shape[0], X1 = K.shape[1], X2 = K.shape[2], Y = K.shape[3]
    cdef Py_ssize_t B = I1.shape[0]
    cdef Py_ssize_t so = S if per_state else 1
    cdef const Py_ssize_t[::1] off1 = bank_offsets(X1, Y, n)
    cdef const Py_ssize_t[::1] off2 = bank_offsets(X2, Y, n)
    out_arr = np.zeros((B, so, 3, n))
    cdef double[:, :, :, ::1] out = out_arr

    cdef Py_ssize_t n1max = ipow(X1, n), n2max = ipow(X2, n), nymax = ipow(Y, n)
    cdef Py_ssize_t asz = S * n1max * n2max * nymax * S
    cdef Py_ssize_t psz = so * n1max * n2max * nymax
    cdef double *A = <double *> calloc(asz, sizeof(double))
    cdef double *A2 = <double *> calloc(asz, sizeof(double))
    cdef double *P = <double *> calloc(psz, sizeof(double))
    cdef double *Pnoy = <double *> calloc(psz, sizeof(double))
    cdef double *P2y = <double *> calloc(so * n2max * nymax, sizeof(double))
    cdef double *P1y = <double *> calloc(so * n1max * nymax, sizeof(double))
    cdef double *Py = <double *> calloc(so * nymax, sizeof(double))
    cdef double *Hf = <double *> calloc(8 * so, sizeof(double))
    if A == NULL or A2 == NULL or P == NULL or Pnoy == NULL or P2y == NULL or P1y == NULL \
            or Py == NULL or Hf == NULL:
        free(A); free(A2); free(P); free(Pnoy); free(P2y); free(P1y); free(Py); free(Hf)
        raise MemoryError()

    cdef Py_ssize_t b, i, z, zo, h1, h2, hy, s, a, c, yy, t, n1, n2, ny, nn1, nn2, nny, k, j
    cdef Py_ssize_t base, nbase, r1, r2
    cdef double v, q1, q2, wt, p, norm, tmp
    cdef double *tmpA
    try:
        with nogil:
            for b in range(B):
                r1 = I1[b]
                r2 = I2[b]
                memset(A, 0, asz * sizeof(double))
                for z in range(S):
                    A[(z * 1) * S + z] = w[z]
                n1 = 1
                n2 = 1
                ny = 1
                for i in range(n):
                    nn1 = n1 * X1
                    nn2 = n2 * X2
                    nny = ny * Y
                    memset(A2, 0, S * nn1 * nn2 * nny * S * sizeof(double))
                    for z in range(S):
                        for h1 in range(n1):
                            for h2 in range(n2):
                                for hy in range(ny):
                                    base = (((z * n1 + h1) * n2 + h2) * ny + hy) * S
                                    for s in range(S):
                                        v = A[base + s]
                                        if v == 0.0:
                                            continue
                                        for a in range(X1):
                                            q1 = L1[r1, off1[i] + (h1 * ny + hy) * X1 + a]
                                            if q1 == 0.0:
                                                continue
                                            for c in range(X2):
                                                q2 = L2[r2, off2[i] + (h2 * ny + hy) * X2 + c]
                                                if q2 == 0.0:
                                                    continue
                                                wt = v * q1 * q2
                                                for yy in range(Y):
                                                    nbase = (((z * nn1 + h1 * X1 + a) * nn2 + h2 * X2 + c)
                                                             * nny + hy * Y + yy) * S
                                                    for t in range(S):
                                                        A2[nbase + t] += wt * K[s, a, c, yy, t]
                    tmpA = A
                    A = A2
                    A2 = tmpA
                    # prefix marginal, conditioned per s0 or pooled
                    memset(P, 0, so * nn1 * nn2 * nny * sizeof(double))
                    for z in range(S):
                        zo = z if per_state else 0
                        norm = 1.0
                        if per_state:
                            norm = w[z] if w[z] > 0.0 else 1.0
                        for k in range(nn1 * nn2 * nny):
                            tmp = 0.0
                            for t in range(S):
                                tmp = tmp + A[(z * nn1 * nn2 * nny + k) * S + t]
                            P[zo * nn1 * nn2 * nny + k] += tmp / norm
                    memset(Pnoy, 0, so * nn1 * nn2 * ny * sizeof(double))
                    memset(P2y, 0, so * nn2 * nny * sizeof(double))
                    memset(P1y, 0, so * nn1 * nny * sizeof(double))
                    memset(Py, 0, so * nny * sizeof(double))
                    memset(Hf, 0, 8 * so * sizeof(double))
                    for zo in range(so):
                        for h1 in range(nn1):
                            for h2 in range(nn2):
                                for hy in range(nny):
                                    p = P[((zo * nn1 + h1) * nn2 + h2) * nny + hy]
                                    if p == 0.0:
                                        continue
                                    Hf[8 * zo] -= plogp(p)
                                    Pnoy[((zo * nn1 + h1) * nn2 + h2) * ny + hy // Y] += p
                                    P2y[(zo * nn2 + h2) * nny + hy] += p
                                    P1y[(zo * nn1 + h1) * nny + hy] += p
                                    Py[zo * nny + hy] += p
                        for k in range(nn1 * nn2 * ny):
                            Hf[8 * zo + 1] -= plogp(Pnoy[zo * nn1 * nn2 * ny + k])
                        for h2 in range(nn2):
                            for hy in range(ny):
                                tmp = 0.0
                                for yy in range(Y):
                                    p = P2y[(zo * nn2 + h2) * nny + hy * Y + yy]
                                    Hf[8 * zo + 2] -= plogp(p)
                                    tmp = tmp + p
                                Hf[8 * zo + 3] -= plogp(tmp)
                        for h1 in range(nn1):
                            for hy in range(ny):
                                tmp = 0.0
                                for yy in range(Y):
                                    p = P1y[(zo * nn1 + h1) * nny + hy * Y + yy]
                                    Hf[8 * zo + 4] -= plogp(p)
                                    tmp = tmp + p
                                Hf[8 * zo + 5] -= plogp(tmp)
                        for hy in range(ny):
                            tmp = 0.0
                            for yy in range(Y):
                                p = Py[zo * nny + hy * Y + yy]
                                Hf[8 * zo + 6] -= plogp(p)
                                tmp = tmp + p
                            Hf[8 * zo + 7] -= plogp(tmp)
                        tmp = Hf[8 * zo] - Hf[8 * zo + 1]
                        out[b, zo, 0, i] = (Hf[8 * zo + 2] - Hf[8 * zo + 3]) - tmp
                        out[b, zo, 1, i] = (Hf[8 * zo + 4] - Hf[8 * zo + 5]) - tmp
                        out[b, zo, 2, i] = (Hf[8 * zo + 6] - Hf[8 * zo + 7]) - tmp
                        if per_state and w[zo] <= 0.0:
                            out[b, zo, 0, i] = NAN
                            out[b, zo, 1, i] = NAN
                            out[b, zo, 2, i] = NAN
                    n1 = nn1
                    n2 = nn2
                    ny = nny
    finally:
        free(A); free(A2); free(P); free(Pnoy); free(P2y); free(P1y); free(Py); free(Hf)
    return out_arr


cdef double _forward(const double[:, :, :, :, ::1] K, const double[::1] w,
                     const Py_ssize_t[:, ::1] xs1, Py_ssize_t m1,
                     const Py_ssize_t[:, ::1] xs2, Py_ssize_t m2,
                     const Py_ssize_t[::1] y, double *al, double *al2, double floor) noexcept nogil:
    """Likelihood of one pair; returns -1 once the running mass drops below ``floor``."""
    cdef Py_ssize_t S = K.shape[0], n = y.shape[0], i, s, t, a, c, yy
    cdef double mass, v
    cdef double *tmp
    for s in range(S):
        al[s] = w[s]
    for i in range(n):
        a = xs1[m1, i]
        c = xs2[m2, i]
        yy = y[i]
        for t in range(S):
            al2[t] = 0.0
        for s in range(S):
            v = al[s]
            if v == 0.0:
                continue
            for t in range(S):
                al2[t] += v * K[s, a, c, yy, t]
        mass = 0.0
        for t in range(S):
            mass += al2[t]
        tmp = al
        al = al2
        al2 = tmp
        if mass < floor or mass == 0.0:
            return -1.0 if mass < floor else 0.0
    mass = 0.0
    for s in range(S):
        mass += al[s]
    return mass


def pair_likelihoods(kernel, s0w, xs1, xs2, y):
    cdef const double[:, :, :, :, ::1] K = np.ascontiguousarray(kernel, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(s0w, dtype=np.float64)
    cdef const Py_ssize_t[:, ::1] a1 = np.ascontiguousarray(xs1, dtype=np.intp)
    cdef const Py_ssize_t[:, ::1] a2 = np.ascontiguousarray(xs2, dtype=np.intp)
    cdef const Py_ssize_t[::1] yv = np.ascontiguousarray(y, dtype=np.intp)
    cdef Py_ssize_t M1 = a1.shape[0], M2 = a2.shape[0], S = K.shape[0], i, j
    out_arr = np.zeros((M1, M2))
    cdef double[:, ::1] out = out_arr
    cdef double *al = <double *> calloc(2 * S, sizeof(double))
    if al == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(M1):
                for j in range(M2):
                    out[i, j] = _forward(K, w, a1, i, a2, j, yv, al, al + S, 0.0)
    finally:
        free(al)
    return out_arr


def ml_decode(kernel, s0w, xs1, xs2, y, double rtol=1e-12):
    cdef const double[:, :, :, :, ::1] K = np.ascontiguousarray(kernel, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(s0w, dtype=np.float64)
    cdef const Py_ssize_t[:, ::1] a1 = np.ascontiguousarray(xs1, dtype=np.intp)
    cdef const Py_ssize_t[:, ::1] a2 = np.ascontiguousarray(xs2, dtype=np.intp)
    cdef const Py_ssize_t[::1] yv = np.ascontiguousarray(y, dtype=np.intp)
    cdef Py_ssize_t M1 = a1.shape[0], M2 = a2.shape[0], S = K.shape[0], i, j
    cdef Py_ssize_t bi = 0, bj = 0
    cdef double best = 0.0, v, thr, found = 0.0
    cdef bint done = False
    cdef double *al = <double *> calloc(2 * S, sizeof(double))
    if al == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(M1):
                for j in range(M2):
                    v = _forward(K, w, a1, i, a2, j, yv, al, al + S, best)
                    if v > best:
                        best = v
            if best > 0.0:
                thr = best * (1.0 - rtol)
                for i in range(M1):
                    if done:
                        break
                    for j in range(M2):
                        v = _forward(K, w, a1, i, a2, j, yv, al, al + S, thr)
                        if v >= thr:
                            bi = i
                            bj = j
                            found = v
                            done = True
                            break
    finally:
        free(al)
    return int(bi), int(bj), float(found)
