# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled SMO kernel.

Performs exactly the floating-point operations of emgds._smo_py.optimize, in
the same order, with the same SplitMix64 stream; the build pins
-ffp-contract=off so results stay bit-identical to the fallback. Keep any
change here in lockstep with _smo_py.py.
"""

from libc.math cimport fabs

import numpy as np

cdef unsigned long long _GAMMA = 0x9E3779B97F4A7C15
cdef unsigned long long _MIX1 = 0xBF58476D1CE4E5B9
cdef unsigned long long _MIX2 = 0x94D049BB133111EB


cdef inline unsigned long long _next_u64(unsigned long long* state) nogil:
    cdef unsigned long long z
    state[0] = state[0] + _GAMMA
    z = state[0]
    z = (z ^ (z >> 30)) * _MIX1
    z = (z ^ (z >> 27)) * _MIX2
    return z ^ (z >> 31)


cdef inline unsigned long long _below(unsigned long long* state, unsigned long long n) nogil:
    return _next_u64(state) % n


cdef inline bint _attempt(double[:, ::1] K, double[::1] y, double[::1] alpha,
                          double[::1] E, Py_ssize_t i, Py_ssize_t j,
                          double c, double* b) nogil:
    cdef double ai = alpha[i]
    cdef double aj = alpha[j]
    cdef double yi = y[i]
    cdef double yj = y[j]
    cdef double lo, hi, eta, aj_new, ai_new, di, dj, b1, b2, b_new, db
    cdef Py_ssize_t k
    if yi != yj:
        lo = aj - ai
        if lo < 0.0:
            lo = 0.0
        hi = c + aj - ai
        if hi > c:
            hi = c
    else:
        lo = ai + aj - c
        if lo < 0.0:
            lo = 0.0
        hi = ai + aj
        if hi > c:
            hi = c
    if lo == hi:
        return 0
    eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
    if eta <= 0.0:
        return 0
    aj_new = aj + yj * (E[i] - E[j]) / eta
    if aj_new < lo:
        aj_new = lo
    elif aj_new > hi:
        aj_new = hi
    if fabs(aj_new - aj) < 1e-5 * ((aj_new + aj) + 1e-5):
        return 0
    ai_new = ai + yi * yj * (aj - aj_new)
    di = yi * (ai_new - ai)
    dj = yj * (aj_new - aj)
    b1 = ((b[0] - E[i]) - di * K[i, i]) - dj * K[i, j]
    b2 = ((b[0] - E[j]) - di * K[i, j]) - dj * K[j, j]
    if 0.0 < ai_new and ai_new < c:
        b_new = b1
    elif 0.0 < aj_new and aj_new < c:
        b_new = b2
    else:
        b_new = 0.5 * (b1 + b2)
    db = b_new - b[0]
    alpha[i] = ai_new
    alpha[j] = aj_new
    for k in range(E.shape[0]):
        E[k] = E[k] + di * K[i, k]
        E[k] = E[k] + dj * K[j, k]
        E[k] = E[k] + db
    b[0] = b_new
    return 1


def optimize(K, y, c, tol, max_passes, seed):
    """Compiled counterpart of emgds._smo_py.optimize (no objective trace)."""
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[:, ::1] Kv = K
    cdef double[::1] yv = y
    cdef Py_ssize_t n = yv.shape[0]
    alpha_arr = np.zeros(n, dtype=np.float64)
    E_arr = np.empty(n, dtype=np.float64)
    ties_arr = np.empty(n, dtype=np.int64)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] E = E_arr
    cdef long long[::1] ties = ties_arr
    cdef unsigned long long state = <unsigned long long> (int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef double cc = c
    cdef double tolc = tol
    cdef double b = 0.0
    cdef int passes = 0
    cdef int max_p = max_passes
    cdef Py_ssize_t i, k, jj, off, start, j, count
    cdef int changed
    cdef double r, Ei, v, m

    for k in range(n):
        E[k] = -yv[k]

    while passes < max_p:
        changed = 0
        for i in range(n):
            r = yv[i] * E[i]
            if not ((r < -tolc and alpha[i] < cc) or (r > tolc and alpha[i] > 0.0)):
                continue
            Ei = E[i]
            m = -1.0
            for k in range(n):
                if k == i:
                    v = -1.0
                else:
                    v = fabs(Ei - E[k])
                if v > m:
                    m = v
            count = 0
            for k in range(n):
                if k == i:
                    v = -1.0
                else:
                    v = fabs(Ei - E[k])
                if v == m:
                    ties[count] = k
                    count += 1
            if count == 1:
                j = <Py_ssize_t> ties[0]
            else:
                j = <Py_ssize_t> ties[<Py_ssize_t> _below(&state, <unsigned long long> count)]
            if _attempt(Kv, yv, alpha, E, i, j, cc, &b):
                changed += 1
                continue
            start = <Py_ssize_t> _below(&state, <unsigned long long> n)
            for off in range(n):
                jj = (start + off) % n
                if jj == i:
                    continue
                if _attempt(Kv, yv, alpha, E, i, jj, cc, &b):
                    changed += 1
                    break
        passes += 1
        if changed == 0:
            break
    return alpha_arr, b, passes
