# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sweep and enumeration kernels.

The random stream and the floating-point operation order match
:mod:`copocut._fallback` exactly, so both backends return identical samples.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TO_UNIT = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _next(uint64_t* state) nogil:
    state[0] += GOLDEN
    return _mix(state[0])


def anneal(const double[:, ::1] q, const double[::1] betas, uint64_t seed, int reads, int read_offset=0):
    """Run reads ``read_offset .. read_offset + reads - 1``; return final states."""
    cdef Py_ssize_t n = q.shape[0]
    cdef Py_ssize_t sweeps = betas.shape[0]
    out = np.zeros((reads, n), dtype=np.uint8)
    cdef unsigned char[:, ::1] states = out
    cdef double[::1] field = np.zeros(n, dtype=np.float64)
    cdef double[::1] diag = np.zeros(n, dtype=np.float64)
    cdef Py_ssize_t r, t, i, j, k
    cdef uint64_t rng
    cdef double acc, de, beta, u, d
    cdef unsigned char xi

    for i in range(n):
        diag[i] = q[i, i]

    with nogil:
        for r in range(reads):
            rng = _mix(seed ^ _mix(<uint64_t>(r + read_offset) + GOLDEN))
            for i in range(n):
                states[r, i] = <unsigned char>(_next(&rng) >> 63)
            for j in range(n):
                acc = 0.0
                for k in range(n):
                    if k != j:
                        acc = acc + q[j, k] * states[r, k]
                field[j] = acc
            for t in range(sweeps):
                beta = betas[t]
                for i in range(n):
                    u = (_next(&rng) >> 11) * TO_UNIT
                    xi = states[r, i]
                    if xi:
                        de = -(diag[i] + 2.0 * field[i])
                    else:
                        de = diag[i] + 2.0 * field[i]
                    if de <= 0.0 or u < exp(-beta * de):
                        if xi:
                            states[r, i] = 0
                            d = -1.0
                        else:
                            states[r, i] = 1
                            d = 1.0
                        for j in range(n):
                            if j != i:
                                field[j] = field[j] + d * q[i, j]
    return out


def enumerate_min(const double[:, ::1] q, double tol):
    """Gray-code scan of all 2**n assignments.

    Returns ``(codes, energies)`` for every assignment whose running energy is
    within ``tol`` of the running minimum. Energies carry accumulated rounding
    and must be recomputed by the caller.
    """
    cdef Py_ssize_t n = q.shape[0]
    cdef int64_t total = (<int64_t>1) << n
    cdef double[::1] field = np.zeros(n, dtype=np.float64)
    cdef unsigned char[::1] x = np.zeros(n, dtype=np.uint8)
    cdef Py_ssize_t cap = 1024, size = 0, i, j, w
    codes_arr = np.empty(cap, dtype=np.int64)
    vals_arr = np.empty(cap, dtype=np.float64)
    cdef int64_t[::1] codes = codes_arr
    cdef double[::1] vals = vals_arr
    cdef int64_t step, code = 0
    cdef double energy = 0.0, best = 0.0, de, d

    codes[0] = 0
    vals[0] = 0.0
    size = 1
    for step in range(1, total):
        i = 0
        while not ((step >> i) & 1):
            i += 1
        if x[i]:
            de = -(q[i, i] + 2.0 * field[i])
            d = -1.0
            x[i] = 0
        else:
            de = q[i, i] + 2.0 * field[i]
            d = 1.0
            x[i] = 1
        code ^= (<int64_t>1) << i
        energy += de
        for j in range(n):
            if j != i:
                field[j] += d * q[i, j]
        if energy < best:
            best = energy
        if energy <= best + tol:
            if size == cap:
                w = 0
                for j in range(size):
                    if vals[j] <= best + tol:
                        codes[w] = codes[j]
                        vals[w] = vals[j]
                        w += 1
                size = w
                if size > cap // 2:
                    cap *= 2
                    codes_arr = np.resize(codes_arr, cap)
                    vals_arr = np.resize(vals_arr, cap)
                    codes = codes_arr
                    vals = vals_arr
            codes[size] = code
            vals[size] = energy
            size += 1
    keep = vals_arr[:size] <= best + tol
    return codes_arr[:size][keep], vals_arr[:size][keep]
