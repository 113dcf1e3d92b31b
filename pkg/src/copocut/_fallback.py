"""Numpy implementations of the sweep and enumeration kernels.

Vectorised across reads. The random stream (splitmix64 per read) and the
order of every floating-point accumulation mirror ``_kernels.pyx`` so the
two backends produce the same states.
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TO_UNIT = 1.0 / 9007199254740992.0
_CHUNK = 1 << 16


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class _Streams:
    def __init__(self, seed, reads, offset=0):
        r = np.arange(offset, offset + reads, dtype=np.uint64)
        self.state = _mix(np.uint64(seed) ^ _mix(r + GOLDEN))

    def next(self):
        self.state += GOLDEN
        return _mix(self.state)


def anneal(q, betas, seed, reads, read_offset=0):
    q = np.ascontiguousarray(q, dtype=np.float64)
    n = q.shape[0]
    qoff = q.copy()
    np.fill_diagonal(qoff, 0.0)
    diag = np.diag(q).copy()
    rng = _Streams(seed, reads, read_offset)

    states = np.zeros((reads, n), dtype=np.uint8)
    for i in range(n):
        states[:, i] = rng.next() >> np.uint64(63)
    field = np.zeros((reads, n))
    for k in range(n):
        field += qoff[:, k][None, :] * states[:, k][:, None]

    with np.errstate(over="ignore"):
        for beta in betas:
            for i in range(n):
                u = (rng.next() >> np.uint64(11)).astype(np.float64) * _TO_UNIT
                on = states[:, i].astype(bool)
                base = diag[i] + 2.0 * field[:, i]
                de = np.where(on, -base, base)
                accept = (de <= 0.0) | (u < np.exp(-beta * de))
                if not accept.any():
                    continue
                d = np.where(accept, np.where(on, -1.0, 1.0), 0.0)
                states[:, i] ^= accept.astype(np.uint8)
                field += d[:, None] * qoff[i][None, :]
    return states


def enumerate_min(q, tol):
    q = np.ascontiguousarray(q, dtype=np.float64)
    n = q.shape[0]
    total = 1 << n
    shifts = np.arange(n, dtype=np.int64)
    best = np.inf
    codes, vals = [], []
    for start in range(0, total, _CHUNK):
        c = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        x = ((c[:, None] >> shifts) & 1).astype(np.float64)
        e = ((x @ q) * x).sum(axis=1)
        best = min(best, float(e.min()))
        keep = e <= best + tol
        codes.append(c[keep])
        vals.append(e[keep])
    codes = np.concatenate(codes)
    vals = np.concatenate(vals)
    keep = vals <= best + tol
    return codes[keep], vals[keep]
