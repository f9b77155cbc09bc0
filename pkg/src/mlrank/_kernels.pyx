# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch rank over finite fields (codes + dense tables)."""

import numpy as np
from libc.stdint cimport int64_t


def rank_batch(const int64_t[:, :, ::1] mats, int64_t p, int64_t k,
               const int64_t[:, ::1] add, const int64_t[:, ::1] mul,
               const int64_t[::1] neg, const int64_t[::1] inv):
    cdef Py_ssize_t N = mats.shape[0], a = mats.shape[1], b = mats.shape[2]
    cdef int64_t[:, ::1] w = np.empty((a, b), dtype=np.int64)
    out_arr = np.zeros(N, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    cdef Py_ssize_t t, i, j, col, r, piv
    cdef int64_t s, f, tmp
    cdef bint prime = k == 1
    for t in range(N):
        for i in range(a):
            for j in range(b):
                w[i, j] = mats[t, i, j]
        r = 0
        for col in range(b):
            if r == a:
                break
            piv = -1
            for i in range(r, a):
                if w[i, col] != 0:
                    piv = i
                    break
            if piv < 0:
                continue
            if piv != r:
                for j in range(col, b):
                    tmp = w[r, j]
                    w[r, j] = w[piv, j]
                    w[piv, j] = tmp
            s = inv[w[r, col]]
            for j in range(col, b):
                if prime:
                    w[r, j] = (w[r, j] * s) % p
                else:
                    w[r, j] = mul[w[r, j], s]
            for i in range(r + 1, a):
                f = w[i, col]
                if f == 0:
                    continue
                for j in range(col, b):
                    if prime:
                        w[i, j] = (w[i, j] + (p - f) * w[r, j]) % p
                    else:
                        w[i, j] = add[w[i, j], neg[mul[f, w[r, j]]]]
            r += 1
        out[t] = r
    return out_arr
