"""Pure-Python reference for the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def rank_batch(mats, p, k, add, mul, neg, inv):
    mats = np.asarray(mats)
    N, a, b = mats.shape
    add_l, mul_l, neg_l, inv_l = add.tolist(), mul.tolist(), neg.tolist(), inv.tolist()
    prime = k == 1
    out = np.zeros(N, dtype=np.int64)
    for t, mat in enumerate(mats.tolist()):
        w = mat
        r = 0
        for col in range(b):
            if r == a:
                break
            piv = next((i for i in range(r, a) if w[i][col]), None)
            if piv is None:
                continue
            w[r], w[piv] = w[piv], w[r]
            s = inv_l[w[r][col]]
            if prime:
                w[r] = [x * s % p for x in w[r]]
            else:
                w[r] = [mul_l[x][s] for x in w[r]]
            pivot_row = w[r]
            for i in range(r + 1, a):
                f = w[i][col]
                if not f:
                    continue
                if prime:
                    w[i] = [(x - f * y) % p for x, y in zip(w[i], pivot_row)]
                else:
                    nf = neg_l[f]
                    w[i] = [add_l[x][mul_l[nf][y]] for x, y in zip(w[i], pivot_row)]
            r += 1
        out[t] = r
    return out
