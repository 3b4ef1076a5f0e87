# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: truth-table diversity evolution and flooding min-sum.

Both functions have pure-Python twins in ``_purepy``; ``_backend`` picks one.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, int32_t, uint8_t
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

cnp.import_array()

cdef uint64_t ALL_ONES = 0xFFFFFFFFFFFFFFFF


def dive_propagate(const int64_t[::1] cn_ptr,
                   const int64_t[::1] vn_ptr,
                   const int64_t[::1] vn_edges,
                   const int64_t[::1] edge_vn,
                   const uint64_t[:, ::1] channel,
                   int iters,
                   uint64_t[:, :, ::1] out_hist=None,
                   uint64_t[:, :, ::1] alpha_hist=None):
    """Flooding AND/OR message passing over packed truth tables.

    Edges must be numbered so that CN ``j`` owns ``cn_ptr[j] .. cn_ptr[j+1]-1``.
    Returns ``(alpha, out, fixpoint_iter)``; ``fixpoint_iter`` is the first
    iteration whose state equals the previous one, or ``-1``.
    Histories, if given, receive iterations ``0 .. iters`` (index 0 holds the
    channel initialization).
    """
    cdef Py_ssize_t n_cn = cn_ptr.shape[0] - 1
    cdef Py_ssize_t n_vn = vn_ptr.shape[0] - 1
    cdef Py_ssize_t n_e = edge_vn.shape[0]
    cdef Py_ssize_t W = channel.shape[1]
    cdef Py_ssize_t max_deg = 1
    cdef Py_ssize_t j, i, e, k, w, a, b, d, it
    for j in range(n_cn):
        if cn_ptr[j + 1] - cn_ptr[j] > max_deg:
            max_deg = cn_ptr[j + 1] - cn_ptr[j]
    for i in range(n_vn):
        if vn_ptr[i + 1] - vn_ptr[i] > max_deg:
            max_deg = vn_ptr[i + 1] - vn_ptr[i]

    alpha_np = np.empty((n_e, W), dtype=np.uint64)
    out_np = np.empty((n_vn, W), dtype=np.uint64)
    cdef uint64_t[:, ::1] alpha = alpha_np
    cdef uint64_t[:, ::1] out = out_np
    cdef uint64_t[:, ::1] beta = np.empty((n_e, W), dtype=np.uint64)
    cdef uint64_t[:, ::1] suffix = np.empty((max_deg + 1, W), dtype=np.uint64)
    cdef uint64_t acc, newv
    cdef bint changed
    cdef int fixpoint = -1
    cdef bint keep_out = out_hist is not None
    cdef bint keep_alpha = alpha_hist is not None

    with nogil:
        for e in range(n_e):
            for w in range(W):
                alpha[e, w] = channel[edge_vn[e], w]
        for i in range(n_vn):
            for w in range(W):
                out[i, w] = channel[i, w]
        if keep_out:
            for i in range(n_vn):
                for w in range(W):
                    out_hist[0, i, w] = out[i, w]
        if keep_alpha:
            for e in range(n_e):
                for w in range(W):
                    alpha_hist[0, e, w] = alpha[e, w]

        for it in range(1, iters + 1):
            if fixpoint >= 0:
                if keep_out:
                    for i in range(n_vn):
                        for w in range(W):
                            out_hist[it, i, w] = out[i, w]
                if keep_alpha:
                    for e in range(n_e):
                        for w in range(W):
                            alpha_hist[it, e, w] = alpha[e, w]
                continue

            # CN: extrinsic AND via suffix products
            for j in range(n_cn):
                a = cn_ptr[j]
                b = cn_ptr[j + 1]
                d = b - a
                for w in range(W):
                    suffix[d, w] = ALL_ONES
                    for k in range(d - 1, -1, -1):
                        suffix[k, w] = suffix[k + 1, w] & alpha[a + k, w]
                    acc = ALL_ONES
                    for k in range(d):
                        beta[a + k, w] = acc & suffix[k + 1, w]
                        acc = acc & alpha[a + k, w]

            # VN: extrinsic OR plus channel
            changed = False
            for i in range(n_vn):
                a = vn_ptr[i]
                b = vn_ptr[i + 1]
                d = b - a
                for w in range(W):
                    suffix[d, w] = 0
                    for k in range(d - 1, -1, -1):
                        suffix[k, w] = suffix[k + 1, w] | beta[vn_edges[a + k], w]
                    acc = channel[i, w]
                    for k in range(d):
                        e = vn_edges[a + k]
                        newv = acc | suffix[k + 1, w]
                        if newv != alpha[e, w]:
                            changed = True
                        alpha[e, w] = newv
                        acc = acc | beta[e, w]
                    if acc != out[i, w]:
                        changed = True
                    out[i, w] = acc
            if not changed:
                fixpoint = it
            if keep_out:
                for i in range(n_vn):
                    for w in range(W):
                        out_hist[it, i, w] = out[i, w]
            if keep_alpha:
                for e in range(n_e):
                    for w in range(W):
                        alpha_hist[it, e, w] = alpha[e, w]

    return alpha_np, out_np, fixpoint


cdef inline double _clip(double x, double lim) nogil:
    if x > lim:
        return lim
    if x < -lim:
        return -lim
    return x


def min_sum_decode_batch(const int64_t[::1] row_ptr,
                         const int32_t[::1] edge_col,
                         const double[:, ::1] llr,
                         int max_iters,
                         bint early_stop,
                         double scaling,
                         double clip,
                         uint8_t[:, ::1] hard,
                         int32_t[::1] iters_used,
                         uint8_t[::1] converged):
    """Flooding min-sum over a batch of channel LLR vectors.

    Row ``r`` of the parity-check matrix owns edges ``row_ptr[r] .. row_ptr[r+1]-1``
    with column indices ``edge_col``.  Results are written into ``hard``,
    ``iters_used`` and ``converged``.  Runs without the GIL.
    """
    cdef Py_ssize_t n_rows = row_ptr.shape[0] - 1
    cdef Py_ssize_t n_e = edge_col.shape[0]
    cdef Py_ssize_t n_col = llr.shape[1]
    cdef Py_ssize_t n_batch = llr.shape[0]
    cdef Py_ssize_t t, r, e, a, b, c
    cdef int it
    cdef double *c2v
    cdef double *v2c
    cdef double *post
    cdef double m1, m2, mag, x
    cdef Py_ssize_t arg1
    cdef int neg, sgn
    cdef bint ok
    cdef uint8_t parity

    with nogil:
        c2v = <double *> malloc(n_e * sizeof(double))
        v2c = <double *> malloc(n_e * sizeof(double))
        post = <double *> malloc(n_col * sizeof(double))
        for t in range(n_batch):
            for e in range(n_e):
                c2v[e] = 0.0
            for c in range(n_col):
                post[c] = _clip(llr[t, c], clip)
            iters_used[t] = max_iters
            converged[t] = 0
            for it in range(1, max_iters + 1):
                for r in range(n_rows):
                    a = row_ptr[r]
                    b = row_ptr[r + 1]
                    m1 = 1e300
                    m2 = 1e300
                    arg1 = -1
                    neg = 0
                    for e in range(a, b):
                        x = _clip(post[edge_col[e]] - c2v[e], clip)
                        v2c[e] = x
                        if x < 0:
                            neg ^= 1
                            mag = -x
                        else:
                            mag = x
                        if mag < m1:
                            m2 = m1
                            m1 = mag
                            arg1 = e
                        elif mag < m2:
                            m2 = mag
                    for e in range(a, b):
                        sgn = neg ^ (1 if v2c[e] < 0 else 0)
                        mag = m2 if e == arg1 else m1
                        if b - a == 1:
                            mag = clip
                        mag = scaling * mag
                        c2v[e] = -mag if sgn else mag
                for c in range(n_col):
                    post[c] = llr[t, c]
                for e in range(n_e):
                    post[edge_col[e]] += c2v[e]
                for c in range(n_col):
                    post[c] = _clip(post[c], clip)
                    hard[t, c] = 1 if post[c] < 0 else 0
                if early_stop or it == max_iters:
                    ok = True
                    for r in range(n_rows):
                        parity = 0
                        for e in range(row_ptr[r], row_ptr[r + 1]):
                            parity ^= hard[t, edge_col[e]]
                        if parity:
                            ok = False
                            break
                    if ok:
                        converged[t] = 1
                        if early_stop:
                            iters_used[t] = it
                            break
        free(c2v)
        free(v2c)
        free(post)
