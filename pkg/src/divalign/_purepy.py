"""NumPy fallbacks for the compiled kernels in ``_kernels.pyx``.

Same signatures and same results; used when the extension is not built or
``DIVALIGN_PURE=1`` is set.
"""

from __future__ import annotations

import numpy as np

ALL_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)


def dive_propagate(cn_ptr, vn_ptr, vn_edges, edge_vn, channel, iters, out_hist=None, alpha_hist=None):
    n_cn = len(cn_ptr) - 1
    n_vn = len(vn_ptr) - 1
    channel = np.asarray(channel, dtype=np.uint64)
    alpha = channel[edge_vn].copy()
    out = channel.copy()
    beta = np.empty_like(alpha)
    cn_slices = [slice(cn_ptr[j], cn_ptr[j + 1]) for j in range(n_cn)]
    vn_lists = [np.asarray(vn_edges[vn_ptr[i]:vn_ptr[i + 1]]) for i in range(n_vn)]
    if out_hist is not None:
        out_hist[0] = out
    if alpha_hist is not None:
        alpha_hist[0] = alpha
    fixpoint = -1
    for it in range(1, iters + 1):
        if fixpoint < 0:
            for sl in cn_slices:
                beta[sl] = _extrinsic(alpha[sl], np.bitwise_and, ALL_ONES)
            new_alpha = np.empty_like(alpha)
            new_out = np.empty_like(out)
            for i, edges in enumerate(vn_lists):
                ext = _extrinsic(beta[edges], np.bitwise_or, np.uint64(0))
                new_alpha[edges] = ext | channel[i]
                new_out[i] = channel[i] | np.bitwise_or.reduce(beta[edges], axis=0)
            if np.array_equal(new_alpha, alpha) and np.array_equal(new_out, out):
                fixpoint = it
            alpha, out = new_alpha, new_out
        if out_hist is not None:
            out_hist[it] = out
        if alpha_hist is not None:
            alpha_hist[it] = alpha
    return alpha, out, fixpoint


def _extrinsic(block, op, identity):
    """Row ``k`` of the result combines every row of ``block`` except ``k``."""
    d = block.shape[0]
    prefix = np.empty((d + 1,) + block.shape[1:], dtype=np.uint64)
    suffix = np.empty_like(prefix)
    prefix[0] = identity
    suffix[d] = identity
    for k in range(d):
        prefix[k + 1] = op(prefix[k], block[k])
    for k in range(d - 1, -1, -1):
        suffix[k] = op(suffix[k + 1], block[k])
    return op(prefix[:d], suffix[1:])


def min_sum_decode_batch(row_ptr, edge_col, llr, max_iters, early_stop, scaling, clip,
                         hard, iters_used, converged):
    """Flooding min-sum, vectorized over edges; codewords handled one at a time."""
    row_ptr = np.asarray(row_ptr)
    edge_col = np.asarray(edge_col, dtype=np.int64)
    n_rows = len(row_ptr) - 1
    n_e = len(edge_col)
    degrees = np.diff(row_ptr)
    edge_row = np.repeat(np.arange(n_rows), degrees)
    starts = row_ptr[:-1]
    for t in range(llr.shape[0]):
        ch = llr[t]
        c2v = np.zeros(n_e)
        post = np.clip(ch, -clip, clip)
        iters_used[t] = max_iters
        converged[t] = 0
        for it in range(1, max_iters + 1):
            v2c = np.clip(post[edge_col] - c2v, -clip, clip)
            mag = np.abs(v2c)
            neg = v2c < 0
            row_neg = np.bitwise_xor.reduceat(neg.astype(np.uint8), starts)
            # first minimum and its position per row, then second minimum
            m1 = np.minimum.reduceat(mag, starts)
            is_min = mag == m1[edge_row]
            first = np.zeros(n_e, dtype=bool)
            idx = np.flatnonzero(is_min)
            _, pos = np.unique(edge_row[idx], return_index=True)
            first[idx[pos]] = True
            masked = np.where(first, np.inf, mag)
            m2 = np.minimum.reduceat(masked, starts)
            out_mag = np.where(first, m2[edge_row], m1[edge_row])
            out_mag = np.where(degrees[edge_row] == 1, clip, out_mag)
            sgn = row_neg[edge_row] ^ neg.astype(np.uint8)
            c2v = scaling * np.where(sgn == 1, -out_mag, out_mag)
            post = ch.copy()
            np.add.at(post, edge_col, c2v)
            post = np.clip(post, -clip, clip)
            bits = (post < 0).astype(np.uint8)
            hard[t] = bits
            if early_stop or it == max_iters:
                syn = np.bitwise_xor.reduceat(bits[edge_col], starts)
                if not syn.any():
                    converged[t] = 1
                    if early_stop:
                        iters_used[t] = it
                        break
