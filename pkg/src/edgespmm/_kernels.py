"""Compiled row kernels. All release the GIL; callers hand each worker a disjoint row range."""
import numpy as np
from numba import njit

BUCKET = 1
FASTRAND = 2

NORM_NONE = 0
NORM_SAMPLED = 1
NORM_DEGREE = 2

# stats slots
ST_BLOCKS = 0
ST_SAMPLED = 1
ST_MAX_ITERS = 2


@njit(nogil=True, cache=True, inline="always")
def fastrand_slot(k, nnz, prime):
    # int64 throughout; prime is reduced first so k * step stays below 2**62
    return (np.int64(k) * (np.int64(prime) % nnz)) % nnz


@njit(cache=True)
def fastrand_many(slots, nnz, prime):
    out = np.empty(slots.shape[0], dtype=np.int64)
    for t in range(slots.shape[0]):
        out[t] = fastrand_slot(slots[t], nnz[t], prime)
    return out


@njit(nogil=True, cache=True)
def exact_rows(row_ptr, col_ind, values, b, out, r0, r1, norm, acc, stats):
    ncols = b.shape[1]
    for i in range(r0, r1):
        for j in range(ncols):
            acc[j] = np.float32(0.0)
        start = row_ptr[i]
        end = row_ptr[i + 1]
        for k in range(start, end):
            v = values[k]
            c = col_ind[k]
            for j in range(ncols):
                acc[j] += v * b[c, j]
        nnz = end - start
        if norm != NORM_NONE and nnz > 0:
            d = np.float32(nnz)
            for j in range(ncols):
                out[i, j] = acc[j] / d
        else:
            for j in range(ncols):
                out[i, j] = acc[j]
        stats[ST_SAMPLED] += nnz
        if nnz > stats[ST_MAX_ITERS]:
            stats[ST_MAX_ITERS] = nnz


@njit(nogil=True, cache=True)
def sampled_blocks(row_ptr, col_ind, values, b, out, blk0, blk1, rows_per_block, width,
                   s_width, kind, prime, norm, sh_val, sh_col, counts, acc, stats, compute):
    """Two-stage kernel over row blocks [blk0, blk1).

    Stage 1 fills ``sh_val``/``sh_col`` (rows_per_block x width slots) with the
    sampled entries of every row in the block; stage 2 accumulates each output
    row from its slots in slot order. ``compute=False`` runs stage 1 only.
    """
    n_rows = out.shape[0]
    ncols = b.shape[1]
    for blk in range(blk0, blk1):
        r0 = blk * rows_per_block
        r1 = min(r0 + rows_per_block, n_rows)
        # stage 1: sample into the block scratch
        for g in range(r1 - r0):
            i = r0 + g
            start = row_ptr[i]
            nnz = row_ptr[i + 1] - start
            cnt = min(nnz, s_width)
            counts[g] = cnt
            base = g * width
            if kind == BUCKET:
                for k in range(cnt):
                    sh_val[base + k] = values[start + k]
                    sh_col[base + k] = col_ind[start + k]
            else:
                for k in range(cnt):
                    pos = fastrand_slot(k, nnz, prime)
                    sh_val[base + k] = values[start + pos]
                    sh_col[base + k] = col_ind[start + pos]
        stats[ST_BLOCKS] += 1
        if not compute:
            continue
        # stage 2: sampled SpMM from scratch only
        for g in range(r1 - r0):
            i = r0 + g
            cnt = counts[g]
            base = g * width
            for j in range(ncols):
                acc[j] = np.float32(0.0)
            for k in range(cnt):
                v = sh_val[base + k]
                c = sh_col[base + k]
                for j in range(ncols):
                    acc[j] += v * b[c, j]
            d = cnt
            if norm == NORM_DEGREE:
                d = row_ptr[i + 1] - row_ptr[i]
            if norm != NORM_NONE and d > 0:
                df = np.float32(d)
                for j in range(ncols):
                    out[i, j] = acc[j] / df
            else:
                for j in range(ncols):
                    out[i, j] = acc[j]
            stats[ST_SAMPLED] += cnt
            if cnt > stats[ST_MAX_ITERS]:
                stats[ST_MAX_ITERS] = cnt
