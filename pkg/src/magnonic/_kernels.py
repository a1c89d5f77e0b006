"""Compiled Lindblad right-hand side.

The state is a Hermitian matrix ``rho``. The coherent part and the
anticommutator of every dissipator are folded into one non-Hermitian
generator ``K = H - i sum_k c_k o_k^dag o_k`` held as a sum of CSR blocks with
per-call complex weights, so that

    drho/dt = -i K rho + h.c. + sum_k 2 c_k o_k rho o_k^dag.

Jump operators with at most one nonzero per row (ladder, Pauli, and their
products) are applied as a gather ``rho[col_i, col_j]`` instead of two matrix
products.
"""
import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def lindblad_rhs(rho, out, scratch, indptr, indices, data, block_offsets, weights, jump_cols, jump_vals, jump_rates):
    d = rho.shape[0]
    for i in range(d):
        for j in range(d):
            scratch[i, j] = 0.0
    for b in range(weights.shape[0]):
        w = weights[b]
        if w == 0:
            continue
        base = block_offsets[b]
        for i in range(d):
            for p in range(indptr[base + i], indptr[base + i + 1]):
                v = w * data[p]
                col = indices[p]
                for j in range(d):
                    scratch[i, j] += v * rho[col, j]
    # -i K rho + (-i K rho)^dag
    for i in range(d):
        for j in range(i, d):
            x = -1j * scratch[i, j] + 1j * np.conj(scratch[j, i])
            out[i, j] = x
            out[j, i] = np.conj(x)
    for q in range(jump_cols.shape[0]):
        c2 = 2.0 * jump_rates[q]
        cols = jump_cols[q]
        vals = jump_vals[q]
        for i in range(d):
            ci = cols[i]
            if ci < 0:
                continue
            vi = c2 * vals[i]
            for j in range(d):
                cj = cols[j]
                if cj < 0:
                    continue
                out[i, j] += vi * np.conj(vals[j]) * rho[ci, cj]
