# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled refinement pass.  Same contract as ``_refine_py.refine_pass``."""

from libc.stdlib cimport malloc, free
from libc.string cimport memset


def refine_pass(unsigned char[::1] alive, long long[::1] sub_off, long long[::1] orders,
                long long[:, ::1] binom, long long[::1] size_base, long long n, long long L,
                long long[::1] xp_start, long long[::1] xp_len, long long[::1] xp_items,
                dict ymasks, long long stage0, list trace, long long alive_total,
                bint short_circuit):
    cdef long long nx = xp_start.shape[0]
    cdef long long maxP = 1, maxF = 1
    cdef long long i, j, t, q, p, u, P, F, s, r, off, yrank, target
    cdef long long stage = stage0
    cdef long long removed = 0
    cdef long long emptied = -1
    cdef long long *ys
    cdef long long *yords
    cdef long long *vals
    cdef long long *proj
    cdef long long *offs
    cdef long long *sizes
    cdef long long *strides
    cdef unsigned char *valid
    cdef unsigned char *support
    cdef const unsigned char[::1] mview
    cdef bint has_mask, ok
    cdef list killed
    cdef object mobj

    if L <= 0:
        return 0, stage0, alive_total, -1

    # largest Y-assignment count and family size, for buffer sizing
    cdef list sorted_orders = sorted([orders[i] for i in range(n)], reverse=True)
    for i in range(L):
        maxP *= sorted_orders[i]
    maxF = maxP

    ys = <long long *> malloc(L * sizeof(long long))
    yords = <long long *> malloc(L * sizeof(long long))
    vals = <long long *> malloc(maxP * L * sizeof(long long))
    proj = <long long *> malloc(nx * maxP * sizeof(long long))
    offs = <long long *> malloc(nx * sizeof(long long))
    sizes = <long long *> malloc(nx * sizeof(long long))
    strides = <long long *> malloc(L * sizeof(long long))
    valid = <unsigned char *> malloc(maxP)
    support = <unsigned char *> malloc(maxF)
    try:
        for i in range(L):
            ys[i] = i
        while True:
            P = 1
            yrank = 0
            for t in range(L):
                yords[t] = orders[ys[t]]
                P *= yords[t]
                yrank += binom[ys[t], t + 1]
            mobj = ymasks.get(yrank)
            has_mask = mobj is not None
            if has_mask:
                mview = mobj

            # lexicographic decode of Y-assignments
            for p in range(P):
                r = p
                for t in range(L - 1, -1, -1):
                    vals[p * L + t] = r % yords[t]
                    r //= yords[t]

            for j in range(nx):
                r = size_base[xp_len[j]]
                for t in range(xp_len[j]):
                    q = xp_items[xp_start[j] + t]
                    r += binom[ys[q], t + 1]
                off = sub_off[r]
                offs[j] = off
                s = 1
                for t in range(xp_len[j] - 1, -1, -1):
                    q = xp_items[xp_start[j] + t]
                    strides[t] = s
                    s *= yords[q]
                sizes[j] = s
                for p in range(P):
                    u = off
                    for t in range(xp_len[j]):
                        q = xp_items[xp_start[j] + t]
                        u += vals[p * L + q] * strides[t]
                    proj[j * maxP + p] = u

            for p in range(P):
                ok = (not has_mask) or mview[p] != 0
                if ok:
                    for j in range(nx):
                        if alive[proj[j * maxP + p]] == 0:
                            ok = False
                            break
                valid[p] = ok

            for j in range(nx):
                off = offs[j]
                F = sizes[j]
                memset(support, 0, F)
                for p in range(P):
                    if valid[p]:
                        support[proj[j * maxP + p] - off] = 1
                killed = None
                for u in range(F):
                    if alive[off + u] and not support[u]:
                        alive[off + u] = 0
                        removed += 1
                        alive_total -= 1
                        target = off + u
                        for p in range(P):
                            if proj[j * maxP + p] == target:
                                valid[p] = 0
                        if killed is None:
                            killed = []
                        killed.append(u)
                if killed is not None and trace is not None:
                    trace.append((stage, off, killed))
                stage += 1
                if short_circuit and alive_total == 0:
                    emptied = stage - 1
                    return removed, stage, alive_total, emptied

            i = L - 1
            while i >= 0 and ys[i] == n - L + i:
                i -= 1
            if i < 0:
                break
            ys[i] += 1
            for t in range(i + 1, L):
                ys[t] = ys[t - 1] + 1
    finally:
        free(ys)
        free(yords)
        free(vals)
        free(proj)
        free(offs)
        free(sizes)
        free(strides)
        free(valid)
        free(support)
    return removed, stage, alive_total, -1
