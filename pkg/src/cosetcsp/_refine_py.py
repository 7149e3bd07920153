"""Pure-Python refinement pass; the reference twin of ``_refine.pyx``.

Both implementations take the same arguments and must produce identical
results, including the trace.  See :func:`refine_pass` for the layout.
"""


def refine_pass(alive, sub_off, orders, binom, size_base, n, L, xp_start, xp_len, xp_items,
                ymasks, stage0, trace, alive_total, short_circuit):
    """Run every (X, Y) stage of one schedule pass, in place on ``alive``.

    ``alive`` is a flat byte array holding one flag per (subset, value
    tuple); subset ``X`` starts at ``sub_off[rank(X)]`` and its value tuples
    are mixed-radix encoded, first element most significant.  Ys are the
    L-subsets in lexicographic order, and within each Y the subsets listed
    by ``xp_*`` (positions into Y, lexicographic) are both the stage
    targets and the projections checked.  ``ymasks`` maps the colex rank
    of Y to a byte string marking which Y-assignments satisfy the
    constraints inside Y; Ys absent from it accept everything.

    Returns ``(removed, next_stage, alive_total, emptied_stage)`` where
    ``emptied_stage`` is -1 unless the pass stopped because every family
    became empty.
    """
    nx = len(xp_start)
    xsubs = [tuple(xp_items[xp_start[j]:xp_start[j] + xp_len[j]]) for j in range(nx)]
    ys = list(range(L))
    stage = stage0
    removed = 0
    while True:
        yords = [orders[y] for y in ys]
        P = 1
        for o in yords:
            P *= o
        yrank = 0
        for t, y in enumerate(ys):
            yrank += binom[y][t + 1]
        mask = ymasks.get(yrank)

        # value tuple of every Y-assignment, lexicographic
        vals = [()]
        for o in yords:
            vals = [v + (x,) for v in vals for x in range(o)]

        offs = []
        sizes = []
        proj = []
        for pos in xsubs:
            r = size_base[len(pos)]
            for t, q in enumerate(pos):
                r += binom[ys[q]][t + 1]
            off = sub_off[r]
            offs.append(off)
            strides = []
            s = 1
            for q in reversed(pos):
                strides.append(s)
                s *= yords[q]
            strides.reverse()
            sizes.append(s)
            proj.append([off + sum(v[q] * st for q, st in zip(pos, strides)) for v in vals])

        valid = [
            (mask is None or mask[p]) and all(alive[pj[p]] for pj in proj)
            for p in range(P)
        ]

        for j in range(nx):
            off = offs[j]
            pj = proj[j]
            support = [False] * sizes[j]
            for p in range(P):
                if valid[p]:
                    support[pj[p] - off] = True
            killed = None
            for u in range(sizes[j]):
                if alive[off + u] and not support[u]:
                    alive[off + u] = 0
                    removed += 1
                    alive_total -= 1
                    target = off + u
                    for p in range(P):
                        if pj[p] == target:
                            valid[p] = False
                    if killed is None:
                        killed = []
                    killed.append(u)
            if killed is not None and trace is not None:
                trace.append((stage, off, killed))
            stage += 1
            if short_circuit and alive_total == 0:
                return removed, stage, alive_total, stage - 1

        # next combination in lexicographic order
        i = L - 1
        while i >= 0 and ys[i] == n - L + i:
            i -= 1
        if i < 0:
            break
        ys[i] += 1
        for t in range(i + 1, L):
            ys[t] = ys[t - 1] + 1
    return removed, stage, alive_total, -1
