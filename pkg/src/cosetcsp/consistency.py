"""The (k,l)-consistency algorithm with a size-only schedule and stage traces.

Families ``H_X`` are kept for every nonempty element subset ``X`` with
``|X| <= k`` and start as all partial solutions on ``X``.  One pass runs
the stages ``(X, Y)`` for every ``l``-subset ``Y`` in lexicographic order
and every ``X`` inside it (again lexicographic); a stage keeps the members
of ``H_X`` that extend to a partial solution on ``Y`` whose restrictions
to all subsets of size ``<= k`` are still in their families.  Passes
repeat until one removes nothing.  The schedule depends only on the
number of elements, which is what makes the run equivariant.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from math import comb
from typing import Mapping

import numpy as np

from .csp import (
    CosetTemplate,
    Instance,
    act_instance,
    element_groups,
    group_map,
)
from .kernels import get_kernel


def build_schedule(element_count: int, k: int, l: int):
    """All stage pairs (X, Y) as element-index tuples, ordered by (Y, X)."""
    if k > l:
        raise ValueError("need k <= l")
    L = min(l, element_count)
    xpos = _xpositions(L, k)
    for Y in itertools.combinations(range(element_count), L):
        for pos in xpos:
            yield tuple(Y[q] for q in pos), Y


def _xpositions(L: int, k: int) -> list[tuple]:
    return sorted(
        pos for s in range(1, min(k, L) + 1) for pos in itertools.combinations(range(L), s)
    )


def _colex_rank(sub) -> int:
    return sum(comb(e, t + 1) for t, e in enumerate(sub))


class _Layout:
    """Index arithmetic shared by the kernels and by the Python-side views."""

    def __init__(self, inst: Instance, t: CosetTemplate, k: int, l: int):
        self.inst = inst
        self.k = k
        self.l = l
        self.groups = element_groups(inst, t)
        self.n = n = len(inst.elements)
        self.L = min(l, n)
        self.orders = [g.order for g in self.groups]
        kk = min(k, n)
        self.size_base = [0] * (kk + 2)
        for s in range(1, kk + 1):
            self.size_base[s + 1] = self.size_base[s] + comb(n, s)
        self.subsets = []  # rank -> element index tuple
        for s in range(1, kk + 1):
            block = sorted(itertools.combinations(range(n), s), key=_colex_rank)
            self.subsets.extend(block)
        self.offsets = []
        self.sizes = []
        off = 0
        for sub in self.subsets:
            self.offsets.append(off)
            size = 1
            for e in sub:
                size *= self.orders[e]
            self.sizes.append(size)
            off += size
        self.total = off
        self.by_offset = {o: i for i, o in enumerate(self.offsets)}
        self.rank_of = {sub: i for i, sub in enumerate(self.subsets)}
        self.binom = [[comb(y, t) for t in range(self.L + 2)] for y in range(n + 1)]

        idx = inst.index
        self.scoped = {}  # frozenset of element indices -> [(scope, member set)]
        for c in inst.constraints:
            scope = tuple(idx[a] for a in c.args)
            self.scoped.setdefault(frozenset(scope), []).append((scope, t.relation(c.rel).coset._set))

    def decode(self, sub: tuple, u: int) -> tuple:
        vals = []
        for e in reversed(sub):
            o = self.orders[e]
            vals.append(u % o)
            u //= o
        return tuple(reversed(vals))

    def encode(self, sub: tuple, vals: tuple) -> int:
        u = 0
        for e, v in zip(sub, vals):
            u = u * self.orders[e] + v
        return u

    def constraints_within(self, elems: tuple):
        out = []
        for s in range(1, len(elems) + 1):
            for part in itertools.combinations(elems, s):
                out.extend(self.scoped.get(frozenset(part), ()))
        return out

    def satisfies(self, cons, assign: Mapping[int, int]) -> bool:
        return all(tuple(assign[e] for e in scope) in members for scope, members in cons)

    def initial_alive(self) -> bytearray:
        alive = bytearray(self.total)
        for sub, off in zip(self.subsets, self.offsets):
            cons = self.constraints_within(sub)
            for u, vals in enumerate(itertools.product(*(range(self.orders[e]) for e in sub))):
                if self.satisfies(cons, dict(zip(sub, vals))):
                    alive[off + u] = 1
        return alive

    def ymasks(self) -> dict:
        """Assignment masks for the L-subsets that contain some constraint scope."""
        masks = {}
        L, n = self.L, self.n
        for scope_set in self.scoped:
            if len(scope_set) > L:
                continue
            base = sorted(scope_set)
            rest = [e for e in range(n) if e not in scope_set]
            for extra in itertools.combinations(rest, L - len(base)):
                Y = tuple(sorted(base + list(extra)))
                r = _colex_rank(Y)
                if r in masks:
                    continue
                cons = self.constraints_within(Y)
                masks[r] = bytes(
                    self.satisfies(cons, dict(zip(Y, vals)))
                    for vals in itertools.product(*(range(self.orders[e]) for e in Y))
                )
        return masks

    def kernel_args(self, kernel_name: str):
        xpos = _xpositions(self.L, self.k)
        xp_start, xp_len, xp_items = [], [], []
        for pos in xpos:
            xp_start.append(len(xp_items))
            xp_len.append(len(pos))
            xp_items.extend(pos)
        size_base = self.size_base[: min(self.k, self.n) + 1]
        sub_off = self.offsets
        if kernel_name == "compiled":
            arr = lambda x: np.ascontiguousarray(x, dtype=np.int64)  # noqa: E731
            return (arr(sub_off), arr(self.orders), arr(self.binom), arr(size_base),
                    self.n, self.L, arr(xp_start), arr(xp_len), arr(xp_items))
        return (list(sub_off), list(self.orders), self.binom, list(size_base),
                self.n, self.L, xp_start, xp_len, xp_items)


@dataclass
class TraceEntry:
    stage: int
    subset: tuple  # element ids
    removed: tuple  # value tuples removed from H_X at this stage


@dataclass
class ConsistencyResult:
    accept: bool
    all_nonempty: bool
    k: int
    l: int
    passes: int
    stages: int
    emptied_stage: int | None
    initial: dict
    trace: list
    families: dict
    kernel: str
    pass_removals: list = field(default_factory=list)

    def families_at(self, stage: int) -> dict:
        """Family contents after ``stage`` stages have run."""
        fam = {X: set(v) for X, v in self.initial.items()}
        for entry in self.trace:
            if entry.stage >= stage:
                break
            fam[entry.subset] -= set(entry.removed)
        return fam

    def family_sizes(self) -> dict:
        return {X: len(v) for X, v in self.families.items()}


def _families_from(layout: _Layout, alive) -> dict:
    names = layout.inst.elements
    fam = {}
    for sub, off, size in zip(layout.subsets, layout.offsets, layout.sizes):
        key = tuple(names[e] for e in sub)
        fam[key] = {layout.decode(sub, u) for u in range(size) if alive[off + u]}
    return fam


def run_kl_consistency(inst: Instance, t: CosetTemplate, k: int, l: int, *, trace: bool = True,
                       short_circuit: bool = True, kernel: str | None = None,
                       max_passes: int | None = None) -> ConsistencyResult:
    """Run (k,l)-consistency to its fixpoint and report the verdict."""
    if not 1 <= k <= l:
        raise ValueError("need 1 <= k <= l")
    kname, refine = get_kernel(kernel)
    layout = _Layout(inst, t, k, l)
    alive = layout.initial_alive()
    initial = _families_from(layout, alive)
    args = layout.kernel_args(kname)
    masks = layout.ymasks()
    raw: list | None = [] if trace else None
    total = sum(alive)
    stage = 0
    passes = 0
    emptied = None
    pass_removals = []
    if layout.n and total:
        while True:
            passes += 1
            removed, stage, total, em = refine(alive, *args, masks, stage, raw, total, short_circuit)
            pass_removals.append(removed)
            if em >= 0:
                emptied = em
                break
            if removed == 0 or (max_passes is not None and passes >= max_passes):
                break
    elif layout.n:
        emptied = 0
    entries = []
    names = inst.elements
    for st, off, killed in raw or ():
        sub = layout.subsets[layout.by_offset[off]]
        entries.append(TraceEntry(st, tuple(names[e] for e in sub),
                                  tuple(layout.decode(sub, u) for u in killed)))
    families = _families_from(layout, alive)
    accept = any(families.values())
    all_nonempty = all(families.values())
    return ConsistencyResult(accept, all_nonempty, k, l, passes, stage, emptied, initial,
                             entries, families, kname, pass_removals)


def init_families(inst: Instance, t: CosetTemplate, k: int) -> dict:
    """All partial solutions on every element subset of size 1..k."""
    layout = _Layout(inst, t, k, k)
    return _families_from(layout, layout.initial_alive())


def refine_step(families: Mapping, pair, inst: Instance, t: CosetTemplate, k: int) -> dict:
    """One stage, written directly from the consistency condition.

    ``pair`` is ``(X, Y)`` as tuples of element ids.  Returns updated
    families; only ``H_X`` can shrink.  This is the slow reference used to
    cross-check the kernels.
    """
    X, Y = (tuple(p) for p in pair)
    groups = group_map(inst, t)
    cons = [c for c in inst.constraints if set(c.args) <= set(Y)]
    rest = [y for y in Y if y not in X]
    subs = [s for size in range(1, k + 1) for s in itertools.combinations(Y, size)]

    def good(h):
        for vals in itertools.product(*(range(groups[y].order) for y in rest)):
            ext = dict(h)
            ext.update(zip(rest, vals))
            if any(tuple(ext[a] for a in c.args) not in t.relation(c.rel) for c in cons):
                continue
            if all(tuple(ext[a] for a in s) in families[s] for s in subs):
                return True
        return False

    out = dict(families)
    out[X] = {v for v in families[X] if good(dict(zip(X, v)))}
    return out


def reference_consistency(inst: Instance, t: CosetTemplate, k: int, l: int):
    """Slow fixpoint loop over :func:`refine_step`; returns (families, trace)."""
    fams = init_families(inst, t, k)
    names = inst.elements
    trace = []
    stage = 0
    while True:
        changed = False
        for Xi, Yi in build_schedule(len(names), k, l):
            X = tuple(names[i] for i in Xi)
            Y = tuple(names[i] for i in Yi)
            new = refine_step(fams, (X, Y), inst, t, k)
            if new[X] != fams[X]:
                trace.append((stage, X, fams[X] - new[X]))
                changed = True
            fams = new
            stage += 1
            if not any(fams.values()):
                return fams, trace
        if not changed:
            return fams, trace


def act_families(fams: Mapping, s: Mapping, groups: Mapping) -> dict:
    """Direct image of every family under the pre-solution ``s``."""
    out = {}
    for X, vals in fams.items():
        out[X] = {tuple(groups[a].table[v][s[a]] for a, v in zip(X, vs)) for vs in vals}
    return out


def check_equivariance(inst: Instance, t: CosetTemplate, s: Mapping, k: int, l: int,
                       kernel: str | None = None) -> bool:
    """Stagewise comparison of the runs on ``inst`` and on ``inst * s``."""
    groups = group_map(inst, t)
    a = run_kl_consistency(inst, t, k, l, kernel=kernel)
    b = run_kl_consistency(act_instance(inst, s, t), t, k, l, kernel=kernel)
    if (a.accept, a.passes, a.stages, a.emptied_stage) != (b.accept, b.passes, b.stages, b.emptied_stage):
        return False
    if act_families(a.initial, s, groups) != b.initial:
        return False
    if len(a.trace) != len(b.trace):
        return False
    for ea, eb in zip(a.trace, b.trace):
        if ea.stage != eb.stage or ea.subset != eb.subset:
            return False
        moved = {tuple(groups[x].table[v][s[x]] for x, v in zip(ea.subset, vs)) for vs in ea.removed}
        if moved != set(eb.removed):
            return False
    return act_families(a.families, s, groups) == b.families


def random_presolution(inst: Instance, t: CosetTemplate, rng: random.Random, fixing=()) -> dict:
    fixing = set(fixing)
    return {
        e: (g.identity if e in fixing else rng.randrange(g.order))
        for e, g in group_map(inst, t).items()
    }


def check_fixpoint_locality(result: ConsistencyResult, inst: Instance, t: CosetTemplate,
                            rng: random.Random, samples: int = 5) -> bool:
    """``H_X * s == H_X`` for sampled pre-solutions ``s`` fixing ``X``."""
    groups = group_map(inst, t)
    for X, vals in result.families.items():
        for _ in range(samples):
            s = random_presolution(inst, t, rng, fixing=X)
            moved = {tuple(groups[a].table[v][s[a]] for a, v in zip(X, vs)) for vs in vals}
            if moved != vals:
                return False
    return True
