"""Complete depth-first solver used as the ground-truth oracle.

Elements are assigned in a static order chosen greedily to keep the
frontier small (assigned elements still sharing a constraint with an
unassigned one).  Values are tried identity first, then in index order.
After each assignment every fully assigned constraint is checked and the
candidates of a constraint's last open element are pruned.  Subtrees
without solutions are memoized by (depth, frontier values), which is what
keeps parity-style instances such as twisted tori tractable.  Everything
is deterministic given the instance.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from .csp import Assignment, CosetTemplate, Instance, element_groups, is_solution
from .errors import BudgetExceeded, CapExceeded
from .groups import ProductGroup, classify_subset

DEFAULT_NODE_CAP = 1_000_000


def frontier_order(n: int, scopes: list[tuple]) -> list[int]:
    """Greedy element order minimizing the frontier size, ties by index."""
    cons_of = [[] for _ in range(n)]
    for ci, scope in enumerate(scopes):
        for v in set(scope):
            cons_of[v].append(ci)
    open_count = [len(set(s)) for s in scopes]
    done = [False] * n
    frontier: set[int] = set()
    order = []
    for _ in range(n):
        best_key, best = None, -1
        for v in range(n):
            if done[v]:
                continue
            closing = {ci for ci in cons_of[v] if open_count[ci] == 1}
            size = len(frontier) + 1
            if all(ci in closing for ci in cons_of[v]):
                size -= 1
            for u in frontier:
                if all(open_count[ci] == 0 or ci in closing for ci in cons_of[u]):
                    size -= 1
            touching = sum(1 for ci in cons_of[v] if open_count[ci] < len(set(scopes[ci])))
            key = (size, -touching, v)
            if best_key is None or key < best_key:
                best_key, best = key, v
        done[best] = True
        order.append(best)
        for ci in cons_of[best]:
            open_count[ci] -= 1
        frontier.add(best)
        frontier = {u for u in frontier if any(open_count[ci] for ci in cons_of[u])}
    return order


class _Search:
    def __init__(self, inst: Instance, t: CosetTemplate, fixed: Mapping | None, node_cap: int,
                 rng: random.Random | None = None):
        self.n = n = len(inst.elements)
        groups = element_groups(inst, t)
        self.node_cap = node_cap
        self.nodes = 0
        idx = inst.index
        domains = []
        for g in groups:
            if rng is not None:
                vals = list(range(g.order))
                rng.shuffle(vals)
            else:
                vals = [g.identity] + [v for v in range(g.order) if v != g.identity]
            domains.append(vals)
        self.scopes = []
        self.rels = []
        self.cons_of = [[] for _ in range(n)]
        for ci, c in enumerate(inst.constraints):
            scope = tuple(idx[a] for a in c.args)
            members = t.relation(c.rel).coset._set
            self.scopes.append(scope)
            self.rels.append(members)
            for v in set(scope):
                self.cons_of[v].append(ci)
            if len(set(scope)) == 1:
                v = scope[0]
                domains[v] = [x for x in domains[v] if tuple(x for _ in scope) in members]
        if fixed:
            for e, val in fixed.items():
                v = idx[e]
                domains[v] = [val] if val in domains[v] else []
        self.domains = domains
        self.value = [None] * n
        self.order = frontier_order(n, self.scopes)
        # frontier after assigning order[:d], as positions into `order`
        pos = {v: d for d, v in enumerate(self.order)}
        last = [max((pos[u] for ci in self.cons_of[v] for u in self.scopes[ci]), default=pos[v])
                for v in range(n)]
        self.frontiers = [tuple(v for v in self.order[:d] if last[v] >= d) for d in range(n + 1)]
        self.dead: set = set()

    def _check(self, var) -> list | None:
        """Prune after assigning ``var``; returns an undo log or None on wipe-out."""
        log = []
        value = self.value
        for ci in self.cons_of[var]:
            scope = self.scopes[ci]
            open_ = {u for u in scope if value[u] is None}
            if not open_:
                if tuple(value[u] for u in scope) not in self.rels[ci]:
                    self._undo(log)
                    return None
            elif len(open_) == 1:
                (u,) = open_
                rel = self.rels[ci]
                keep = []
                for x in self.domains[u]:
                    value[u] = x
                    if tuple(value[w] for w in scope) in rel:
                        keep.append(x)
                value[u] = None
                if len(keep) != len(self.domains[u]):
                    log.append((u, self.domains[u]))
                    self.domains[u] = keep
                    if not keep:
                        self._undo(log)
                        return None
        return log

    def _undo(self, log):
        for u, dom in reversed(log):
            self.domains[u] = dom

    def run(self) -> Iterator[list]:
        if any(not d for d in self.domains):
            return
        yield from self._dfs(0)

    def _dfs(self, depth):
        if depth == self.n:
            yield list(self.value)
            return
        key = (depth, tuple(self.value[v] for v in self.frontiers[depth]))
        if key in self.dead:
            return
        found = False
        var = self.order[depth]
        for x in list(self.domains[var]):
            self.nodes += 1
            if self.nodes > self.node_cap:
                raise BudgetExceeded(f"node cap {self.node_cap} exceeded")
            self.value[var] = x
            log = self._check(var)
            if log is not None:
                for sol in self._dfs(depth + 1):
                    found = True
                    yield sol
                self._undo(log)
            self.value[var] = None
        if not found:
            self.dead.add(key)


def iter_solutions(inst: Instance, t: CosetTemplate, fixed: Mapping | None = None,
                   node_cap: int = DEFAULT_NODE_CAP, rng: random.Random | None = None
                   ) -> Iterator[Assignment]:
    """Yield every solution agreeing with ``fixed``, in search order."""
    search = _Search(inst, t, fixed, node_cap, rng)
    for vals in search.run():
        yield dict(zip(inst.elements, vals))


def solve(inst: Instance, t: CosetTemplate, fixed: Mapping | None = None,
          node_cap: int = DEFAULT_NODE_CAP) -> Assignment | None:
    """First solution in search order, or None if the instance is unsolvable."""
    return next(iter_solutions(inst, t, fixed, node_cap), None)


def extends_to_solution(inst: Instance, t: CosetTemplate, h: Mapping,
                        node_cap: int = DEFAULT_NODE_CAP) -> bool:
    return solve(inst, t, fixed=h, node_cap=node_cap) is not None


@dataclass
class SolutionSet:
    solutions: list
    coset_certified: bool | None
    elements: tuple = field(default=())

    def __len__(self):
        return len(self.solutions)

    def tuples(self) -> list[tuple]:
        return [tuple(s[e] for e in self.elements) for s in self.solutions]


def all_solutions(inst: Instance, t: CosetTemplate, cap: int = 100_000,
                  node_cap: int = DEFAULT_NODE_CAP, certify_limit: int = 1024) -> SolutionSet:
    """Every solution, plus a coset certificate on the tuple view.

    The certificate is computed when at most ``certify_limit`` solutions
    exist; beyond that ``coset_certified`` is None.
    """
    sols = []
    for h in iter_solutions(inst, t, node_cap=node_cap):
        sols.append(h)
        if len(sols) > cap:
            raise CapExceeded(f"more than {cap} solutions")
    out = SolutionSet(sols, None, inst.elements)
    if not sols:
        out.coset_certified = True
    elif len(sols) <= certify_limit:
        amb = ProductGroup(element_groups(inst, t))
        out.coset_certified = classify_subset(amb, out.tuples()).is_coset
    return out


def brute_force_solutions(inst: Instance, t: CosetTemplate, limit: int = 1 << 16) -> list[Assignment]:
    """Enumerate every pre-solution and keep the solutions.  Oracle for small instances."""
    import itertools

    groups = element_groups(inst, t)
    total = 1
    for g in groups:
        total *= g.order
    if total > limit:
        raise CapExceeded(f"{total} pre-solutions exceeds brute-force limit {limit}")
    out = []
    for vals in itertools.product(*(range(g.order) for g in groups)):
        h = dict(zip(inst.elements, vals))
        if is_solution(inst, t, h):
            out.append(h)
    return out
