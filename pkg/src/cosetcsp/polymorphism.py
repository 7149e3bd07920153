"""Search for majority polymorphisms of a coset template.

A majority polymorphism exists exactly when the template is 2-Helly, so
this search is the complete 2-Helly test for small templates.  Elements
of the template are ``(carrier label, index)`` pairs.
"""

from __future__ import annotations

import itertools

from .csp import CosetTemplate, Instance
from .errors import CapExceeded
from .groups import classify_subset, subgroup_of, translate
from .solver import DEFAULT_NODE_CAP, solve


def relation_cosets(t: CosetTemplate, name: str, cap: int = 1 << 12) -> list:
    """All distinct cosets of the subgroup underlying a relation."""
    rel = t.relation(name)
    amb = rel.coset.ambient
    if amb.order > cap:
        raise CapExceeded(f"ambient of {name} has {amb.order} elements, cap {cap}")
    k = subgroup_of(rel.coset)
    seen = {}
    for pi in amb.elements():
        c = translate(k, pi)
        seen.setdefault(c.members, c)
    return list(seen.values())


def _relations_to_preserve(t: CosetTemplate, include_translates: bool):
    out = {}
    for name in t.base_names:
        rel = t.relation(name)
        sets = relation_cosets(t, name) if include_translates else [rel.coset]
        for c in sets:
            out.setdefault((rel.signature, c.members), c)
    return [(sig, c) for (sig, _), c in out.items()]


def find_majority_polymorphism(t: CosetTemplate, include_translates: bool = True,
                               node_cap: int = DEFAULT_NODE_CAP):
    """Return a majority operation preserving every relation, or None.

    The result maps each triple of template elements to an element.
    Triples with a repeated entry are fixed by the majority identities;
    the others are variables of an auxiliary instance whose constraints
    say that applying the operation coordinatewise to any three tuples
    of a relation lands in that relation.
    """
    elems = [(lab, x) for lab, g in t.carriers.items() for x in g.elements()]
    relations = _relations_to_preserve(t, include_translates)

    def fixed(a, b, c):
        if a == b or a == c:
            return a
        if b == c:
            return b
        return None

    scratch = CosetTemplate(t.carriers)
    var_names = {}
    constraints = set()
    for sig, coset in relations:
        mem = coset.members
        for r1, r2, r3 in itertools.product(mem, repeat=3):
            fixed_part = {}
            free_part = []
            for i, lab in enumerate(sig):
                trip = ((lab, r1[i]), (lab, r2[i]), (lab, r3[i]))
                f = fixed(*trip)
                if f is None:
                    free_part.append((i, trip))
                else:
                    fixed_part[i] = f[1]
            if not free_part:
                if tuple(fixed_part[i] for i in range(len(sig))) not in coset:
                    return None
                continue
            positions = [i for i, _ in free_part]
            proj = {
                tuple(m[i] for i in positions)
                for m in mem
                if all(m[i] == v for i, v in fixed_part.items())
            }
            if not proj:
                return None
            sub_sig = [sig[i] for i in positions]
            name = scratch.coset_relation(sub_sig, classify_subset(scratch.product(sub_sig), proj), "P")
            args = []
            for _, trip in free_part:
                var = var_names.setdefault(trip, f"m{len(var_names)}")
                args.append(var)
            constraints.add((name, tuple(args)))

    inst = Instance(list(var_names.values()), sorted(constraints))
    sol = solve(inst, scratch, node_cap=node_cap) if inst.constraints else {}
    if sol is None:
        return None
    table = {}
    for a, b, c in itertools.product(elems, repeat=3):
        f = fixed(a, b, c)
        if f is not None:
            table[(a, b, c)] = f
        elif (a, b, c) in var_names:
            table[(a, b, c)] = (a[0], sol[var_names[(a, b, c)]])
        else:
            table[(a, b, c)] = a
    return table


def is_majority_polymorphism(t: CosetTemplate, m, include_translates: bool = True) -> bool:
    """Check the majority identities and preservation of every relation by enumeration."""
    elems = sorted({k[0] for k in m})
    for a, b in itertools.product(elems, repeat=2):
        if m[(a, a, b)] != a or m[(a, b, a)] != a or m[(b, a, a)] != a:
            return False
    for sig, coset in _relations_to_preserve(t, include_translates):
        for r1, r2, r3 in itertools.product(coset.members, repeat=3):
            out = []
            for i, lab in enumerate(sig):
                lab2, v = m[((lab, r1[i]), (lab, r2[i]), (lab, r3[i]))]
                if lab2 != lab:
                    return False
                out.append(v)
            if tuple(out) not in coset:
                return False
    return True
