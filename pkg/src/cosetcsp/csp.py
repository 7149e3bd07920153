"""Coset templates, instances, assignments and the pre-solution action.

An assignment is a plain ``dict`` mapping element ids to carrier element
indices.  Its key order is irrelevant; anything that needs a tuple view
uses the instance's element order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import ContradictoryInstance, InvalidSpec
from .groups import (
    CosetKind,
    CosetSet,
    FiniteGroup,
    ProductGroup,
    classify_subset,
    translate,
)

Assignment = dict


@dataclass(frozen=True, eq=False)
class Relation:
    name: str
    signature: tuple
    coset: CosetSet

    @property
    def arity(self) -> int:
        return len(self.signature)

    def __contains__(self, t) -> bool:
        return t in self.coset

    @property
    def is_subgroup(self) -> bool:
        return self.coset.kind is CosetKind.SUBGROUP


def identity_relation_name(carrier: str) -> str:
    return f"1@{carrier}"


class CosetTemplate:
    """Carrier groups plus named coset relations over products of them.

    Translates of stored relations are materialized on request by
    :meth:`translate` and cached, so the template behaves as if it were
    closed under translation.
    """

    def __init__(self, carriers: Mapping[str, FiniteGroup], relations=(), *, add_identities=True):
        self.carriers = dict(carriers)
        self.relations: dict[str, Relation] = {}
        self.base_names: list[str] = []
        self._products: dict[tuple, ProductGroup] = {}
        self._by_members: dict[tuple, str] = {}
        for name, sig, tuples in relations:
            self.add_relation(name, sig, tuples)
        if add_identities:
            for label, g in self.carriers.items():
                name = identity_relation_name(label)
                if name not in self.relations:
                    self.add_relation(name, [label], [(g.identity,)])

    def product(self, signature: Sequence[str]) -> ProductGroup:
        sig = tuple(signature)
        p = self._products.get(sig)
        if p is None:
            for c in sig:
                if c not in self.carriers:
                    raise InvalidSpec(f"unknown carrier {c!r}")
            p = ProductGroup([self.carriers[c] for c in sig])
            self._products[sig] = p
        return p

    def add_relation(self, name: str, signature: Sequence[str], tuples: Iterable, *, base=True) -> Relation:
        """Register a relation.  Non-coset relations are stored but flagged by validation."""
        sig = tuple(signature)
        amb = self.product(sig)
        coset = classify_subset(amb, (tuple(int(v) for v in t) for t in tuples))
        rel = Relation(name, sig, coset)
        self.relations[name] = rel
        if base:
            self.base_names.append(name)
        self._by_members.setdefault((sig, coset.members), name)
        return rel

    def relation(self, name: str) -> Relation:
        try:
            return self.relations[name]
        except KeyError:
            raise InvalidSpec(f"unknown relation {name!r}") from None

    def identity_relation(self, carrier: str) -> str:
        return identity_relation_name(carrier)

    def find(self, signature: Sequence[str], members: tuple) -> str | None:
        return self._by_members.get((tuple(signature), tuple(members)))

    def translate(self, name: str, pi: Sequence[int]) -> str:
        """Name of the relation ``R * pi``, materializing it if needed."""
        rel = self.relation(name)
        pi = tuple(pi)
        if pi == rel.coset.ambient.identity:
            return name
        moved = translate(rel.coset, pi)
        hit = self.find(rel.signature, moved.members)
        if hit is not None:
            return hit
        root = name.split("*", 1)[0]
        new = f"{root}*[{','.join(map(str, moved.representative))}]"
        self.relations[new] = Relation(new, rel.signature, moved)
        self._by_members[(rel.signature, moved.members)] = new
        return new

    def coset_relation(self, signature: Sequence[str], coset: CosetSet, hint: str = "C") -> str:
        """Name of a relation with exactly these members, registering it if new."""
        hit = self.find(signature, coset.members)
        if hit is not None:
            return hit
        new = f"{hint}*[{','.join(map(str, coset.representative))}]"
        while new in self.relations:
            new += "'"
        self.relations[new] = Relation(new, tuple(signature), coset)
        self._by_members[(tuple(signature), coset.members)] = new
        return new

    def copy(self) -> "CosetTemplate":
        t = CosetTemplate(self.carriers, add_identities=False)
        t.relations = dict(self.relations)
        t.base_names = list(self.base_names)
        t._products = dict(self._products)
        t._by_members = dict(self._by_members)
        return t


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.valid


def validate_template(t: CosetTemplate) -> ValidationReport:
    report = ValidationReport()
    for label, g in t.carriers.items():
        name = identity_relation_name(label)
        rel = t.relations.get(name)
        if rel is None or rel.signature != (label,) or rel.coset.members != ((g.identity,),):
            report.violations.append(f"missing identity singleton {name}")
    for name in t.base_names:
        rel = t.relations[name]
        for c in rel.signature:
            if c not in t.carriers:
                report.violations.append(f"{name}: unknown carrier {c}")
        if not rel.coset.is_coset:
            report.violations.append(f"{name}: NotCoset")
    return report


@dataclass(frozen=True)
class Constraint:
    rel: str
    args: tuple

    def __iter__(self):
        return iter((self.rel, self.args))


class Instance:
    """Ordered elements plus constraints naming template relations."""

    def __init__(self, elements: Sequence[str], constraints: Iterable = ()):
        self.elements = tuple(elements)
        if len(set(self.elements)) != len(self.elements):
            raise InvalidSpec("duplicate element ids")
        self.index = {e: i for i, e in enumerate(self.elements)}
        cons = []
        for c in constraints:
            rel, args = c if not isinstance(c, dict) else (c["rel"], c["args"])
            args = tuple(args)
            for a in args:
                if a not in self.index:
                    raise InvalidSpec(f"constraint {rel}{args} uses unknown element {a!r}")
            cons.append(Constraint(rel, args))
        self.constraints = tuple(cons)

    def __len__(self):
        return len(self.elements)

    def __eq__(self, other):
        return (
            isinstance(other, Instance)
            and self.elements == other.elements
            and self.constraints == other.constraints
        )

    def __repr__(self):
        return f"Instance({len(self.elements)} elements, {len(self.constraints)} constraints)"

    def with_constraints(self, extra: Iterable) -> "Instance":
        return Instance(self.elements, list(self.constraints) + list(extra))

    def tuple_view(self, h: Mapping) -> tuple:
        return tuple(h[e] for e in self.elements if e in h)


def constraining_groups(inst: Instance, t: CosetTemplate) -> dict[str, str]:
    """Map each constrained element to its carrier label.

    Raises :class:`ContradictoryInstance` if an element sits in slots of
    two different carriers.
    """
    groups: dict[str, str] = {}
    for c in inst.constraints:
        rel = t.relation(c.rel)
        if rel.arity != len(c.args):
            raise InvalidSpec(f"{c.rel} has arity {rel.arity}, got {len(c.args)} arguments")
        for a, label in zip(c.args, rel.signature):
            prev = groups.setdefault(a, label)
            if prev != label:
                raise ContradictoryInstance(a, {prev, label})
    return groups


def normalize_instance(inst: Instance, t: CosetTemplate) -> Instance:
    """Drop elements that no constraint mentions; reject contradictory ones."""
    groups = constraining_groups(inst, t)
    if len(groups) == len(inst.elements):
        return inst
    return Instance([e for e in inst.elements if e in groups], inst.constraints)


def element_groups(inst: Instance, t: CosetTemplate) -> list[FiniteGroup]:
    """Constraining group of each element, in element order."""
    groups = constraining_groups(inst, t)
    missing = [e for e in inst.elements if e not in groups]
    if missing:
        raise InvalidSpec(f"unconstrained elements {missing}; normalize the instance first")
    return [t.carriers[groups[e]] for e in inst.elements]


def is_partial_solution(inst: Instance, t: CosetTemplate, h: Mapping) -> bool:
    for c in inst.constraints:
        if all(a in h for a in c.args):
            if tuple(h[a] for a in c.args) not in t.relation(c.rel):
                return False
    return True


def is_solution(inst: Instance, t: CosetTemplate, h: Mapping) -> bool:
    return all(e in h for e in inst.elements) and is_partial_solution(inst, t, h)


def act_assignment(h: Mapping, s: Mapping, groups: Mapping[str, FiniteGroup]) -> Assignment:
    """Pointwise product ``(h*s)(a) = h(a) s(a)`` on the domain of ``h``."""
    return {a: groups[a].table[v][s[a]] for a, v in h.items()}


def invert_assignment(s: Mapping, groups: Mapping[str, FiniteGroup]) -> Assignment:
    return {a: groups[a].inverse[v] for a, v in s.items()}


def group_map(inst: Instance, t: CosetTemplate) -> dict[str, FiniteGroup]:
    return dict(zip(inst.elements, element_groups(inst, t)))


def identity_assignment(inst: Instance, t: CosetTemplate) -> Assignment:
    return {e: g.identity for e, g in group_map(inst, t).items()}


def act_instance(inst: Instance, s: Mapping, t: CosetTemplate) -> Instance:
    """Translate every constraint relation by the tuple of ``s``-values on its scope."""
    cons = []
    for c in inst.constraints:
        cons.append(Constraint(t.translate(c.rel, tuple(s[a] for a in c.args)), c.args))
    return Instance(inst.elements, cons)


def is_subgroup_instance(inst: Instance, t: CosetTemplate) -> bool:
    return all(t.relation(c.rel).is_subgroup for c in inst.constraints)
