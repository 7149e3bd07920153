"""Primitive-positive formulas: materialization and gadget expansion.

A formula has ``free`` free variables (indices ``0 .. free-1``) followed by
``bound`` existentially quantified ones; atoms name template relations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .csp import Constraint, CosetTemplate, Instance, constraining_groups
from .errors import CapExceeded, EmptyRelation, InvalidSpec
from .groups import CosetSet, classify_subset
from .solver import DEFAULT_NODE_CAP, extends_to_solution


@dataclass(frozen=True)
class PPFormula:
    free: int
    bound: int
    atoms: tuple  # ((relation name, (var, ...)), ...)

    def __post_init__(self):
        total = self.free + self.bound
        used = set()
        for rel, args in self.atoms:
            for v in args:
                if not 0 <= v < total:
                    raise InvalidSpec(f"variable {v} out of range in atom {rel}{tuple(args)}")
                used.add(v)
        missing = [v for v in range(self.free) if v not in used]
        if missing:
            raise InvalidSpec(f"free variables {missing} occur in no atom")

    def to_json(self) -> dict:
        return {
            "free": self.free,
            "bound": self.bound,
            "atoms": [{"rel": r, "args": list(a)} for r, a in self.atoms],
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "PPFormula":
        return cls(d["free"], d["bound"], tuple((a["rel"], tuple(a["args"])) for a in d["atoms"]))


class PPBuilder:
    """Compose formulas by inlining copies of other formulas with fresh bound variables."""

    def __init__(self, free: int):
        self.free = free
        self.count = free
        self.atoms: list = []

    def var(self) -> int:
        self.count += 1
        return self.count - 1

    def atom(self, rel: str, args: Sequence[int]):
        self.atoms.append((rel, tuple(args)))

    def embed(self, phi: PPFormula, args: Sequence[int]):
        """Conjoin ``phi(args)``; its bound variables become fresh variables here."""
        if len(args) != phi.free:
            raise InvalidSpec(f"formula takes {phi.free} arguments, got {len(args)}")
        rename = list(args) + [self.var() for _ in range(phi.bound)]
        for rel, vs in phi.atoms:
            self.atom(rel, [rename[v] for v in vs])

    def build(self) -> PPFormula:
        return PPFormula(self.free, self.count - self.free, tuple(self.atoms))


def formula_from_instance(inst: Instance, free: Sequence[str]) -> PPFormula:
    """The formula with ``free`` as free variables and the other elements quantified."""
    names = list(free) + [e for e in inst.elements if e not in set(free)]
    pos = {e: i for i, e in enumerate(names)}
    atoms = tuple((c.rel, tuple(pos[a] for a in c.args)) for c in inst.constraints)
    return PPFormula(len(free), len(names) - len(free), atoms)


def gadget_instance(phi: PPFormula) -> Instance:
    names = [f"v{i}" for i in range(phi.free + phi.bound)]
    used = {v for _, args in phi.atoms for v in args}
    elements = [n for i, n in enumerate(names) if i in used]
    return Instance(elements, [(r, tuple(names[v] for v in a)) for r, a in phi.atoms])


def materialize_pp(t: CosetTemplate, phi: PPFormula, cap: int = 1 << 12,
                   node_cap: int = DEFAULT_NODE_CAP) -> CosetSet:
    """The relation defined by ``phi``, as a classified subset of the free variables' product.

    Each candidate tuple over the free variables' constraining groups is
    kept iff the gadget instance has a solution extending it.
    """
    inst = gadget_instance(phi)
    groups = constraining_groups(inst, t)
    free_names = [f"v{i}" for i in range(phi.free)]
    signature = [groups[v] for v in free_names]
    amb = t.product(signature)
    if amb.order > cap:
        raise CapExceeded(f"{amb.order} candidate tuples exceeds cap {cap}")
    members = [
        tup
        for tup in amb.elements()
        if extends_to_solution(inst, t, dict(zip(free_names, tup)), node_cap=node_cap)
    ]
    if not members:
        raise EmptyRelation("formula is unsatisfiable")
    return classify_subset(amb, members)


def formula_signature(t: CosetTemplate, phi: PPFormula) -> list[str]:
    groups = constraining_groups(gadget_instance(phi), t)
    return [groups[f"v{i}"] for i in range(phi.free)]


@dataclass
class PPInstance:
    """An instance that may also hold constraints given by pp-formulas."""

    base: Instance
    pp_constraints: list = field(default_factory=list)  # (PPFormula, args)


def expand_pp_gadget(inst, t: CosetTemplate | None = None, prefix: str = "_g") -> Instance:
    """Replace each pp-constraint by its atoms over fresh elements for bound variables."""
    if isinstance(inst, Instance):
        return inst
    elements = list(inst.base.elements)
    cons = list(inst.base.constraints)
    for k, (phi, args) in enumerate(inst.pp_constraints):
        if len(args) != phi.free:
            raise InvalidSpec(f"pp-constraint {k} has {len(args)} args for {phi.free} free variables")
        fresh = [f"{prefix}{k}_{b}" for b in range(phi.bound)]
        elements.extend(fresh)
        names = list(args) + fresh
        for rel, vs in phi.atoms:
            cons.append(Constraint(rel, tuple(names[v] for v in vs)))
    return Instance(elements, cons)


def translate_formula(t: CosetTemplate, phi: PPFormula, pi: Sequence[int]) -> PPFormula:
    """A formula defining ``R * pi`` when ``phi`` defines ``R``.

    Acts on the gadget by the pre-solution that is ``pi`` on the free
    variables and the identity elsewhere; every atom becomes a translate
    of its relation.
    """
    inst = gadget_instance(phi)
    groups = constraining_groups(inst, t)
    s = {e: t.carriers[g].identity for e, g in groups.items()}
    for i, v in enumerate(pi):
        s[f"v{i}"] = v
    atoms = []
    for rel, vs in phi.atoms:
        atoms.append((t.translate(rel, tuple(s[f"v{v}"] for v in vs)), vs))
    return PPFormula(phi.free, phi.bound, tuple(atoms))


def permute_atoms(phi: PPFormula, order: Sequence[int]) -> PPFormula:
    return PPFormula(phi.free, phi.bound, tuple(phi.atoms[i] for i in order))

