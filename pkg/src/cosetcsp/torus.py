"""Torus instances built from an almost-direct product R <= S1 x S2 x S3.

The n-torus has elements ``a{i}_{j}``, ``b{i}_{j}``, ``c{i}_{j}`` for
``i, j`` in ``0..n-1`` (indices taken modulo n) and two constraints per
cell: the R-slot ``(a_ij, b_ij, c_ij)`` and the R'-slot
``(a_i(j+1), b_(i+1)j, c_ij)``.  Each slot holds a coset of R.  With every
slot equal to R the instance is solvable; changing one slot to another
coset makes it unsolvable, yet local consistency cannot tell the two
apart once n is large enough.
"""

from __future__ import annotations

import enum
import itertools
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import networkx as nx

from .anomaly import AdpExtraction
from .consistency import run_kl_consistency
from .csp import Constraint, CosetTemplate, Instance
from .errors import BudgetExceeded, ConstructionFailure, InvalidSpec, PreconditionViolated
from .groups import ADPKind, CosetSet, classify_subset, quotient_adp, translate
from .pp import PPInstance, expand_pp_gadget, translate_formula
from .solver import DEFAULT_NODE_CAP, solve

KINDS = ("R", "Rp")


def slots(n: int) -> list[tuple]:
    """All constraint slots in (kind, i, j) order."""
    return [(kind, i, j) for kind in KINDS for i in range(n) for j in range(n)]


def element_names(n: int) -> list[str]:
    return [f"{blk}{i}_{j}" for blk in "abc" for i in range(n) for j in range(n)]


def position(n: int, slot: Sequence) -> tuple[str, str, str]:
    """The element triple a slot constrains."""
    kind, i, j = slot
    i, j = i % n, j % n
    if kind == "R":
        return f"a{i}_{j}", f"b{i}_{j}", f"c{i}_{j}"
    if kind == "Rp":
        return f"a{i}_{(j + 1) % n}", f"b{(i + 1) % n}_{j}", f"c{i}_{j}"
    raise InvalidSpec(f"unknown slot kind {kind!r}")


@dataclass
class TorusSpec:
    """An n-torus over ``adp``; ``assignment`` maps slots to coset representatives.

    Slots not listed hold R itself.  Representatives are carrier triples
    and are stored in canonical form (least member of the coset), so two
    specs are equal exactly when they put the same cosets in every slot.
    """

    n: int
    adp: AdpExtraction
    assignment: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 2:
            raise InvalidSpec("torus needs n >= 2")
        clean = {}
        for slot, pi in self.assignment.items():
            kind, i, j = slot
            if kind not in KINDS:
                raise InvalidSpec(f"unknown slot kind {kind!r}")
            slot = (kind, i % self.n, j % self.n)
            rep = self.coset(pi).representative
            if rep not in self.adp.R:
                clean[slot] = rep
        self.assignment = dict(sorted(clean.items()))

    @property
    def R(self) -> CosetSet:
        return self.adp.R

    def coset(self, pi) -> CosetSet:
        pi = tuple(pi)
        for x, s in zip(pi, self.adp.S):
            if x not in s:
                raise InvalidSpec(f"twist {pi!r} leaves S1 x S2 x S3")
        return translate(self.R, pi)

    def slot_coset(self, slot) -> CosetSet:
        rep = self.assignment.get(tuple(slot))
        return self.R if rep is None else translate(self.R, rep)

    def __eq__(self, other):
        if not isinstance(other, TorusSpec):
            return NotImplemented
        return self.n == other.n and self.R == other.R and self.assignment == other.assignment

    def to_json(self, adp_ref=None) -> dict:
        return {
            "n": self.n,
            "adp": adp_ref,
            "twists": [{"slot": list(s), "pi": list(p)} for s, p in self.assignment.items()],
        }


def torus_template(spec: TorusSpec, t: CosetTemplate | None = None) -> CosetTemplate:
    """A copy of the template with every coset the spec uses registered."""
    t = (t or spec.adp.template).copy()
    build_torus(spec, t)
    return t


def build_torus(spec: TorusSpec, t: CosetTemplate) -> Instance:
    """The torus instance; registers R and its used translates in ``t``."""
    for c in spec.adp.signature:
        if c not in t.carriers:
            raise InvalidSpec(f"template lacks carrier {c!r}")
    sig = spec.adp.signature
    base = t.coset_relation(sig, spec.R, hint="R")
    cons = []
    for slot in slots(spec.n):
        rep = spec.assignment.get(slot)
        rel = base if rep is None else t.translate(base, rep)
        cons.append(Constraint(rel, position(spec.n, slot)))
    return Instance(element_names(spec.n), cons)


def build_torus_gadget(spec: TorusSpec, t: CosetTemplate | None = None) -> tuple[Instance, CosetTemplate]:
    """The same torus with each slot written out as the pp-definition of its coset.

    Needs the ``"R"`` pp-witness of the almost-direct product.  Only
    translates of the template's own relations appear.
    """
    phi = spec.adp.pp_witnesses.get("R")
    if phi is None:
        raise InvalidSpec("almost-direct product carries no pp-definition of R")
    t = (t or spec.adp.template).copy()
    pp = []
    for slot in slots(spec.n):
        rep = spec.assignment.get(slot)
        f = phi if rep is None else translate_formula(t, phi, rep)
        pp.append((f, position(spec.n, slot)))
    inst = expand_pp_gadget(PPInstance(Instance(element_names(spec.n)), pp), t)
    return inst, t


def neighbors(n: int, slot: Sequence) -> list[tuple]:
    """The three slots sharing an element with ``slot``."""
    kind, i, j = slot
    i, j = i % n, j % n
    if kind == "R":
        return [("Rp", i, (j - 1) % n), ("Rp", (i - 1) % n, j), ("Rp", i, j)]
    return [("R", i, (j + 1) % n), ("R", (i + 1) % n, j), ("R", i, j)]


class NeighborhoodGraph:
    """Slots as nodes, edges between slots sharing an element.

    R-slots are the negative class and R'-slots the positive one.
    """

    def __init__(self, n: int):
        self.n = n
        self.graph = nx.Graph()
        for s in slots(n):
            self.graph.add_node(s, parity="negative" if s[0] == "R" else "positive")
        for s in slots(n):
            for q in neighbors(n, s):
                self.graph.add_edge(s, q)

    def parity(self, slot) -> str:
        return self.graph.nodes[tuple(slot)]["parity"]

    def adjacency(self, slot) -> list[tuple]:
        return sorted(self.graph.adj[tuple(slot)])

    def largest_component(self, removed=()) -> int:
        g = self.graph.subgraph(set(self.graph) - {tuple(s) for s in removed})
        return max((len(c) for c in nx.connected_components(g)), default=0)


def check_small_triangulation(n: int, removed, graph: NeighborhoodGraph | None = None) -> int:
    """Size of the largest component left after deleting the ``removed`` slots."""
    graph = graph or NeighborhoodGraph(n)
    return graph.largest_component(removed)


def twist(spec: TorusSpec, slot: Sequence, pi: Sequence[int]) -> TorusSpec:
    """Multiply the coset at ``slot`` on the right by ``pi``."""
    kind, i, j = slot
    slot = (kind, i % spec.n, j % spec.n)
    cur = spec.slot_coset(slot)
    new = dict(spec.assignment)
    spec.coset(pi)  # validates pi
    new[slot] = translate(cur, tuple(pi)).representative
    return TorusSpec(spec.n, spec.adp, new)


class Certificate(enum.Enum):
    UNSOLVABLE = "Unsolvable"
    NOT_APPLICABLE = "NotApplicable"


def single_twist_unsolvable(spec: TorusSpec) -> Certificate:
    """Unsolvable when exactly one slot holds a coset other than R."""
    if spec.adp.classification is ADPKind.NOT_ADP:
        return Certificate.NOT_APPLICABLE
    return Certificate.UNSOLVABLE if len(spec.assignment) == 1 else Certificate.NOT_APPLICABLE


def _classes(omitted: tuple) -> tuple[str, str]:
    """(negative kind, positive kind), swapped so that ``omitted`` is negative."""
    return ("R", "Rp") if omitted[0] == "R" else ("Rp", "R")


def telescoping_product(spec: TorusSpec, h: Mapping, omitted: Sequence, order=None) -> tuple:
    """Product of the negative triples inverted and the positive triples.

    ``h`` must satisfy every slot except ``omitted``, and every slot other
    than ``omitted`` must hold R.  The omitted slot is treated as negative
    (classes are swapped when it is an R'-slot).  The value is returned in
    carrier coordinates and always lies in R.  ``order`` optionally
    permutes the factors; the default is (kind, i, j) order.
    """
    omitted = (omitted[0], omitted[1] % spec.n, omitted[2] % spec.n)
    if any(s != omitted for s in spec.assignment):
        raise PreconditionViolated("telescoping needs R in every slot except the omitted one")
    adp = spec.adp
    neg, _pos = _classes(omitted)
    amb = adp.local_ambient
    factors = []
    for slot in slots(spec.n):
        trip = tuple(h[e] for e in position(spec.n, slot))
        if slot == omitted:
            continue
        if trip not in adp.R:
            raise PreconditionViolated(f"assignment violates slot {slot}")
        loc = adp.to_local(trip)
        factors.append(amb.inv(loc) if slot[0] == neg else loc)
    if order is not None:
        factors = [factors[i] for i in order]
    acc = amb.identity
    for f in factors:
        acc = amb.mul(acc, f)
    if acc not in adp.R_local:
        raise ConstructionFailure("telescoping product left R")
    return adp.to_carrier(acc)


def telescoping_check(spec: TorusSpec, h: Mapping, omitted: Sequence, order=None) -> dict:
    """Evaluate the product and compare quotient images with the omitted triple."""
    adp = spec.adp
    pi = telescoping_product(spec, h, omitted, order)
    q = quotient_adp(adp.R_local)
    trip = tuple(h[e] for e in position(spec.n, omitted))
    img_pi = q.project(adp.to_local(pi))
    img_trip = q.project(adp.to_local(trip))
    return {
        "product": pi,
        "omitted": trip,
        "images_equal": img_pi == img_trip,
        "omitted_in_R": trip in adp.R,
    }


def lemma_1coord_witnesses(adp: AdpExtraction, coset: CosetSet) -> tuple:
    """Members of a coset of R of the forms (t1,1,1), (1,t2,1), (1,1,t3)."""
    amb = coset.ambient
    ident = amb.identity
    sub = classify_subset(amb, (amb.mul(x, amb.inv(coset.representative)) for x in coset.members))
    if sub != adp.R:
        raise PreconditionViolated("not a coset of R")
    out = []
    for axis in range(3):
        hits = [m for m in coset.members
                if all(m[j] == ident[j] for j in range(3) if j != axis)]
        if not hits:
            raise ConstructionFailure(f"coset has no member moving only coordinate {axis}")
        out.append(hits[0])
    return tuple(out)


def default_twist(adp: AdpExtraction) -> tuple:
    """Least ``(x, 1, 1)`` outside R; exists since R is proper."""
    ident = adp.R.ambient.identity
    for x in adp.S[0].members:
        pi = (x,) + ident[1:]
        if pi not in adp.R:
            return pi
    raise ConstructionFailure("every (x, 1, 1) lies in R")


def _verdict(sol) -> str:
    return "solvable" if sol is not None else "unsolvable"


def _run_variant(spec: TorusSpec, variant: str, k: int, l: int, node_cap: int,
                 kernel: str | None) -> dict:
    start = time.perf_counter()
    t = spec.adp.template.copy()
    inst = build_torus(spec, t)
    try:
        solver = _verdict(solve(inst, t, node_cap=node_cap))
    except BudgetExceeded:
        solver = "budget"
    cons = run_kl_consistency(inst, t, k, l, trace=False, kernel=kernel)
    if cons.accept and not cons.all_nonempty:
        raise ConstructionFailure("accepting fixpoint with an empty family")
    return {
        "n": spec.n,
        "variant": variant,
        "solver": solver,
        "consistency": "accept" if cons.accept else "reject",
        "certificate": single_twist_unsolvable(spec).value,
        "seconds": round(time.perf_counter() - start, 3),
    }


def _experiment_job(args):
    return _run_variant(*args)


def fooling_experiment(adp: AdpExtraction, k: int = 2, l: int = 3, n_range=range(2, 7),
                       node_cap: int = DEFAULT_NODE_CAP, jobs: int = 1,
                       kernel: str | None = None) -> dict:
    """Run solver, consistency and certificate on the all-R and one-twist tori.

    Returns ``{"records": [...], "minimal_fooling_n": n or None, "twist": ...}``
    with records in ascending n, all-R before twisted.  ``seconds`` is the
    only field that varies between runs.
    """
    if adp.classification is ADPKind.NOT_ADP:
        raise PreconditionViolated("fooling experiment needs an almost-direct product")
    pi = default_twist(adp)
    tasks = []
    for n in n_range:
        base = TorusSpec(n, adp)
        tasks.append((base, "all-R", k, l, node_cap, kernel))
        tasks.append((twist(base, ("R", 0, 0), pi), "twisted", k, l, node_cap, kernel))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            records = list(ex.map(_experiment_job, tasks))
    else:
        records = [_experiment_job(a) for a in tasks]
    fooling = None
    for r in records:
        if (r["variant"] == "twisted" and r["consistency"] == "accept"
                and r["solver"] == "unsolvable" and r["certificate"] == "Unsolvable"):
            fooling = r["n"]
            break
    return {"records": records, "minimal_fooling_n": fooling, "twist": list(pi), "k": k, "l": l}


def random_removals(n: int, j: int, count: int, rng: random.Random) -> list[tuple]:
    all_slots = slots(n)
    return [tuple(rng.sample(all_slots, j)) for _ in range(count)]


def exhaustive_removals(n: int, j_max: int):
    all_slots = slots(n)
    for j in range(j_max + 1):
        yield from itertools.combinations(all_slots, j)
