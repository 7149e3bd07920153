"""Anomalies, the reduction to a (2,3)-anomaly, and almost-direct-product extraction.

A (k, j)-anomaly is a partial solution on j elements that does not extend
to a solution although each of its restrictions to k elements does.
Starting from any (2, j)-anomaly, :func:`helly_pipeline` moves to a
subgroup instance, shrinks the anomaly to a minimal one, peels it down to
a (2, 3)-anomaly, and reads off a pp-definable almost-direct product.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .csp import (
    Assignment,
    Constraint,
    CosetTemplate,
    Instance,
    act_assignment,
    act_instance,
    constraining_groups,
    element_groups,
    group_map,
    identity_relation_name,
    invert_assignment,
    is_partial_solution,
    is_subgroup_instance,
)
from .errors import (
    BudgetExceeded,
    ConstructionFailure,
    EmptyH,
    NotAnAnomaly,
    PreconditionViolated,
    Unsolvable,
)
from .groups import (
    ADPKind,
    CosetKind,
    CosetSet,
    FiniteGroup,
    ProductGroup,
    classify_almost_direct,
    classify_subset,
    restrict_group,
)
from .polymorphism import find_majority_polymorphism
from .pp import PPBuilder, PPFormula, formula_from_instance
from .solver import DEFAULT_NODE_CAP, extends_to_solution, solve


@dataclass
class AnomalyWitness:
    instance: Instance
    h: Assignment
    k: int

    @property
    def j(self) -> int:
        return len(self.h)

    def domain(self) -> list[str]:
        return [e for e in self.instance.elements if e in self.h]


def _restrict(h: Mapping, keys) -> Assignment:
    return {a: h[a] for a in keys}


def is_anomaly(inst: Instance, t: CosetTemplate, h: Mapping, k: int,
               node_cap: int = DEFAULT_NODE_CAP) -> bool:
    if not 0 <= k < len(h):
        return False
    if not is_partial_solution(inst, t, h):
        return False
    if extends_to_solution(inst, t, h, node_cap):
        return False
    dom = [e for e in inst.elements if e in h]
    return all(
        extends_to_solution(inst, t, _restrict(h, sub), node_cap)
        for sub in itertools.combinations(dom, k)
    )


def find_kj_anomaly(inst: Instance, t: CosetTemplate, k: int, j: int, budget: int = 100_000,
                    node_cap: int = DEFAULT_NODE_CAP) -> AnomalyWitness | None:
    """First (k, j)-anomaly by domain order, then assignment order."""
    groups = element_groups(inst, t)
    spent = 0
    for dom in itertools.combinations(range(len(inst.elements)), j):
        names = [inst.elements[i] for i in dom]
        for vals in itertools.product(*(range(groups[i].order) for i in dom)):
            spent += 1
            if spent > budget:
                raise BudgetExceeded(f"anomaly search exceeded {budget} candidates")
            h = dict(zip(names, vals))
            if is_anomaly(inst, t, h, k, node_cap):
                return AnomalyWitness(inst, h, k)
    return None


def shrink_anomaly(inst: Instance, t: CosetTemplate, h: Mapping,
                   node_cap: int = DEFAULT_NODE_CAP) -> AnomalyWitness:
    """Restrict a (2, j)-anomaly to an inclusion-minimal non-extending domain.

    The result is a (k-1, k)-anomaly with k the size of that domain.
    """
    if not is_anomaly(inst, t, h, 2, node_cap):
        raise NotAnAnomaly("input is not a (2, j)-anomaly")
    dom = [e for e in inst.elements if e in h]
    for size in range(3, len(dom) + 1):
        for sub in itertools.combinations(dom, size):
            g = _restrict(h, sub)
            if not extends_to_solution(inst, t, g, node_cap):
                return AnomalyWitness(inst, g, size - 1)
    raise ConstructionFailure("anomaly has no non-extending restriction")


def normalize_subgroup_instance(inst: Instance, t: CosetTemplate,
                                node_cap: int = DEFAULT_NODE_CAP) -> tuple[Instance, Assignment]:
    """Shift a solvable instance by the inverse of its first solution.

    Returns the shifted instance and the pre-solution ``s`` used, so that
    any partial solution ``h`` of the input maps to ``h * s``.
    """
    h = solve(inst, t, node_cap=node_cap)
    if h is None:
        raise Unsolvable("instance has no solution")
    groups = group_map(inst, t)
    s = invert_assignment(h, groups)
    out = act_instance(inst, s, t)
    if not is_subgroup_instance(out, t):
        raise ConstructionFailure("shifted instance is not a subgroup instance")
    return out, s


def reduce_anomaly_step(inst: Instance, t: CosetTemplate, w: AnomalyWitness,
                        node_cap: int = DEFAULT_NODE_CAP) -> tuple[Instance, AnomalyWitness]:
    """Turn a (k, k+1)-anomaly of a subgroup instance into a (k-1, k)-anomaly.

    Pins the first domain element ``a`` to the identity with an extra unary
    constraint, shifts ``h`` by the inverse of a solution agreeing with it
    at ``a``, and forgets ``a``.
    """
    k = w.j - 1
    if k < 2 or not is_subgroup_instance(inst, t):
        raise PreconditionViolated("needs a (k, k+1)-anomaly with k >= 2 in a subgroup instance")
    if not is_anomaly(inst, t, w.h, k, node_cap):
        raise PreconditionViolated(f"input is not a ({k}, {k + 1})-anomaly")
    dom = w.domain()
    a = dom[0]
    groups = group_map(inst, t)
    label = constraining_groups(inst, t)[a]
    pinned = inst.with_constraints([Constraint(identity_relation_name(label), (a,))])
    hbar = solve(inst, t, fixed={a: w.h[a]}, node_cap=node_cap)
    if hbar is None:
        raise ConstructionFailure("single-element restriction of an anomaly does not extend")
    shifted = act_assignment(w.h, invert_assignment(hbar, groups), groups)
    out = AnomalyWitness(pinned, _restrict(shifted, dom[1:]), k - 1)
    if not is_anomaly(pinned, t, out.h, k - 1, node_cap):
        raise ConstructionFailure(f"reduction did not produce a ({k - 1}, {k})-anomaly")
    return pinned, out


def extendable_group(inst: Instance, t: CosetTemplate, elements: Sequence[str],
                     node_cap: int = DEFAULT_NODE_CAP) -> CosetSet:
    """Assignments on ``elements`` that extend to a solution, over their groups' product."""
    groups = group_map(inst, t)
    labels = constraining_groups(inst, t)
    elements = list(elements)
    amb = t.product([labels[e] for e in elements]) if elements else None
    if not elements:
        if solve(inst, t, node_cap=node_cap) is None:
            raise EmptyH("instance is unsolvable")
        return CosetSet(ProductGroup([_trivial()]), ((0,),), CosetKind.SUBGROUP)
    members = [
        vals
        for vals in itertools.product(*(range(groups[e].order) for e in elements))
        if extends_to_solution(inst, t, dict(zip(elements, vals)), node_cap)
    ]
    if not members:
        raise EmptyH("instance is unsolvable")
    return classify_subset(amb, members)


def _trivial() -> FiniteGroup:
    return FiniteGroup([[0]], 0, [0], "1")


@dataclass
class AdpExtraction:
    """An almost-direct product R <= S1 x S2 x S3 together with where it came from.

    ``R`` and ``H`` live in the product of the carrier groups; ``R_local``
    is ``R`` re-indexed over the subgroups ``S_i`` turned into groups, and
    ``embeddings[i]`` maps local indices of ``S_i`` back to carrier
    elements.
    """

    template: CosetTemplate
    signature: tuple
    S: tuple
    R: CosetSet
    H: CosetSet | None = None
    pp_witnesses: dict = field(default_factory=dict)
    classification: ADPKind = ADPKind.NOT_ADP
    reductions: int = 0
    source: str = ""
    S_groups: tuple = field(init=False)
    embeddings: tuple = field(init=False)
    R_local: CosetSet = field(init=False)

    def __post_init__(self):
        groups, embs = [], []
        for i, s in enumerate(self.S):
            g, emb = restrict_group(s, f"S{i + 1}")
            groups.append(g)
            embs.append(emb)
        self.S_groups = tuple(groups)
        self.embeddings = tuple(embs)
        self._local = tuple({x: i for i, x in enumerate(e)} for e in embs)
        amb = ProductGroup(groups)
        self.R_local = classify_subset(amb, (self.to_local(m) for m in self.R.members))
        self.classification = classify_almost_direct(self.R_local)

    def to_local(self, x: Sequence[int]) -> tuple:
        return tuple(loc[v] for loc, v in zip(self._local, x))

    def to_carrier(self, x: Sequence[int]) -> tuple:
        return tuple(emb[v] for emb, v in zip(self.embeddings, x))

    @property
    def local_ambient(self) -> ProductGroup:
        return self.R_local.ambient

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "signature": list(self.signature),
            "classification": self.classification.value,
            "reductions": self.reductions,
            "S": [list(s.members) for s in self.S],
            "tuples": [list(m) for m in self.R.members],
            "H": [list(m) for m in self.H.members] if self.H is not None else None,
            "pp_witnesses": {k: v.to_json() for k, v in self.pp_witnesses.items()},
        }


def adp_from_subgroup(t: CosetTemplate, signature: Sequence[str], tuples, S=None,
                      source: str = "") -> AdpExtraction:
    """Wrap a hand-given almost-direct product (default ``S_i`` = whole carrier)."""
    amb = t.product(signature)
    R = classify_subset(amb, (tuple(x) for x in tuples))
    if S is None:
        S = [classify_subset(t.carriers[c], range(t.carriers[c].order)) for c in signature]
    else:
        S = [classify_subset(t.carriers[c], s) for c, s in zip(signature, S)]
    return AdpExtraction(t, tuple(signature), tuple(S), R, source=source)


def _two_sided(H: CosetSet, axis: int, ident: tuple) -> list[int]:
    """Elements x of factor ``axis`` with witnesses in H pinning each other coordinate to 1."""
    others = [j for j in range(3) if j != axis]
    out = []
    for x in H.ambient.factors[axis].elements():
        ok = True
        for pinned in others:
            if not any(m[axis] == x and m[pinned] == ident[pinned] for m in H.members):
                ok = False
                break
        if ok:
            out.append(x)
    return out


def _pp_witnesses(inst: Instance, t: CosetTemplate, dom: Sequence[str]) -> dict[str, PPFormula]:
    labels = constraining_groups(inst, t)
    sig = [labels[a] for a in dom]
    H = formula_from_instance(inst, dom)
    out = {"H": H}
    for axis in range(3):
        b = PPBuilder(1)
        for pinned in (j for j in range(3) if j != axis):
            args = [None, None, None]
            args[axis] = 0
            for j in range(3):
                if j != axis:
                    args[j] = b.var()
            b.atom(identity_relation_name(sig[pinned]), [args[pinned]])
            b.embed(H, args)
        out[f"S{axis + 1}"] = b.build()
    b = PPBuilder(3)
    b.embed(H, [0, 1, 2])
    for axis in range(3):
        b.embed(out[f"S{axis + 1}"], [axis])
    out["R"] = b.build()
    return out


def build_adp_from_anomaly(inst: Instance, t: CosetTemplate, h: Mapping,
                           node_cap: int = DEFAULT_NODE_CAP) -> AdpExtraction:
    """Extract the almost-direct product determined by a (2,3)-anomaly of a subgroup instance."""
    if len(h) != 3 or not is_subgroup_instance(inst, t):
        raise PreconditionViolated("needs a (2,3)-anomaly in a subgroup instance")
    dom = [e for e in inst.elements if e in h]
    labels = constraining_groups(inst, t)
    sig = tuple(labels[a] for a in dom)
    H = extendable_group(inst, t, dom, node_cap)
    if H.kind is not CosetKind.SUBGROUP:
        raise ConstructionFailure("extendable set of a subgroup instance is not a subgroup")
    ident = H.ambient.identity
    pis = tuple(h[a] for a in dom)
    if pis in H:
        raise PreconditionViolated("the anomaly extends to a solution")
    S = []
    for axis in range(3):
        g = t.carriers[sig[axis]]
        S.append(classify_subset(g, _two_sided(H, axis, ident)))
        if S[-1].kind is not CosetKind.SUBGROUP:
            raise ConstructionFailure(f"S{axis + 1} is not a subgroup")
    R_members = [m for m in H.members if all(m[i] in S[i] for i in range(3))]
    R = classify_subset(H.ambient, R_members)
    adp = AdpExtraction(t, sig, tuple(S), R, H=H, pp_witnesses=_pp_witnesses(inst, t, dom))
    if adp.classification is ADPKind.NOT_ADP:
        raise ConstructionFailure("restriction of H is not an almost-direct product")
    return adp


@dataclass
class PipelineTrace:
    steps: list = field(default_factory=list)

    def log(self, what: str, w: AnomalyWitness):
        self.steps.append({"step": what, "k": w.k, "j": w.j, "h": dict(w.h),
                           "elements": len(w.instance.elements),
                           "constraints": len(w.instance.constraints)})


def search_small_instances(t: CosetTemplate, max_elements: int = 4, max_constraints: int = 2,
                           budget: int = 20_000, node_cap: int = DEFAULT_NODE_CAP
                           ) -> AnomalyWitness | None:
    """Blind search over tiny instances built from base relations for a (2, j)-anomaly."""
    names = [f"e{i}" for i in range(max_elements)]
    atoms = []
    for rel in t.base_names:
        ar = t.relation(rel).arity
        for args in itertools.product(names, repeat=ar):
            atoms.append((rel, args))
    spent = 0
    for m in range(1, max_constraints + 1):
        for cons in itertools.combinations(atoms, m):
            spent += 1
            if spent > budget:
                raise BudgetExceeded(f"instance search exceeded {budget} candidates")
            used = sorted({a for _, args in cons for a in args}, key=names.index)
            if len(used) < 3:
                continue
            inst = Instance(used, cons)
            try:
                constraining_groups(inst, t)
            except Exception:
                continue
            if solve(inst, t, node_cap=node_cap) is None:
                continue
            for j in range(3, len(used) + 1):
                w = find_kj_anomaly(inst, t, 2, j, budget=budget, node_cap=node_cap)
                if w is not None:
                    return w
    return None


def helly_pipeline(t: CosetTemplate, instance: Instance | None = None, anomaly: Mapping | None = None,
                   budget: int = 20_000, node_cap: int = DEFAULT_NODE_CAP,
                   trace: PipelineTrace | None = None) -> AdpExtraction | None:
    """From a (2, j)-anomaly to an almost-direct product; None if the template is 2-Helly.

    With no witness instance the template is first tested for a majority
    polymorphism (a complete 2-Helly test); failing that, tiny instances
    are searched within ``budget``.
    """
    trace = trace if trace is not None else PipelineTrace()
    if instance is None:
        if find_majority_polymorphism(t, node_cap=node_cap) is not None:
            return None
        w = search_small_instances(t, budget=budget, node_cap=node_cap)
        if w is None:
            return None
    elif anomaly is None:
        w = None
        for j in range(3, len(instance.elements) + 1):
            w = find_kj_anomaly(instance, t, 2, j, budget=budget, node_cap=node_cap)
            if w is not None:
                break
        if w is None:
            return None
    else:
        w = AnomalyWitness(instance, dict(anomaly), 2)
        if not is_anomaly(instance, t, w.h, 2, node_cap):
            raise NotAnAnomaly("supplied assignment is not a (2, j)-anomaly")
    trace.log("input", w)

    inst, s = normalize_subgroup_instance(w.instance, t, node_cap)
    groups = group_map(w.instance, t)
    w = AnomalyWitness(inst, act_assignment(w.h, s, groups), 2)
    if not is_anomaly(inst, t, w.h, 2, node_cap):
        raise ConstructionFailure("anomaly did not survive the shift to a subgroup instance")
    trace.log("normalize", w)

    w = shrink_anomaly(inst, t, w.h, node_cap)
    trace.log("shrink", w)

    reductions = 0
    while w.j > 3:
        inst, w = reduce_anomaly_step(inst, t, w, node_cap)
        reductions += 1
        trace.log("reduce", w)

    adp = build_adp_from_anomaly(inst, t, w.h, node_cap)
    adp.reductions = reductions
    return adp
