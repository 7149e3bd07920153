import itertools
import random
import sys
from pathlib import Path

import pytest

from cosetcsp.csp import Instance
from cosetcsp.io import load_adp, load_problem, load_template

sys.path.insert(0, str(Path(__file__).parent))

CORPUS_INSTANCES = ["example_T3", "witness_T3", "witness_T4"]


@pytest.fixture(scope="session")
def templates():
    return {name: load_template(name) for name in ("T2", "T3", "T4", "Z4")}


@pytest.fixture(scope="session")
def parity_adp():
    return load_adp("adp_parity")


@pytest.fixture
def problem():
    return load_problem


def brute_solutions(inst, t):
    """Every solution by full enumeration; independent of the solver."""
    from cosetcsp.csp import element_groups

    groups = element_groups(inst, t)
    out = []
    for vals in itertools.product(*(range(g.order) for g in groups)):
        h = dict(zip(inst.elements, vals))
        if all(tuple(h[a] for a in c.args) in t.relation(c.rel) for c in inst.constraints):
            out.append(h)
    return out


def random_instance(t, rng: random.Random, max_elements=5, max_constraints=4):
    """A small random instance over the base relations of ``t``, all elements constrained."""
    rels = [r for r in t.base_names]
    while True:
        n = rng.randint(2, max_elements)
        names = [f"e{i}" for i in range(n)]
        cons = []
        for _ in range(rng.randint(1, max_constraints)):
            rel = rng.choice(rels)
            ar = t.relation(rel).arity
            cons.append((rel, tuple(rng.choice(names) for _ in range(ar))))
        used = [e for e in names if any(e in args for _, args in cons)]
        sig = {}
        ok = True
        for rel, args in cons:
            for a, lab in zip(args, t.relation(rel).signature):
                if sig.setdefault(a, lab) != lab:
                    ok = False
        if ok and len(used) >= 2:
            return Instance(used, cons)
