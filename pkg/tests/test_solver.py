import random

import pytest

from cosetcsp.csp import Instance, is_solution
from cosetcsp.errors import BudgetExceeded, CapExceeded
from cosetcsp.io import load_problem
from cosetcsp.solver import (
    all_solutions,
    brute_force_solutions,
    extends_to_solution,
    frontier_order,
    iter_solutions,
    solve,
)
from cosetcsp.torus import TorusSpec, build_torus, twist

from conftest import brute_solutions, random_instance


def key(h):
    return tuple(sorted(h.items()))


def test_solver_matches_brute_force(templates):
    rng = random.Random(3)
    for _ in range(80):
        t = templates[rng.choice(["T2", "T3", "T4", "Z4"])]
        inst = random_instance(t, rng)
        expect = sorted(key(h) for h in brute_solutions(inst, t))
        got = sorted(key(h) for h in iter_solutions(inst, t))
        assert got == expect
        h = solve(inst, t)
        assert (h is None) == (not expect)
        if h is not None:
            assert is_solution(inst, t, h)


def test_solver_oracle_agrees_with_library_brute_force(templates):
    rng = random.Random(4)
    for _ in range(20):
        t = templates["Z4"]
        inst = random_instance(t, rng)
        assert sorted(map(key, brute_force_solutions(inst, t))) == sorted(map(key, brute_solutions(inst, t)))


def test_identity_first_on_subgroup_instance():
    inst, t = load_problem("witness_T3")
    assert solve(inst, t) == {e: 0 for e in inst.elements}


def test_fixed_values():
    inst, t = load_problem("witness_T3")
    assert not extends_to_solution(inst, t, {"x1": 1, "x2": 1, "x3": 1})
    assert extends_to_solution(inst, t, {"x1": 1, "x2": 1})


def test_solution_set_is_coset(templates):
    rng = random.Random(5)
    for _ in range(30):
        t = templates[rng.choice(["T3", "Z4"])]
        inst = random_instance(t, rng)
        ss = all_solutions(inst, t)
        assert ss.coset_certified is True


def test_cap_and_budget(templates, parity_adp):
    t = templates["T3"]
    inst = Instance([f"e{i}" for i in range(6)], [("R_even", (f"e{i}", f"e{i+1}", f"e{i+2}")) for i in range(4)])
    with pytest.raises(CapExceeded):
        all_solutions(inst, t, cap=3)
    t = parity_adp.template.copy()
    hard = build_torus(twist(TorusSpec(3, parity_adp), ("R", 0, 0), (1, 0, 0)), t)
    with pytest.raises(BudgetExceeded):
        solve(hard, t, node_cap=5)


def test_frontier_order_is_permutation():
    order = frontier_order(5, [(0, 4), (4, 2), (1, 3)])
    assert sorted(order) == list(range(5))


@pytest.mark.parametrize("n", [2, 3])
def test_twisted_torus_unsolvable(parity_adp, n):
    base = TorusSpec(n, parity_adp)
    t = parity_adp.template.copy()
    assert solve(build_torus(base, t), t) is not None
    tw = twist(base, ("R", 0, 0), (1, 0, 0))
    t = parity_adp.template.copy()
    inst = build_torus(tw, t)
    assert solve(inst, t) is None
    if n == 2:
        assert brute_solutions(inst, t) == []
