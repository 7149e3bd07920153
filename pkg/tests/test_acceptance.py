"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` (the lines are also shown
without ``-s``; they bypass output capture).
"""

import itertools
import random
import time

import pytest

from cosetcsp.anomaly import helly_pipeline, is_anomaly, reduce_anomaly_step, shrink_anomaly
from cosetcsp.consistency import (
    check_equivariance,
    check_fixpoint_locality,
    random_presolution,
    run_kl_consistency,
)
from cosetcsp.csp import Instance, act_assignment, act_instance, group_map, is_solution
from cosetcsp.groups import (
    ADPKind,
    CosetKind,
    all_subgroups,
    build_group,
    classify_almost_direct,
    classify_subset,
    cyclic,
    is_commutative,
    klein4,
    product,
    quotient_adp,
    symmetric,
    translate,
)
from cosetcsp.io import assignment_from_json, load_adp, load_problem, read_json
from cosetcsp.polymorphism import find_majority_polymorphism, is_majority_polymorphism
from cosetcsp.pp import materialize_pp
from cosetcsp.solver import iter_solutions, solve
from cosetcsp.torus import (
    Certificate,
    NeighborhoodGraph,
    TorusSpec,
    build_torus,
    default_twist,
    exhaustive_removals,
    fooling_experiment,
    random_removals,
    single_twist_unsolvable,
    slots,
    telescoping_check,
    twist,
)

from conftest import CORPUS_INSTANCES, brute_solutions, random_instance

BUNDLED_GROUPS = [cyclic(n) for n in range(1, 9)] + [klein4(), symmetric(3)]
EVEN = {(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)}


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail="", start=None, limit=None):
        elapsed = time.perf_counter() - start if start is not None else None
        within = limit is None or elapsed is None or elapsed < limit
        verdict = "PASS" if ok and within else "FAIL"
        timing = f" [{elapsed:.1f}s" + (f" < {limit}s]" if limit else "]") if elapsed is not None else ""
        with capsys.disabled():
            print(f"\ncriterion {number:>2} {title}: {verdict}{timing} {detail}".rstrip())
        assert ok, detail
        assert within, f"runtime {elapsed:.1f}s exceeds {limit}s"
    return emit


def _malcev(g, s):
    return all(g.mul(g.mul(x, g.inv(y)), z) in s for x in s for y in s for z in s)


def test_criterion_1_group_core(report):
    start = time.perf_counter()
    problems = []
    for g in BUNDLED_GROUPS:
        # Cayley validation of the group and of its cube
        build_group(g.table, g.label)
        cube, _ = product([g, g, g]).as_group()
        build_group(cube.table)
        # exhaustive Malcev classification against the full triple test
        els = list(g.elements())
        for size in range(1, len(els) + 1):
            for s in itertools.combinations(els, size):
                c = classify_subset(g, s)
                if c.is_coset != _malcev(g, set(s)):
                    problems.append((g.label, s))
        # translate closure: cosets of every subgroup are permuted by translation
        for h in all_subgroups(g):
            cosets = {translate(h, r) for r in els}
            if sum(map(len, cosets)) != g.order:
                problems.append((g.label, "partition", h.members))
            for c in cosets:
                if any(translate(c, p) not in cosets for p in els):
                    problems.append((g.label, "closure", c.members))
    # 3-factor products: every subgroup's translates stay cosets of it
    for factors in ([cyclic(2)] * 3, [cyclic(3)] * 3, [cyclic(4), cyclic(2), cyclic(2)]):
        amb = product(factors)
        for h in all_subgroups(amb):
            for p in amb.elements():
                c = translate(h, p)
                if not c.is_coset or translate(c, amb.inv(p)) != h:
                    problems.append((amb.label, h.members, p))
    z22 = product([cyclic(2), cyclic(2)])
    subsets = [s for k in range(1, 5) for s in itertools.combinations(list(z22.elements()), k)]
    cosets = sum(classify_subset(z22, s).is_coset for s in subsets)
    ok = not problems and len(subsets) == 15 and cosets == 11
    report(1, "group-core laws", ok, f"Z2^2 cosets {cosets}/15, problems {len(problems)}",
           start, 5)


def test_criterion_2_adp_sweep(report):
    start = time.perf_counter()
    checked = bad = 0
    z2, z4 = cyclic(2), cyclic(4)
    for factors in itertools.product([z2, z4], repeat=3):
        amb = product(factors)
        for h in all_subgroups(amb):
            if classify_almost_direct(h) is ADPKind.NOT_ADP:
                continue
            checked += 1
            q = quotient_adp(h)
            if classify_almost_direct(q.image) is not ADPKind.STRICT_ADP or not is_commutative(q.image):
                bad += 1
    report(2, "ADP sweep", bad == 0 and checked > 0, f"{checked} ADPs, {bad} exceptions", start, 30)


def test_criterion_3_two_helly_frontier(templates, report):
    start = time.perf_counter()
    m2 = find_majority_polymorphism(templates["T2"])
    m3 = find_majority_polymorphism(templates["T3"])
    m4 = find_majority_polymorphism(templates["T4"])
    ok = m2 is not None and is_majority_polymorphism(templates["T2"], m2) and m3 is None and m4 is None
    report(3, "2-Helly frontier", ok,
           f"T2 {'majority' if m2 else 'none'}, T3 {'majority' if m3 else 'none'}, "
           f"T4 {'majority' if m4 else 'none'}", start, 60)


def test_criterion_4_anomaly_pipeline(report):
    start = time.perf_counter()
    inst, t = load_problem("witness_T3")
    h = assignment_from_json(read_json("witness_T3")["anomaly"])
    adp = helly_pipeline(t, inst, h)
    s_ok = all(s.members == (0, 1) and s.kind is CosetKind.SUBGROUP for s in adp.S)
    r_ok = set(adp.R) == EVEN and adp.classification is ADPKind.STRICT_ADP
    pp_ok = (materialize_pp(t, adp.pp_witnesses["R"]) == adp.R
             and materialize_pp(t, adp.pp_witnesses["H"]) == adp.H
             and all(tuple(m[0] for m in materialize_pp(t, adp.pp_witnesses[f"S{i + 1}"]))
                     == adp.S[i].members for i in range(3)))

    inst4, t4 = load_problem("witness_T4")
    h4 = assignment_from_json(read_json("witness_T4")["anomaly"])
    w = shrink_anomaly(inst4, t4, h4)
    reductions = 0
    cur = inst4
    while w.j > 3:
        cur, w = reduce_anomaly_step(cur, t4, w)
        reductions += 1
    # brute-force re-verification of the final witness
    sols = brute_solutions(cur, t4)
    ext = lambda g: any(all(s[a] == v for a, v in g.items()) for s in sols)  # noqa: E731
    final_ok = (not ext(w.h)
                and all(ext({a: w.h[a] for a in sub}) for sub in itertools.combinations(w.h, w.j - 1))
                and is_anomaly(cur, t4, w.h, w.j - 1))
    adp4 = helly_pipeline(t4, inst4, h4)
    ok = s_ok and r_ok and pp_ok and reductions >= 1 and final_ok and adp4.reductions >= 1
    report(4, "anomaly pipeline", ok,
           f"T3: S_i=Z2 {s_ok}, R even {r_ok}, pp round-trip {pp_ok}; "
           f"T4: reductions {reductions}, final witness verified {final_ok}", start, 60)


def test_criterion_5_torus_correctness(parity_adp, report):
    start = time.perf_counter()
    problems = []
    for n in (2, 3, 4):
        spec = TorusSpec(n, parity_adp)
        t = parity_adp.template.copy()
        inst = build_torus(spec, t)
        zero = {e: 0 for e in inst.elements}
        if not is_solution(inst, t, zero) or solve(inst, t) != zero:
            problems.append(("all-R", n))
    twisted = 0
    amb = parity_adp.R.ambient
    non_r = sorted({translate(parity_adp.R, p).representative for p in amb.elements()} - {amb.identity})
    for n in (2, 3):
        base = TorusSpec(n, parity_adp)
        for slot in slots(n):
            for pi in non_r:
                spec = twist(base, slot, pi)
                t = parity_adp.template.copy()
                inst = build_torus(spec, t)
                cert = single_twist_unsolvable(spec)
                solver = solve(inst, t)
                if cert is not Certificate.UNSOLVABLE or solver is not None:
                    problems.append((n, slot, pi))
                if n == 2 and brute_solutions(inst, t):
                    problems.append(("brute", slot, pi))
                twisted += 1
    report(5, "torus correctness", not problems,
           f"{twisted} single-twist variants, {len(problems)} disagreements", start, 120)


def _punctured(spec, omitted):
    t = spec.adp.template.copy()
    inst = build_torus(spec, t)
    keep = [c for c, s in zip(inst.constraints, slots(spec.n)) if s != omitted]
    return Instance(inst.elements, keep), t


def test_criterion_6_telescoping(parity_adp, report):
    start = time.perf_counter()
    bad = 0
    counted2 = 0
    for omitted in slots(2):
        spec = TorusSpec(2, parity_adp)
        inst, t = _punctured(spec, omitted)
        for h in brute_solutions(inst, t):
            r = telescoping_check(spec, h, omitted)
            counted2 += 1
            bad += not (r["images_equal"] and r["omitted_in_R"])
    spec3 = TorusSpec(3, parity_adp)
    omitted = ("R", 1, 2)
    inst, t = _punctured(spec3, omitted)
    seen = set()
    for seed in range(400):
        h = next(iter_solutions(inst, t, rng=random.Random(seed)))
        seen.add(tuple(h[e] for e in inst.elements))
        r = telescoping_check(spec3, h, omitted)
        bad += not (r["images_equal"] and r["omitted_in_R"])
        if len(seen) >= 100 and seed >= 99:
            break
    sampled = seed + 1
    ok = bad == 0 and counted2 > 0 and len(seen) >= 100
    report(6, "telescoping identity", ok,
           f"n=2: {counted2} solutions (all slots omitted in turn); n=3: {sampled} samples, "
           f"{len(seen)} distinct; {bad} exceptions", start)


def test_criterion_7_small_triangulation(report):
    start = time.perf_counter()
    bad = 0
    cases = 0
    g4 = NeighborhoodGraph(4)
    for removed in exhaustive_removals(4, 3):
        j = len(removed)
        cases += 1
        bad += g4.largest_component(removed) < 2 * 16 - j * j
    rng = random.Random(2024)
    for n in (6, 8):
        g = NeighborhoodGraph(n)
        for _ in range(1000):
            j = rng.randint(1, n - 1)
            removed = random_removals(n, j, 1, rng)[0]
            cases += 1
            bad += g.largest_component(removed) < 2 * n * n - j * j
    report(7, "small triangulation", bad == 0, f"{cases} removal sets, {bad} violations", start)


def _corpus_draw(rng, templates, parity_adp):
    kind = rng.randrange(3)
    if kind == 0:
        inst, t = load_problem(rng.choice(CORPUS_INSTANCES))
        return inst, t.copy()
    if kind == 1:
        adp = parity_adp if rng.random() < 0.7 else load_adp(rng.choice(["adp_z4sum", "adp_z4even"]))
        spec = TorusSpec(2, adp)
        if rng.random() < 0.5:
            spec = twist(spec, rng.choice(slots(2)), tuple(rng.choice(list(adp.R.ambient.elements()))))
        t = adp.template.copy()
        return build_torus(spec, t), t
    t = templates[rng.choice(["T2", "T3", "T4", "Z4"])].copy()
    return random_instance(t, rng), t


def test_criterion_8_equivariance(templates, parity_adp, report):
    start = time.perf_counter()
    rng = random.Random(8)
    trace_bad = 0
    for _ in range(100):
        inst, t = _corpus_draw(rng, templates, parity_adp)
        s = random_presolution(inst, t, rng)
        trace_bad += not check_equivariance(inst, t, s, 2, 3)
    action_bad = 0
    with_solutions = 0
    for _ in range(1000):
        inst, t = _corpus_draw(rng, templates, parity_adp)
        groups = group_map(inst, t)
        s = random_presolution(inst, t, rng)
        h = solve(inst, t) if rng.random() < 0.5 else None
        if h is None:
            h = {e: rng.randrange(g.order) for e, g in groups.items()}
        with_solutions += is_solution(inst, t, h)
        moved = act_instance(inst, s, t)
        action_bad += is_solution(inst, t, h) != is_solution(moved, t, act_assignment(h, s, groups))
    report(8, "equivariance", trace_bad == 0 and action_bad == 0,
           f"100 trace comparisons ({trace_bad} mismatches); 1000 action triples "
           f"({with_solutions} with solutions, {action_bad} mismatches)", start)


def test_criterion_9_fooling(parity_adp, report):
    start = time.perf_counter()
    rep = fooling_experiment(parity_adp, 2, 3, range(2, 7))
    n0 = rep["minimal_fooling_n"]
    consistent = all(
        (r["solver"], r["certificate"]) == (("solvable", "NotApplicable") if r["variant"] == "all-R"
                                            else ("unsolvable", "Unsolvable"))
        for r in rep["records"])
    ok = n0 is not None and n0 <= 6 and consistent
    report(9, "fooling demonstration", ok, f"minimal fooling n = {n0}", start, 300)


def test_criterion_10_consistency_claims(templates, parity_adp, report):
    start = time.perf_counter()
    rng = random.Random(10)
    runs = []
    for name in CORPUS_INSTANCES:
        inst, t = load_problem(name)
        runs.append((inst, t.copy()))
    for name in ("adp_parity", "adp_z4sum", "adp_z4even"):
        adp = load_adp(name)
        for n in (2, 3):
            base = TorusSpec(n, adp)
            for spec in (base, twist(base, ("R", 0, 0), default_twist(adp))):
                t = adp.template.copy()
                runs.append((build_torus(spec, t), t))
    for _ in range(40):
        t = templates[rng.choice(["T2", "T3", "T4", "Z4"])].copy()
        runs.append((random_instance(t, rng), t))
    accepting = bad_nonempty = bad_local = 0
    for inst, t in runs:
        res = run_kl_consistency(inst, t, 2, 3)
        if not res.accept:
            continue
        accepting += 1
        bad_nonempty += not res.all_nonempty
        bad_local += not check_fixpoint_locality(res, inst, t, rng, samples=3)
    report(10, "consistency internal claims", bad_nonempty == 0 and bad_local == 0 and accepting > 0,
           f"{accepting} accepting fixpoints of {len(runs)} runs; empty-family {bad_nonempty}, "
           f"locality {bad_local}", start)
