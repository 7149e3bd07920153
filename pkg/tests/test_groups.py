import itertools

import pytest
from hypothesis import given, settings, strategies as st

from cosetcsp.errors import EmptySet, NotADPInput, NotAGroup, NotCosetInput, NotSubgroup
from cosetcsp.groups import (
    ADPKind,
    CosetKind,
    all_subgroups,
    build_group,
    classify_almost_direct,
    classify_subset,
    component_kernel,
    cyclic,
    equivalence_class,
    generate_subgroup,
    group_from_spec,
    group_to_spec,
    is_commutative,
    klein4,
    product,
    quotient_adp,
    restrict_group,
    subgroup_of,
    symmetric,
    translate,
)

SMALL = [cyclic(1), cyclic(2), cyclic(3), cyclic(4), klein4(), cyclic(6), symmetric(3), cyclic(8)]


def malcev_closed(g, s):
    # full triple test, no shortcuts
    return all(g.mul(g.mul(x, g.inv(y)), z) in s for x in s for y in s for z in s)


def coset_oracle(g, s):
    """Right coset test from the definition: S = K*r for a subgroup K."""
    s = set(s)
    for r in s:
        k = {g.mul(x, g.inv(r)) for x in s}
        closed = all(g.mul(a, b) in k for a in k for b in k)
        if closed and g.identity in k:
            return True
    return False


def all_nonempty_subsets(g):
    els = list(g.elements())
    for size in range(1, len(els) + 1):
        yield from itertools.combinations(els, size)


def test_cyclic_table():
    g = cyclic(5)
    assert g.order == 5
    assert g.mul(3, 4) == 2
    assert g.inv(2) == 3
    assert g.label == "Z5"


def test_build_group_rejects_non_associative():
    # a Latin square with identity that is not associative (order 5 loop)
    t = [
        [0, 1, 2, 3, 4],
        [1, 0, 3, 4, 2],
        [2, 4, 0, 1, 3],
        [3, 2, 4, 0, 1],
        [4, 3, 1, 2, 0],
    ]
    with pytest.raises(NotAGroup):
        build_group(t)


def test_build_group_rejects_missing_identity_and_inverse():
    with pytest.raises(NotAGroup):
        build_group([[1, 1], [1, 1]])
    with pytest.raises(NotAGroup):
        build_group([[0, 1], [1, 1]])


def test_spec_round_trip():
    for g in SMALL:
        assert group_from_spec(group_to_spec(g)) == g
    assert group_from_spec("cyclic:4") == cyclic(4)


@pytest.mark.parametrize("g", SMALL, ids=lambda g: g.label)
def test_cayley_laws(g):
    e = g.identity
    for x in g.elements():
        assert g.mul(e, x) == x == g.mul(x, e)
        assert g.mul(x, g.inv(x)) == e
        for y in g.elements():
            for z in g.elements():
                assert g.mul(g.mul(x, y), z) == g.mul(x, g.mul(y, z))


@pytest.mark.parametrize("g", [cyclic(2), cyclic(3), cyclic(4), klein4(), symmetric(3)],
                         ids=lambda g: g.label)
def test_classify_subset_matches_oracles(g):
    for s in all_nonempty_subsets(g):
        c = classify_subset(g, s)
        assert c.is_coset == malcev_closed(g, set(s)) == coset_oracle(g, s)
        if c.is_coset:
            assert (c.kind is CosetKind.SUBGROUP) == (g.identity in s)


def test_klein_four_has_eleven_coset_subsets():
    g = product([cyclic(2), cyclic(2)])
    subsets = list(itertools.chain.from_iterable(
        itertools.combinations(list(g.elements()), k) for k in range(1, 5)))
    assert len(subsets) == 15
    assert sum(classify_subset(g, s).is_coset for s in subsets) == 11


def test_classify_empty_raises():
    with pytest.raises(EmptySet):
        classify_subset(cyclic(3), [])


def test_s3_right_cosets_differ_from_left():
    g = symmetric(3)
    subs = [h for h in all_subgroups(g) if len(h) == 2]
    found = False
    for h in subs:
        for r in g.elements():
            right = {g.mul(x, r) for x in h}
            left = {g.mul(r, x) for x in h}
            assert classify_subset(g, right).is_coset
            if right != left:
                found = True
    assert found


def test_translate_properties():
    g = product([cyclic(2), cyclic(2), cyclic(2)])
    even = classify_subset(g, [x for x in g.elements() if sum(x) % 2 == 0])
    odd = translate(even, (1, 0, 0))
    assert odd.kind is CosetKind.COSET
    assert set(odd) == {x for x in g.elements() if sum(x) % 2 == 1}
    assert translate(even, (1, 1, 0)) == even
    assert translate(odd, (1, 0, 0)) == even
    assert subgroup_of(odd) == even
    with pytest.raises(NotCosetInput):
        translate(classify_subset(g, [(0, 0, 0), (1, 0, 0), (0, 1, 0)]), (1, 0, 0))


@pytest.mark.parametrize("g", [cyclic(4), klein4(), symmetric(3)], ids=lambda g: g.label)
def test_translate_closure_exhaustive(g):
    for h in all_subgroups(g):
        cosets = {translate(h, r) for r in g.elements()}
        # cosets partition the group
        assert sum(len(c) for c in cosets) == g.order
        for c in cosets:
            assert c.is_coset
            for pi in g.elements():
                assert translate(c, pi) in cosets


def test_all_subgroups_counts():
    assert len(all_subgroups(cyclic(6))) == 4
    assert len(all_subgroups(klein4())) == 5
    assert len(all_subgroups(symmetric(3))) == 6
    assert len(all_subgroups(product([cyclic(2)] * 3))) == 16


def test_generate_subgroup():
    g = cyclic(6)
    assert generate_subgroup(g, [2]).members == (0, 2, 4)
    assert generate_subgroup(g, []).members == (0,)


def test_restrict_group():
    g = cyclic(8)
    h = generate_subgroup(g, [2])
    r, emb = restrict_group(h)
    assert r.order == 4 and emb == (0, 2, 4, 6)
    assert is_commutative(r)
    with pytest.raises(NotSubgroup):
        restrict_group(translate(h, 1))


PARITY = [x for x in itertools.product(range(2), repeat=3) if sum(x) % 2 == 0]


def test_parity_is_strict_adp():
    g = product([cyclic(2)] * 3)
    h = classify_subset(g, PARITY)
    assert classify_almost_direct(h) is ADPKind.STRICT_ADP
    assert classify_almost_direct(classify_subset(g, g.elements())) is ADPKind.NOT_ADP


def test_z4_even_sum_is_non_strict_adp():
    g = product([cyclic(4)] * 3)
    h = classify_subset(g, [x for x in g.elements() if sum(x) % 2 == 0])
    assert classify_almost_direct(h) is ADPKind.ADP
    assert component_kernel(h, 0).members == (0, 2)
    q = quotient_adp(h)
    assert classify_almost_direct(q.image) is ADPKind.STRICT_ADP
    assert is_commutative(q.image)
    assert [m.target.order for m in q.maps] == [2, 2, 2]
    assert equivalence_class(h, 0, 1) == equivalence_class(h, 0, 3) != equivalence_class(h, 0, 0)


def test_quotient_adp_rejects_non_adp():
    g = product([cyclic(2)] * 3)
    with pytest.raises(NotADPInput):
        quotient_adp(classify_subset(g, [(0, 0, 0)]))
    with pytest.raises(NotSubgroup):
        classify_almost_direct(classify_subset(g, [(1, 0, 0)]))


def adp_oracle(h, g):
    """Definition-level check, written independently of the library."""
    mem = set(h)
    if len(mem) == g.order:
        return None
    f = g.factors
    for a, b in [(0, 1), (0, 2), (1, 2)]:
        if {(m[a], m[b]) for m in mem} != set(itertools.product(range(f[a].order), range(f[b].order))):
            return None
    strict = all(
        len({m[c] for m in mem if (m[a], m[b]) == key}) == 1
        for a, b, c in [(0, 1, 2), (0, 2, 1), (1, 2, 0)]
        for key in {(m[a], m[b]) for m in mem}
    )
    return ADPKind.STRICT_ADP if strict else ADPKind.ADP


@pytest.mark.parametrize("factors", [[cyclic(2)] * 3, [cyclic(4), cyclic(2), cyclic(2)],
                                     [cyclic(4)] * 3, [cyclic(3)] * 3],
                         ids=["Z2^3", "Z4xZ2xZ2", "Z4^3", "Z3^3"])
def test_adp_sweep_matches_oracle(factors):
    g = product(factors)
    for h in all_subgroups(g):
        expect = adp_oracle(h, g) or ADPKind.NOT_ADP
        assert classify_almost_direct(h) is expect
        if expect is not ADPKind.NOT_ADP:
            q = quotient_adp(h)
            assert classify_almost_direct(q.image) is ADPKind.STRICT_ADP
            assert is_commutative(q.image)
            # R is closed under the coordinate equivalences
            for m in h:
                for axis in range(3):
                    for x in range(factors[axis].order):
                        if q.maps[axis](x) == q.maps[axis](m[axis]):
                            moved = list(m)
                            moved[axis] = x
                            assert tuple(moved) in h


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([cyclic(4), klein4(), symmetric(3), cyclic(6)]), st.data())
def test_random_subsets_classify_like_oracle(g, data):
    s = data.draw(st.sets(st.integers(0, g.order - 1), min_size=1))
    assert classify_subset(g, s).is_coset == coset_oracle(g, s)
