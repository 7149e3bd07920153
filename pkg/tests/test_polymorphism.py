import itertools

from cosetcsp.polymorphism import find_majority_polymorphism, is_majority_polymorphism


def test_t2_majority(templates):
    m = find_majority_polymorphism(templates["T2"])
    assert m is not None
    assert is_majority_polymorphism(templates["T2"], m)
    # over Z2 every majority operation is the boolean majority
    for (x, y, z), v in m.items():
        assert v[1] == int(x[1] + y[1] + z[1] >= 2)


def test_t3_t4_have_none(templates):
    assert find_majority_polymorphism(templates["T3"]) is None
    assert find_majority_polymorphism(templates["T4"]) is None


def test_boolean_majority_breaks_parity(templates):
    """Independent check: the only candidate (boolean majority) violates R_even of arity 3."""
    maj = lambda a, b, c: int(a + b + c >= 2)  # noqa: E731
    rel = set(templates["T3"].relation("R_even").coset)
    broken = any(
        tuple(maj(*col) for col in zip(r1, r2, r3)) not in rel
        for r1, r2, r3 in itertools.product(rel, repeat=3)
    )
    assert broken


def test_verifier_rejects_projection(templates):
    t = templates["T2"]
    m = find_majority_polymorphism(t)
    bad = dict(m)
    k = next(k for k in bad if len({k[0], k[1], k[2]}) == 2)
    # flip the value on a near-unanimous triple
    bad[k] = ("Z2", 1 - bad[k][1])
    assert not is_majority_polymorphism(t, bad)
