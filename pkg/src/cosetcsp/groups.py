"""Exact finite-group arithmetic on Cayley tables.

Groups are dense index tables: elements are ``0 .. order-1`` and the
operation is ``table[x][y]``, written in diagrammatic order (``x`` first).
Products of groups work on tuples of factor indices.  Subsets of either
kind of group are held as :class:`CosetSet` objects, which carry a
canonical sorted member list and a coset/subgroup classification.
Cosets are right cosets throughout.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptySet, NotADPInput, NotAGroup, NotCosetInput, NotSubgroup

DEFAULT_MAX_ORDER = 512


class FiniteGroup:
    """A finite group given by its Cayley table."""

    __slots__ = ("order", "table", "identity", "inverse", "label", "_array")

    def __init__(self, table, identity, inverse, label=""):
        self.table = tuple(tuple(map(int, row)) for row in table)
        self.order = len(self.table)
        self.identity = int(identity)
        self.inverse = tuple(int(v) for v in inverse)
        self.label = label
        self._array = None

    @property
    def array(self) -> np.ndarray:
        if self._array is None:
            self._array = np.asarray(self.table, dtype=np.int64)
        return self._array

    def mul(self, x: int, y: int) -> int:
        return self.table[x][y]

    def inv(self, x: int) -> int:
        return self.inverse[x]

    def elements(self) -> range:
        return range(self.order)

    def __contains__(self, x) -> bool:
        return isinstance(x, (int, np.integer)) and 0 <= x < self.order

    def __eq__(self, other):
        return isinstance(other, FiniteGroup) and self.table == other.table

    def __hash__(self):
        return hash(self.table)

    def __repr__(self):
        return f"FiniteGroup({self.label or '?'}, order={self.order})"


def build_group(table, label: str = "", max_order: int = DEFAULT_MAX_ORDER) -> FiniteGroup:
    """Validate a Cayley table and return the group it defines.

    Raises :class:`NotAGroup` naming the first law that fails.
    """
    if isinstance(table, np.ndarray):
        t = table
    else:
        rows = [list(r) for r in table]
        for r, row in enumerate(rows):
            if len(row) != len(rows):
                raise NotAGroup(f"row {r} has length {len(row)}, expected {len(rows)}")
        t = np.asarray(rows)
    n = t.shape[0] if t.ndim == 2 else len(t)
    if n == 0:
        raise NotAGroup("empty table")
    if n > max_order:
        raise NotAGroup(f"order {n} exceeds cap {max_order}")
    if t.ndim != 2 or t.shape != (n, n):
        raise NotAGroup(f"table is not square: shape {t.shape}")
    if t.dtype.kind not in "iu":
        raise NotAGroup(f"entries must be integers, got {t.dtype}")
    bad = np.argwhere((t < 0) | (t >= n))
    if len(bad):
        r, c = bad[0]
        raise NotAGroup(f"entry {t[r, c]!r} in row {r} out of range")
    t = t.astype(np.int64)
    idx = np.arange(n)

    identity = None
    for e in range(n):
        if np.array_equal(t[e], idx) and np.array_equal(t[:, e], idx):
            identity = e
            break
    if identity is None:
        raise NotAGroup("no identity element")

    inverse = []
    for x in range(n):
        cands = np.nonzero((t[x] == identity) & (t[:, x] == identity))[0]
        if len(cands) == 0:
            raise NotAGroup(f"element {x} has no inverse")
        inverse.append(int(cands[0]))

    # (xy)z == x(yz), one x at a time to bound memory
    for x in range(n):
        if not np.array_equal(t[t[x]], t[x][t]):
            raise NotAGroup(f"associativity fails for x={x}")
    return FiniteGroup(t.tolist(), identity, inverse, label)


def cyclic(n: int) -> FiniteGroup:
    return build_group([[(i + j) % n for j in range(n)] for i in range(n)], f"Z{n}")


def klein4() -> FiniteGroup:
    return build_group([[i ^ j for j in range(4)] for i in range(4)], "K4")


def symmetric(n: int) -> FiniteGroup:
    """Symmetric group on ``n`` points, elements in lexicographic permutation order.

    The product ``x*y`` applies ``x`` first, then ``y``.
    """
    perms = list(itertools.permutations(range(n)))
    index = {p: i for i, p in enumerate(perms)}
    table = [[index[tuple(q[p[k]] for k in range(n))] for q in perms] for p in perms]
    return build_group(table, f"S{n}")


def group_from_spec(spec) -> FiniteGroup:
    """Build a group from a preset string or a ``{"label", "table"|"preset"}`` dict."""
    if isinstance(spec, str):
        return _preset(spec)
    if not isinstance(spec, dict):
        raise NotAGroup(f"unsupported group spec {spec!r}")
    if "preset" in spec:
        g = _preset(spec["preset"])
    elif "table" in spec:
        g = build_group(spec["table"])
    else:
        raise NotAGroup("group spec needs 'table' or 'preset'")
    if spec.get("label"):
        g.label = spec["label"]
    return g


def _preset(name: str) -> FiniteGroup:
    kind, _, arg = name.partition(":")
    if kind == "cyclic" and arg.isdigit() and int(arg) > 0:
        return cyclic(int(arg))
    if kind == "klein4" and not arg:
        return klein4()
    if kind == "symmetric" and arg.isdigit() and 1 <= int(arg) <= 5:
        return symmetric(int(arg))
    raise NotAGroup(f"unknown group preset {name!r}")


def group_to_spec(g: FiniteGroup) -> dict:
    return {"label": g.label, "table": [list(r) for r in g.table]}


class ProductGroup:
    """Direct product of finite groups; elements are tuples of factor indices."""

    __slots__ = ("factors", "identity", "order", "__weakref__")

    def __init__(self, factors: Sequence[FiniteGroup]):
        if not factors:
            raise ValueError("a product needs at least one factor")
        self.factors = tuple(factors)
        self.identity = tuple(g.identity for g in self.factors)
        order = 1
        for g in self.factors:
            order *= g.order
        self.order = order

    @property
    def label(self) -> str:
        return "x".join(g.label or "?" for g in self.factors)

    def mul(self, x: tuple, y: tuple) -> tuple:
        return tuple(g.table[a][b] for g, a, b in zip(self.factors, x, y))

    def inv(self, x: tuple) -> tuple:
        return tuple(g.inverse[a] for g, a in zip(self.factors, x))

    def elements(self) -> Iterable[tuple]:
        return itertools.product(*(range(g.order) for g in self.factors))

    def __len__(self):
        return len(self.factors)

    def __contains__(self, x) -> bool:
        return (
            isinstance(x, tuple)
            and len(x) == len(self.factors)
            and all(a in g for g, a in zip(self.factors, x))
        )

    def __eq__(self, other):
        return isinstance(other, ProductGroup) and self.factors == other.factors

    def __hash__(self):
        return hash(self.factors)

    def __repr__(self):
        return f"ProductGroup({self.label})"

    def as_group(self) -> tuple[FiniteGroup, list[tuple]]:
        """Flatten to a :class:`FiniteGroup`; returns the group and index -> tuple list."""
        elems = list(self.elements())
        # mixed-radix index, first factor most significant (matches elements())
        table = np.zeros((1, 1), dtype=np.int64)
        for f in self.factors:
            ft = f.array
            table = (table[:, None, :, None] * f.order + ft[None, :, None, :]).reshape(
                table.shape[0] * f.order, table.shape[1] * f.order)
        return build_group(table, self.label), elems


def product(factors: Sequence[FiniteGroup]) -> ProductGroup:
    return ProductGroup(factors)


class CosetKind(enum.Enum):
    NOT_COSET = "NotCoset"
    COSET = "Coset"
    SUBGROUP = "Subgroup"


@dataclass(frozen=True, eq=False)
class CosetSet:
    """An explicit nonempty subset of a group with its coset classification."""

    ambient: object
    members: tuple
    kind: CosetKind
    _set: frozenset = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_set", frozenset(self.members))

    @property
    def representative(self):
        return self.members[0]

    @property
    def is_coset(self) -> bool:
        return self.kind is not CosetKind.NOT_COSET

    def __contains__(self, x) -> bool:
        return x in self._set

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def __eq__(self, other):
        return (
            isinstance(other, CosetSet)
            and self.ambient == other.ambient
            and self.members == other.members
        )

    def __hash__(self):
        return hash(self.members)

    def __repr__(self):
        return f"CosetSet({self.kind.value}, |{len(self.members)}| in {self.ambient!r})"


def _closed_coset(ambient, members: Sequence, member_set) -> bool:
    # Malcev closure with the middle argument pinned to one member; this is
    # equivalent to full x*y^-1*z closure and costs |S|^2 instead of |S|^3.
    pin = ambient.inv(members[0])
    mul = ambient.mul
    for x in members:
        xp = mul(x, pin)
        for z in members:
            if mul(xp, z) not in member_set:
                return False
    return True


def classify_subset(ambient, members: Iterable) -> CosetSet:
    """Sort, deduplicate and classify ``members`` as NotCoset, Coset or Subgroup."""
    mem = sorted(set(members))
    if not mem:
        raise EmptySet("empty subset")
    for x in mem:
        if x not in ambient:
            raise ValueError(f"{x!r} is not an element of {ambient!r}")
    mset = frozenset(mem)
    if ambient.order % len(mem) != 0 or not _closed_coset(ambient, mem, mset):
        kind = CosetKind.NOT_COSET
    elif ambient.identity in mset:
        kind = CosetKind.SUBGROUP
    else:
        kind = CosetKind.COSET
    return CosetSet(ambient, tuple(mem), kind)


def generate_subgroup(ambient, generators: Iterable = ()) -> CosetSet:
    """Smallest subgroup of ``ambient`` containing ``generators``."""
    gens = list(dict.fromkeys(generators))
    for g in gens:
        if g not in ambient:
            raise ValueError(f"{g!r} is not an element of {ambient!r}")
    seen = {ambient.identity}
    frontier = [ambient.identity]
    mul = ambient.mul
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = mul(x, g)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return CosetSet(ambient, tuple(sorted(seen)), CosetKind.SUBGROUP)


def translate(c: CosetSet, pi) -> CosetSet:
    """Right translate ``c * pi``."""
    if not c.is_coset:
        raise NotCosetInput(f"cannot translate a non-coset {c!r}")
    amb = c.ambient
    if pi not in amb:
        raise ValueError(f"{pi!r} is not an element of {amb!r}")
    mem = tuple(sorted(amb.mul(x, pi) for x in c.members))
    kind = CosetKind.SUBGROUP if amb.identity in mem else CosetKind.COSET
    return CosetSet(amb, mem, kind)


def subgroup_of(c: CosetSet) -> CosetSet:
    """The subgroup ``K`` with ``c = K * r`` for the representative ``r``."""
    if c.kind is CosetKind.SUBGROUP:
        return c
    return translate(c, c.ambient.inv(c.representative))


def _require_subgroup(h: CosetSet, factors: int | None = 3):
    if h.kind is not CosetKind.SUBGROUP:
        raise NotSubgroup(f"{h!r} is not a subgroup")
    if factors is not None:
        if not isinstance(h.ambient, ProductGroup) or len(h.ambient) != factors:
            raise ValueError(f"expected a subgroup of a {factors}-factor product")


def component_kernel(h: CosetSet, axis: int) -> CosetSet:
    """``{x in G_axis : (1,..,x,..,1) in H}`` for ``axis`` in 0..2."""
    _require_subgroup(h)
    amb = h.ambient
    ident = amb.identity
    mem = [
        m[axis]
        for m in h.members
        if all(m[j] == ident[j] for j in range(len(ident)) if j != axis)
    ]
    return CosetSet(amb.factors[axis], tuple(sorted(mem)), CosetKind.SUBGROUP)


class ADPKind(enum.Enum):
    NOT_ADP = "NotADP"
    ADP = "ADP"
    STRICT_ADP = "StrictADP"


def classify_almost_direct(h: CosetSet) -> ADPKind:
    """Classify a subgroup of a 3-factor product as (strict) almost-direct or not."""
    _require_subgroup(h)
    amb = h.ambient
    if len(h) == amb.order:
        return ADPKind.NOT_ADP
    strict = True
    for axis in range(3):
        others = [j for j in range(3) if j != axis]
        need = amb.factors[others[0]].order * amb.factors[others[1]].order
        witnesses: dict[tuple, int] = {}
        for m in h.members:
            key = (m[others[0]], m[others[1]])
            witnesses[key] = witnesses.get(key, 0) + 1
        if len(witnesses) < need:
            return ADPKind.NOT_ADP
        if any(v != 1 for v in witnesses.values()):
            strict = False
    return ADPKind.STRICT_ADP if strict else ADPKind.ADP


@dataclass(frozen=True)
class QuotientMap:
    source: FiniteGroup
    kernel: CosetSet
    target: FiniteGroup
    projection: tuple

    def __call__(self, x: int) -> int:
        return self.projection[x]

    def preimage(self, y: int) -> list[int]:
        return [x for x, p in enumerate(self.projection) if p == y]


def quotient(g: FiniteGroup, n: CosetSet) -> QuotientMap:
    """Quotient of ``g`` by a normal subgroup ``n``; classes are numbered by least member."""
    if n.kind is not CosetKind.SUBGROUP or n.ambient != g:
        raise NotSubgroup("kernel must be a subgroup of the source group")
    nset = n._set
    for x in g.elements():
        xi = g.inverse[x]
        if any(g.table[g.table[xi][m]][x] not in nset for m in n.members):
            raise NotSubgroup(f"kernel is not normal (conjugation by {x})")
    proj = [-1] * g.order
    reps = []
    for x in g.elements():
        if proj[x] < 0:
            cls = len(reps)
            reps.append(x)
            for m in n.members:
                proj[g.table[m][x]] = cls
    table = [[proj[g.table[a][b]] for b in reps] for a in reps]
    target = build_group(table, f"{g.label}/N" if g.label else "")
    return QuotientMap(g, n, target, tuple(proj))


@dataclass(frozen=True)
class AdpQuotient:
    """The quotient of an almost-direct product by its component kernels."""

    kernels: tuple
    maps: tuple
    image: CosetSet

    @property
    def groups(self) -> tuple:
        return tuple(m.target for m in self.maps)

    def project(self, x: tuple) -> tuple:
        return tuple(m(a) for m, a in zip(self.maps, x))


def quotient_adp(h: CosetSet) -> AdpQuotient:
    if classify_almost_direct(h) is ADPKind.NOT_ADP:
        raise NotADPInput(f"{h!r} is not an almost-direct product")
    kernels = tuple(component_kernel(h, i) for i in range(3))
    maps = tuple(quotient(h.ambient.factors[i], kernels[i]) for i in range(3))
    target = ProductGroup([m.target for m in maps])
    image = {tuple(m(a) for m, a in zip(maps, x)) for x in h.members}
    return AdpQuotient(kernels, maps, classify_subset(target, image))


def is_commutative(g) -> bool:
    if isinstance(g, FiniteGroup):
        a = g.array
        return bool(np.array_equal(a, a.T))
    if isinstance(g, CosetSet):
        _require_subgroup(g, factors=None)
        mul = g.ambient.mul
        mem = g.members
        return all(mul(x, y) == mul(y, x) for i, x in enumerate(mem) for y in mem[i + 1:])
    raise TypeError(f"cannot test commutativity of {g!r}")


def equivalence_class(h: CosetSet, axis: int, x: int) -> int:
    """Class id of ``x`` under the coordinate equivalence of ``h`` at ``axis``.

    Classes are the cosets of the component kernel, numbered as in
    :func:`quotient`.  Requires ``h`` to project onto the whole factor.
    """
    _require_subgroup(h)
    factor = h.ambient.factors[axis]
    if len({m[axis] for m in h.members}) != factor.order:
        raise ValueError("subgroup does not project onto the whole factor")
    return quotient(factor, component_kernel(h, axis))(x)


def restrict_group(s: CosetSet, label: str = "") -> tuple[FiniteGroup, tuple]:
    """Turn a subgroup of a :class:`FiniteGroup` into a standalone group.

    Returns the group and the embedding (local index -> ambient element).
    """
    if s.kind is not CosetKind.SUBGROUP or not isinstance(s.ambient, FiniteGroup):
        raise NotSubgroup("restrict_group needs a subgroup of a FiniteGroup")
    emb = s.members
    local = {x: i for i, x in enumerate(emb)}
    g = s.ambient
    table = [[local[g.table[a][b]] for b in emb] for a in emb]
    return build_group(table, label or g.label), emb


def all_subgroups(ambient) -> list[CosetSet]:
    """Every subgroup of a small group, by closing cyclic subgroups under joins."""
    subs = {}
    for x in ambient.elements():
        c = generate_subgroup(ambient, [x])
        subs[c.members] = (c, [x])
    frontier = list(subs.values())
    cyclic_gens = [gens[0] for _, gens in frontier]
    while frontier:
        nxt = []
        for c, gens in frontier:
            for g in cyclic_gens:
                if g in c:
                    continue
                j = generate_subgroup(ambient, gens + [g])
                if j.members not in subs:
                    subs[j.members] = (j, gens + [g])
                    nxt.append(subs[j.members])
        frontier = nxt
    return sorted((c for c, _ in subs.values()), key=lambda c: (len(c), c.members))
